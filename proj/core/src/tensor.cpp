#include "cmlrain/tensor.hpp"

#include <cmath>
#include <sstream>

#include "cmlrain/errors.hpp"

namespace cmlrain {

int64_t Tensor::shape_size(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ShapeMismatch("non-positive dimension in " + shape_str(shape));
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)),
      data_(static_cast<size_t>(shape_size(shape_)), 0.0) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != static_cast<int64_t>(data_.size())) {
    throw ShapeMismatch("data length " + std::to_string(data_.size()) +
                        " does not match shape " + shape_str(shape_));
  }
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::full(std::vector<int> shape, double v) {
  Tensor t(std::move(shape));
  for (auto& x : t.data_) x = v;
  return t;
}

double& Tensor::at(std::initializer_list<int> idx) {
  int64_t off = 0;
  auto it = idx.begin();
  for (size_t i = 0; i < shape_.size(); ++i, ++it) {
    off = off * shape_[i] + *it;
  }
  return data_[static_cast<size_t>(off)];
}

double Tensor::at(std::initializer_list<int> idx) const {
  return const_cast<Tensor*>(this)->at(idx);
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

std::string Tensor::shape_str() const { return shape_str(shape_); }

}  // namespace cmlrain
