#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace cmlrain {

// Dense row-major tensor of 64-bit reals. Shapes are small (rank <= 3 in
// practice) and values are immutable once an op has produced them, so
// read-only sharing across threads is safe.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor full(std::vector<int> shape, double v);
  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

  const std::vector<int>& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  double& at(std::initializer_list<int> idx);
  double at(std::initializer_list<int> idx) const;

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool all_finite() const;

  std::string shape_str() const;
  static std::string shape_str(const std::vector<int>& shape);
  static int64_t shape_size(const std::vector<int>& shape);

private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

}  // namespace cmlrain
