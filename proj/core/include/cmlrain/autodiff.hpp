#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "cmlrain/rng.hpp"
#include "cmlrain/tensor.hpp"

namespace cmlrain::ad {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// One vertex of the dynamically built computation graph. Children hold
// shared_ptrs to parents only, so the graph is acyclic by construction.
struct Node {
  Tensor value;
  Tensor grad;  // lazily allocated; zeros until backward() touches it
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backprop;  // scatters this->grad into parents
  uint64_t id = 0;

  bool is_leaf() const { return parents.empty(); }
  Tensor& ensure_grad();
  void zero_grad();
  const Tensor& grad_or_zeros();  // allocates zeros on demand
};

NodePtr constant(Tensor v);
// Leaf with requires_grad = true; the handle training updates mutate.
NodePtr param(Tensor v);

// When enabled, every op asserts its output is finite (NaN/Inf guard).
void set_debug_checks(bool on);
bool debug_checks();

// Elementwise ops broadcast trailing dimensions (a dim of 1 stretches),
// which covers bias adds and the positional-encoding add [1xLxd] + [BxLxd].
NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr sub(const NodePtr& a, const NodePtr& b);
NodePtr mul(const NodePtr& a, const NodePtr& b);
NodePtr scale(const NodePtr& a, double k);
NodePtr add_scalar(const NodePtr& a, double k);

// [mxk]·[kxn], [Bxmxk]·[kxn] (shared right operand), or [Bxmxk]·[Bxkxn].
NodePtr matmul(const NodePtr& a, const NodePtr& b);

NodePtr transpose(const NodePtr& a, int ax0, int ax1);
NodePtr reshape(const NodePtr& a, std::vector<int> shape);
NodePtr concat(const std::vector<NodePtr>& xs, int axis);
NodePtr slice(const NodePtr& a, int axis, int start, int len);

NodePtr sum(const NodePtr& a, int axis);   // drops the axis
NodePtr mean(const NodePtr& a, int axis);  // drops the axis
NodePtr sum_all(const NodePtr& a);         // -> scalar [1]
NodePtr mean_all(const NodePtr& a);        // -> scalar [1]

NodePtr sigmoid(const NodePtr& a);
NodePtr tanh(const NodePtr& a);
NodePtr relu(const NodePtr& a);
NodePtr softplus(const NodePtr& a);
NodePtr softmax(const NodePtr& a, int axis);
// Normalizes the last axis to mean 0 / variance 1 (no affine part; apply
// gain and bias with mul/add so their gradients come from the usual ops).
NodePtr layer_norm(const NodePtr& a, double eps);
// Inverted dropout: train-time activations are scaled by 1/(1-p) so
// inference needs no rescaling. Identity when !train_mode or p == 0.
NodePtr dropout(const NodePtr& a, double p, bool train_mode, Rng& rng);

// Reverse-mode sweep from a scalar loss. Visits each reachable node exactly
// once in reverse topological order. Gradients of requires_grad leaves
// accumulate across calls; call zero_grad on the leaves to reset.
void backward(const NodePtr& loss);

}  // namespace cmlrain::ad
