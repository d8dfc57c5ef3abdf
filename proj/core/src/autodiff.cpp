#include "cmlrain/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_set>

#include "cmlrain/errors.hpp"

namespace cmlrain::ad {

namespace {

std::atomic<uint64_t> g_next_id{1};
bool g_debug_checks = false;

void check_finite(const Tensor& t, const char* op) {
  if (g_debug_checks && !t.all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + op);
  }
}

NodePtr make_node(Tensor value, std::vector<NodePtr> parents,
                  std::function<void(Node&)> backprop, const char* op) {
  check_finite(value, op);
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  for (const auto& p : parents) {
    if (p->requires_grad) {
      n->requires_grad = true;
      break;
    }
  }
  n->parents = std::move(parents);
  if (n->requires_grad) n->backprop = std::move(backprop);
  return n;
}

int norm_axis(int axis, int ndim, const char* op) {
  if (axis < 0) axis += ndim;
  if (axis < 0 || axis >= ndim) {
    throw InvalidAxis(std::string(op) + ": axis " + std::to_string(axis) +
                      " out of range for rank " + std::to_string(ndim));
  }
  return axis;
}

// --- broadcasting helpers -------------------------------------------------

std::vector<int> broadcast_shape(const std::vector<int>& a,
                                 const std::vector<int>& b) {
  size_t n = std::max(a.size(), b.size());
  std::vector<int> out(n);
  for (size_t i = 0; i < n; ++i) {
    int da = i < n - a.size() ? 1 : a[i - (n - a.size())];
    int db = i < n - b.size() ? 1 : b[i - (n - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeMismatch("cannot broadcast " + Tensor::shape_str(a) + " with " +
                          Tensor::shape_str(b));
    }
    out[i] = std::max(da, db);
  }
  return out;
}

// Row-major strides padded with zeros where a dimension broadcasts.
std::vector<int64_t> broadcast_strides(const std::vector<int>& shape,
                                       const std::vector<int>& out_shape) {
  std::vector<int64_t> strides(out_shape.size(), 0);
  int64_t s = 1;
  size_t offset = out_shape.size() - shape.size();
  for (size_t i = shape.size(); i-- > 0;) {
    strides[i + offset] = (shape[i] == 1 && out_shape[i + offset] != 1) ? 0 : s;
    s *= shape[i];
  }
  return strides;
}

// True when `small` equals the trailing dimensions of `big` (leading 1s in
// `small` stripped), so the payload tiles contiguously.
bool is_suffix_shape(const std::vector<int>& small, const std::vector<int>& big) {
  size_t lead = 0;
  while (lead < small.size() && small[lead] == 1) ++lead;
  size_t n = small.size() - lead;
  if (n > big.size()) return false;
  for (size_t i = 0; i < n; ++i) {
    if (small[lead + i] != big[big.size() - n + i]) return false;
  }
  return true;
}

// True when `small` is `big` with the last dimension collapsed to 1.
bool is_inner_broadcast(const std::vector<int>& small, const std::vector<int>& big) {
  if (small.size() != big.size() || small.empty()) return false;
  if (small.back() != 1) return false;
  for (size_t i = 0; i + 1 < small.size(); ++i) {
    if (small[i] != big[i]) return false;
  }
  return true;
}

template <typename F>
Tensor broadcast_binary(const Tensor& a, const Tensor& b, F&& f) {
  if (a.same_shape(b)) {
    Tensor out(a.shape());
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (int64_t i = 0; i < out.size(); ++i) po[i] = f(pa[i], pb[i]);
    return out;
  }
  // Tiled fast path: bias adds [..xd] + [d], positional [BxLxd] + [1xLxd].
  if (is_suffix_shape(b.shape(), a.shape())) {
    Tensor out(a.shape());
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    int64_t tile = b.size();
    for (int64_t at = 0; at < out.size(); at += tile) {
      for (int64_t i = 0; i < tile; ++i) po[at + i] = f(pa[at + i], pb[i]);
    }
    return out;
  }
  if (is_suffix_shape(a.shape(), b.shape())) {
    Tensor out(b.shape());
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    int64_t tile = a.size();
    for (int64_t at = 0; at < out.size(); at += tile) {
      for (int64_t i = 0; i < tile; ++i) po[at + i] = f(pa[i], pb[at + i]);
    }
    return out;
  }
  // Pooling-weight pattern: [BxLxD] * [BxLx1].
  if (is_inner_broadcast(b.shape(), a.shape())) {
    Tensor out(a.shape());
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    int64_t inner = a.shape().back();
    for (int64_t row = 0; row < b.size(); ++row) {
      double bv = pb[row];
      for (int64_t i = 0; i < inner; ++i) {
        po[row * inner + i] = f(pa[row * inner + i], bv);
      }
    }
    return out;
  }
  if (is_inner_broadcast(a.shape(), b.shape())) {
    Tensor out(b.shape());
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    int64_t inner = b.shape().back();
    for (int64_t row = 0; row < a.size(); ++row) {
      double av = pa[row];
      for (int64_t i = 0; i < inner; ++i) {
        po[row * inner + i] = f(av, pb[row * inner + i]);
      }
    }
    return out;
  }
  std::vector<int> os = broadcast_shape(a.shape(), b.shape());
  Tensor out(os);
  auto sa = broadcast_strides(a.shape(), os);
  auto sb = broadcast_strides(b.shape(), os);
  std::vector<int64_t> idx(os.size(), 0);
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  int64_t oa = 0, ob = 0;
  for (int64_t i = 0; i < out.size(); ++i) {
    po[i] = f(pa[oa], pb[ob]);
    for (size_t d = os.size(); d-- > 0;) {
      ++idx[d];
      oa += sa[d];
      ob += sb[d];
      if (idx[d] < os[d]) break;
      oa -= sa[d] * os[d];
      ob -= sb[d] * os[d];
      idx[d] = 0;
    }
  }
  return out;
}

// Sums g down to `target` (the inverse of broadcasting in backward passes).
Tensor reduce_to_shape(const Tensor& g, const std::vector<int>& target) {
  if (g.shape() == target) return g;
  if (is_suffix_shape(target, g.shape())) {
    Tensor out(target);
    const double* pg = g.data();
    double* po = out.data();
    int64_t tile = out.size();
    for (int64_t at = 0; at < g.size(); at += tile) {
      for (int64_t i = 0; i < tile; ++i) po[i] += pg[at + i];
    }
    return out;
  }
  if (is_inner_broadcast(target, g.shape())) {
    Tensor out(target);
    const double* pg = g.data();
    double* po = out.data();
    int64_t inner = g.shape().back();
    for (int64_t row = 0; row < out.size(); ++row) {
      double s = 0.0;
      for (int64_t i = 0; i < inner; ++i) s += pg[row * inner + i];
      po[row] = s;
    }
    return out;
  }
  Tensor out(target);
  auto st = broadcast_strides(target, g.shape());
  std::vector<int64_t> idx(g.shape().size(), 0);
  const double* pg = g.data();
  double* po = out.data();
  int64_t ot = 0;
  const auto& gs = g.shape();
  for (int64_t i = 0; i < g.size(); ++i) {
    po[ot] += pg[i];
    for (size_t d = gs.size(); d-- > 0;) {
      ++idx[d];
      ot += st[d];
      if (idx[d] < gs[d]) break;
      ot -= st[d] * gs[d];
      idx[d] = 0;
    }
  }
  return out;
}

void accumulate(Node& n, const Tensor& g) {
  Tensor& dst = n.ensure_grad();
  const double* ps = g.data();
  double* pd = dst.data();
  for (int64_t i = 0; i < dst.size(); ++i) pd[i] += ps[i];
}

// --- gemm kernels ----------------------------------------------------------

// C[mxn] (+)= A[mxk] · B[kxn]
void gemm_nn(const double* A, const double* B, double* C, int m, int k, int n,
             bool acc) {
  if (!acc) std::fill(C, C + static_cast<int64_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i) {
    const double* ai = A + static_cast<int64_t>(i) * k;
    double* ci = C + static_cast<int64_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      double a = ai[p];
      if (a == 0.0) continue;
      const double* bp = B + static_cast<int64_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += a * bp[j];
    }
  }
}

// C[mxn] (+)= A[mxk] · B[nxk]^T
void gemm_nt(const double* A, const double* B, double* C, int m, int k, int n,
             bool acc) {
  for (int i = 0; i < m; ++i) {
    const double* ai = A + static_cast<int64_t>(i) * k;
    double* ci = C + static_cast<int64_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = B + static_cast<int64_t>(j) * k;
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = acc ? ci[j] + s : s;
    }
  }
}

// C[mxn] (+)= A[kxm]^T · B[kxn]
void gemm_tn(const double* A, const double* B, double* C, int m, int k, int n,
             bool acc) {
  if (!acc) std::fill(C, C + static_cast<int64_t>(m) * n, 0.0);
  for (int p = 0; p < k; ++p) {
    const double* ap = A + static_cast<int64_t>(p) * m;
    const double* bp = B + static_cast<int64_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      double a = ap[i];
      if (a == 0.0) continue;
      double* ci = C + static_cast<int64_t>(i) * n;
      for (int j = 0; j < n; ++j) ci[j] += a * bp[j];
    }
  }
}

// (outer, axis_len, inner) decomposition for axis-wise ops.
struct AxisSplit {
  int64_t outer = 1;
  int64_t len = 1;
  int64_t inner = 1;
};

AxisSplit split_axis(const std::vector<int>& shape, int axis) {
  AxisSplit s;
  for (int i = 0; i < axis; ++i) s.outer *= shape[i];
  s.len = shape[axis];
  for (size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

Tensor& Node::ensure_grad() {
  if (grad.empty()) grad = Tensor(value.shape());
  return grad;
}

void Node::zero_grad() {
  if (!grad.empty()) std::fill(grad.vec().begin(), grad.vec().end(), 0.0);
}

const Tensor& Node::grad_or_zeros() { return ensure_grad(); }

void set_debug_checks(bool on) { g_debug_checks = on; }
bool debug_checks() { return g_debug_checks; }

NodePtr constant(Tensor v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  return n;
}

NodePtr param(Tensor v) {
  auto n = constant(std::move(v));
  n->requires_grad = true;
  return n;
}

NodePtr add(const NodePtr& a, const NodePtr& b) {
  Tensor v = broadcast_binary(a->value, b->value, [](double x, double y) { return x + y; });
  NodePtr pa = a, pb = b;
  return make_node(
      std::move(v), {a, b},
      [pa, pb](Node& n) {
        if (pa->requires_grad) accumulate(*pa, reduce_to_shape(n.grad, pa->value.shape()));
        if (pb->requires_grad) accumulate(*pb, reduce_to_shape(n.grad, pb->value.shape()));
      },
      "add");
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
  Tensor v = broadcast_binary(a->value, b->value, [](double x, double y) { return x - y; });
  NodePtr pa = a, pb = b;
  return make_node(
      std::move(v), {a, b},
      [pa, pb](Node& n) {
        if (pa->requires_grad) accumulate(*pa, reduce_to_shape(n.grad, pa->value.shape()));
        if (pb->requires_grad) {
          Tensor neg(n.grad.shape());
          for (int64_t i = 0; i < neg.size(); ++i) neg[i] = -n.grad[i];
          accumulate(*pb, reduce_to_shape(neg, pb->value.shape()));
        }
      },
      "sub");
}

NodePtr mul(const NodePtr& a, const NodePtr& b) {
  Tensor v = broadcast_binary(a->value, b->value, [](double x, double y) { return x * y; });
  NodePtr pa = a, pb = b;
  return make_node(
      std::move(v), {a, b},
      [pa, pb](Node& n) {
        if (pa->requires_grad) {
          Tensor g = broadcast_binary(n.grad, pb->value, [](double gy, double y) { return gy * y; });
          accumulate(*pa, reduce_to_shape(g, pa->value.shape()));
        }
        if (pb->requires_grad) {
          Tensor g = broadcast_binary(n.grad, pa->value, [](double gy, double x) { return gy * x; });
          accumulate(*pb, reduce_to_shape(g, pb->value.shape()));
        }
      },
      "mul");
}

NodePtr scale(const NodePtr& a, double k) {
  Tensor v(a->value.shape());
  for (int64_t i = 0; i < v.size(); ++i) v[i] = a->value[i] * k;
  NodePtr pa = a;
  return make_node(
      std::move(v), {a},
      [pa, k](Node& n) {
        Tensor g(n.grad.shape());
        for (int64_t i = 0; i < g.size(); ++i) g[i] = n.grad[i] * k;
        accumulate(*pa, g);
      },
      "scale");
}

NodePtr add_scalar(const NodePtr& a, double k) {
  Tensor v(a->value.shape());
  for (int64_t i = 0; i < v.size(); ++i) v[i] = a->value[i] + k;
  NodePtr pa = a;
  return make_node(
      std::move(v), {a}, [pa](Node& n) { accumulate(*pa, n.grad); }, "add_scalar");
}

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
  const Tensor& A = a->value;
  const Tensor& B = b->value;
  NodePtr pa = a, pb = b;

  if (A.ndim() == 2 && B.ndim() == 2) {
    int m = A.dim(0), k = A.dim(1), n = B.dim(1);
    if (B.dim(0) != k) {
      throw ShapeMismatch("matmul " + A.shape_str() + " x " + B.shape_str());
    }
    Tensor C({m, n});
    gemm_nn(A.data(), B.data(), C.data(), m, k, n, false);
    return make_node(
        std::move(C), {a, b},
        [pa, pb, m, k, n](Node& node) {
          if (pa->requires_grad) {
            gemm_nt(node.grad.data(), pb->value.data(), pa->ensure_grad().data(), m, n, k, true);
          }
          if (pb->requires_grad) {
            gemm_tn(pa->value.data(), node.grad.data(), pb->ensure_grad().data(), k, m, n, true);
          }
        },
        "matmul");
  }

  if (A.ndim() == 3 && B.ndim() == 2) {
    int bs = A.dim(0), m = A.dim(1), k = A.dim(2), n = B.dim(1);
    if (B.dim(0) != k) {
      throw ShapeMismatch("matmul " + A.shape_str() + " x " + B.shape_str());
    }
    // Row-major [B*m x k] times [k x n] collapses to one gemm.
    Tensor C({bs, m, n});
    gemm_nn(A.data(), B.data(), C.data(), bs * m, k, n, false);
    return make_node(
        std::move(C), {a, b},
        [pa, pb, bs, m, k, n](Node& node) {
          if (pa->requires_grad) {
            gemm_nt(node.grad.data(), pb->value.data(), pa->ensure_grad().data(), bs * m, n, k, true);
          }
          if (pb->requires_grad) {
            gemm_tn(pa->value.data(), node.grad.data(), pb->ensure_grad().data(), k, bs * m, n, true);
          }
        },
        "matmul");
  }

  if (A.ndim() == 3 && B.ndim() == 3) {
    int bs = A.dim(0), m = A.dim(1), k = A.dim(2), n = B.dim(2);
    if (B.dim(0) != bs || B.dim(1) != k) {
      throw ShapeMismatch("matmul " + A.shape_str() + " x " + B.shape_str());
    }
    Tensor C({bs, m, n});
    for (int i = 0; i < bs; ++i) {
      gemm_nn(A.data() + static_cast<int64_t>(i) * m * k,
              B.data() + static_cast<int64_t>(i) * k * n,
              C.data() + static_cast<int64_t>(i) * m * n, m, k, n, false);
    }
    return make_node(
        std::move(C), {a, b},
        [pa, pb, bs, m, k, n](Node& node) {
          for (int i = 0; i < bs; ++i) {
            const double* gC = node.grad.data() + static_cast<int64_t>(i) * m * n;
            if (pa->requires_grad) {
              gemm_nt(gC, pb->value.data() + static_cast<int64_t>(i) * k * n,
                      pa->ensure_grad().data() + static_cast<int64_t>(i) * m * k, m, n, k, true);
            }
            if (pb->requires_grad) {
              gemm_tn(pa->value.data() + static_cast<int64_t>(i) * m * k, gC,
                      pb->ensure_grad().data() + static_cast<int64_t>(i) * k * n, k, m, n, true);
            }
          }
        },
        "matmul");
  }

  throw ShapeMismatch("matmul unsupported ranks " + A.shape_str() + " x " + B.shape_str());
}

NodePtr transpose(const NodePtr& a, int ax0, int ax1) {
  int nd = a->value.ndim();
  ax0 = norm_axis(ax0, nd, "transpose");
  ax1 = norm_axis(ax1, nd, "transpose");
  std::vector<int> os = a->value.shape();
  std::swap(os[ax0], os[ax1]);

  auto permute = [ax0, ax1, nd](const Tensor& in, const std::vector<int>& out_shape) {
    Tensor out(out_shape);
    const auto& is = in.shape();
    std::vector<int64_t> in_strides(nd, 1);
    for (int d = nd - 2; d >= 0; --d) in_strides[d] = in_strides[d + 1] * is[d + 1];
    std::vector<int64_t> strides = in_strides;
    std::swap(strides[ax0], strides[ax1]);
    std::vector<int64_t> idx(nd, 0);
    const double* pi = in.data();
    double* po = out.data();
    int64_t off = 0;
    for (int64_t i = 0; i < out.size(); ++i) {
      po[i] = pi[off];
      for (int d = nd; d-- > 0;) {
        ++idx[d];
        off += strides[d];
        if (idx[d] < out_shape[d]) break;
        off -= strides[d] * out_shape[d];
        idx[d] = 0;
      }
    }
    return out;
  };

  Tensor v = permute(a->value, os);
  NodePtr pa = a;
  return make_node(
      std::move(v), {a},
      [pa, permute](Node& n) { accumulate(*pa, permute(n.grad, pa->value.shape())); },
      "transpose");
}

NodePtr reshape(const NodePtr& a, std::vector<int> shape) {
  if (Tensor::shape_size(shape) != a->value.size()) {
    throw ShapeMismatch("reshape " + a->value.shape_str() + " -> " + Tensor::shape_str(shape));
  }
  Tensor v(shape, a->value.vec());
  NodePtr pa = a;
  return make_node(
      std::move(v), {a},
      [pa](Node& n) { accumulate(*pa, Tensor(pa->value.shape(), n.grad.vec())); },
      "reshape");
}

NodePtr concat(const std::vector<NodePtr>& xs, int axis) {
  if (xs.empty()) throw ShapeMismatch("concat of zero tensors");
  int nd = xs[0]->value.ndim();
  axis = norm_axis(axis, nd, "concat");
  std::vector<int> os = xs[0]->value.shape();
  int total = 0;
  for (const auto& x : xs) {
    if (x->value.ndim() != nd) throw ShapeMismatch("concat rank mismatch");
    for (int d = 0; d < nd; ++d) {
      if (d != axis && x->value.dim(d) != os[d]) {
        throw ShapeMismatch("concat shape mismatch at axis " + std::to_string(d));
      }
    }
    total += x->value.dim(axis);
  }
  os[axis] = total;
  Tensor v(os);
  AxisSplit s = split_axis(os, axis);
  int64_t out_row = s.len * s.inner;
  int64_t at = 0;
  for (const auto& x : xs) {
    int64_t xl = x->value.dim(axis) * s.inner;
    const double* px = x->value.data();
    for (int64_t o = 0; o < s.outer; ++o) {
      std::copy(px + o * xl, px + (o + 1) * xl, v.data() + o * out_row + at);
    }
    at += xl;
  }
  std::vector<NodePtr> parents = xs;
  return make_node(
      std::move(v), std::move(parents),
      [axis](Node& n) {
        AxisSplit s = split_axis(n.value.shape(), axis);
        int64_t out_row = s.len * s.inner;
        int64_t at = 0;
        for (auto& p : n.parents) {
          int64_t xl = p->value.dim(axis) * s.inner;
          if (p->requires_grad) {
            Tensor g(p->value.shape());
            for (int64_t o = 0; o < s.outer; ++o) {
              std::copy(n.grad.data() + o * out_row + at,
                        n.grad.data() + o * out_row + at + xl, g.data() + o * xl);
            }
            accumulate(*p, g);
          }
          at += xl;
        }
      },
      "concat");
}

NodePtr slice(const NodePtr& a, int axis, int start, int len) {
  int nd = a->value.ndim();
  axis = norm_axis(axis, nd, "slice");
  if (start < 0 || len <= 0 || start + len > a->value.dim(axis)) {
    throw ShapeMismatch("slice out of range");
  }
  std::vector<int> os = a->value.shape();
  os[axis] = len;
  Tensor v(os);
  AxisSplit s = split_axis(a->value.shape(), axis);
  int64_t in_row = s.len * s.inner;
  int64_t out_row = static_cast<int64_t>(len) * s.inner;
  const double* px = a->value.data();
  for (int64_t o = 0; o < s.outer; ++o) {
    std::copy(px + o * in_row + start * s.inner,
              px + o * in_row + start * s.inner + out_row, v.data() + o * out_row);
  }
  NodePtr pa = a;
  return make_node(
      std::move(v), {a},
      [pa, axis, start, len](Node& n) {
        AxisSplit s = split_axis(pa->value.shape(), axis);
        int64_t in_row = s.len * s.inner;
        int64_t out_row = static_cast<int64_t>(len) * s.inner;
        Tensor& g = pa->ensure_grad();
        for (int64_t o = 0; o < s.outer; ++o) {
          const double* src = n.grad.data() + o * out_row;
          double* dst = g.data() + o * in_row + start * s.inner;
          for (int64_t i = 0; i < out_row; ++i) dst[i] += src[i];
        }
      },
      "slice");
}

namespace {

NodePtr reduce_axis(const NodePtr& a, int axis, bool take_mean, const char* op) {
  int nd = a->value.ndim();
  axis = norm_axis(axis, nd, op);
  std::vector<int> os;
  for (int d = 0; d < nd; ++d) {
    if (d != axis) os.push_back(a->value.dim(d));
  }
  if (os.empty()) os.push_back(1);
  AxisSplit s = split_axis(a->value.shape(), axis);
  double w = take_mean ? 1.0 / static_cast<double>(s.len) : 1.0;
  Tensor v(os);
  const double* px = a->value.data();
  double* pv = v.data();
  for (int64_t o = 0; o < s.outer; ++o) {
    for (int64_t l = 0; l < s.len; ++l) {
      const double* row = px + (o * s.len + l) * s.inner;
      double* out = pv + o * s.inner;
      for (int64_t i = 0; i < s.inner; ++i) out[i] += row[i];
    }
  }
  if (take_mean) {
    for (int64_t i = 0; i < v.size(); ++i) pv[i] *= w;
  }
  NodePtr pa = a;
  return make_node(
      std::move(v), {a},
      [pa, s, w](Node& n) {
        Tensor& g = pa->ensure_grad();
        const double* pgy = n.grad.data();
        for (int64_t o = 0; o < s.outer; ++o) {
          for (int64_t l = 0; l < s.len; ++l) {
            double* row = g.data() + (o * s.len + l) * s.inner;
            const double* src = pgy + o * s.inner;
            for (int64_t i = 0; i < s.inner; ++i) row[i] += w * src[i];
          }
        }
      },
      op);
}

}  // namespace

NodePtr sum(const NodePtr& a, int axis) { return reduce_axis(a, axis, false, "sum"); }
NodePtr mean(const NodePtr& a, int axis) { return reduce_axis(a, axis, true, "mean"); }

NodePtr sum_all(const NodePtr& a) {
  double s = 0.0;
  for (int64_t i = 0; i < a->value.size(); ++i) s += a->value[i];
  NodePtr pa = a;
  return make_node(
      Tensor::scalar(s), {a},
      [pa](Node& n) {
        Tensor& g = pa->ensure_grad();
        double gy = n.grad[0];
        for (int64_t i = 0; i < g.size(); ++i) g[i] += gy;
      },
      "sum_all");
}

NodePtr mean_all(const NodePtr& a) {
  return scale(sum_all(a), 1.0 / static_cast<double>(a->value.size()));
}

NodePtr sigmoid(const NodePtr& a) {
  Tensor v(a->value.shape());
  for (int64_t i = 0; i < v.size(); ++i) {
    double x = a->value[i];
    v[i] = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  NodePtr pa = a;
  return make_node(
      std::move(v), {a},
      [pa](Node& n) {
        Tensor g(n.value.shape());
        for (int64_t i = 0; i < g.size(); ++i) {
          double y = n.value[i];
          g[i] = n.grad[i] * y * (1.0 - y);
        }
        accumulate(*pa, g);
      },
      "sigmoid");
}

NodePtr tanh(const NodePtr& a) {
  Tensor v(a->value.shape());
  for (int64_t i = 0; i < v.size(); ++i) v[i] = std::tanh(a->value[i]);
  NodePtr pa = a;
  return make_node(
      std::move(v), {a},
      [pa](Node& n) {
        Tensor g(n.value.shape());
        for (int64_t i = 0; i < g.size(); ++i) {
          double y = n.value[i];
          g[i] = n.grad[i] * (1.0 - y * y);
        }
        accumulate(*pa, g);
      },
      "tanh");
}

NodePtr relu(const NodePtr& a) {
  Tensor v(a->value.shape());
  for (int64_t i = 0; i < v.size(); ++i) v[i] = a->value[i] > 0 ? a->value[i] : 0.0;
  NodePtr pa = a;
  return make_node(
      std::move(v), {a},
      [pa](Node& n) {
        Tensor g(n.value.shape());
        for (int64_t i = 0; i < g.size(); ++i) {
          g[i] = pa->value[i] > 0 ? n.grad[i] : 0.0;
        }
        accumulate(*pa, g);
      },
      "relu");
}

NodePtr softplus(const NodePtr& a) {
  Tensor v(a->value.shape());
  for (int64_t i = 0; i < v.size(); ++i) {
    double x = a->value[i];
    // log(1+e^x) = max(x,0) + log1p(e^{-|x|}) avoids overflow.
    v[i] = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  }
  NodePtr pa = a;
  return make_node(
      std::move(v), {a},
      [pa](Node& n) {
        Tensor g(n.value.shape());
        for (int64_t i = 0; i < g.size(); ++i) {
          double x = pa->value[i];
          double s = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
          g[i] = n.grad[i] * s;
        }
        accumulate(*pa, g);
      },
      "softplus");
}

NodePtr softmax(const NodePtr& a, int axis) {
  int nd = a->value.ndim();
  axis = norm_axis(axis, nd, "softmax");
  AxisSplit s = split_axis(a->value.shape(), axis);
  Tensor v(a->value.shape());
  const double* px = a->value.data();
  double* pv = v.data();
  for (int64_t o = 0; o < s.outer; ++o) {
    for (int64_t i = 0; i < s.inner; ++i) {
      int64_t base = o * s.len * s.inner + i;
      double mx = px[base];
      for (int64_t l = 1; l < s.len; ++l) mx = std::max(mx, px[base + l * s.inner]);
      double denom = 0.0;
      for (int64_t l = 0; l < s.len; ++l) {
        double e = std::exp(px[base + l * s.inner] - mx);
        pv[base + l * s.inner] = e;
        denom += e;
      }
      for (int64_t l = 0; l < s.len; ++l) pv[base + l * s.inner] /= denom;
    }
  }
  NodePtr pa = a;
  return make_node(
      std::move(v), {a},
      [pa, s](Node& n) {
        // dx = y * (gy - sum(gy * y)) along the softmax axis.
        Tensor g(n.value.shape());
        const double* py = n.value.data();
        const double* pgy = n.grad.data();
        double* pg = g.data();
        for (int64_t o = 0; o < s.outer; ++o) {
          for (int64_t i = 0; i < s.inner; ++i) {
            int64_t base = o * s.len * s.inner + i;
            double dot = 0.0;
            for (int64_t l = 0; l < s.len; ++l) {
              int64_t idx = base + l * s.inner;
              dot += pgy[idx] * py[idx];
            }
            for (int64_t l = 0; l < s.len; ++l) {
              int64_t idx = base + l * s.inner;
              pg[idx] = py[idx] * (pgy[idx] - dot);
            }
          }
        }
        accumulate(*pa, g);
      },
      "softmax");
}

NodePtr layer_norm(const NodePtr& a, double eps) {
  int nd = a->value.ndim();
  int axis = nd - 1;
  AxisSplit s = split_axis(a->value.shape(), axis);
  Tensor v(a->value.shape());
  Tensor inv_std({static_cast<int>(s.outer)});
  const double* px = a->value.data();
  double* pv = v.data();
  for (int64_t o = 0; o < s.outer; ++o) {
    const double* row = px + o * s.len;
    double mean = 0.0;
    for (int64_t l = 0; l < s.len; ++l) mean += row[l];
    mean /= static_cast<double>(s.len);
    double var = 0.0;
    for (int64_t l = 0; l < s.len; ++l) {
      double d = row[l] - mean;
      var += d * d;
    }
    var /= static_cast<double>(s.len);
    double is = 1.0 / std::sqrt(var + eps);
    inv_std[o] = is;
    double* out = pv + o * s.len;
    for (int64_t l = 0; l < s.len; ++l) out[l] = (row[l] - mean) * is;
  }
  NodePtr pa = a;
  return make_node(
      std::move(v), {a},
      [pa, s, inv_std](Node& n) {
        // dx = inv_std * (gy - mean(gy) - yhat * mean(gy * yhat))
        Tensor g(n.value.shape());
        const double* py = n.value.data();
        const double* pgy = n.grad.data();
        double* pg = g.data();
        double inv_len = 1.0 / static_cast<double>(s.len);
        for (int64_t o = 0; o < s.outer; ++o) {
          const double* yrow = py + o * s.len;
          const double* grow = pgy + o * s.len;
          double m1 = 0.0, m2 = 0.0;
          for (int64_t l = 0; l < s.len; ++l) {
            m1 += grow[l];
            m2 += grow[l] * yrow[l];
          }
          m1 *= inv_len;
          m2 *= inv_len;
          double* out = pg + o * s.len;
          for (int64_t l = 0; l < s.len; ++l) {
            out[l] = inv_std[o] * (grow[l] - m1 - yrow[l] * m2);
          }
        }
        accumulate(*pa, g);
      },
      "layer_norm");
}

NodePtr dropout(const NodePtr& a, double p, bool train_mode, Rng& rng) {
  if (!train_mode || p == 0.0) return a;
  if (p < 0.0 || p >= 1.0) throw ConfigInvalid("dropout p must be in [0,1)");
  double keep = 1.0 - p;
  Tensor mask(a->value.shape());
  for (int64_t i = 0; i < mask.size(); ++i) {
    mask[i] = rng.uniform() < p ? 0.0 : 1.0 / keep;
  }
  Tensor v(a->value.shape());
  for (int64_t i = 0; i < v.size(); ++i) v[i] = a->value[i] * mask[i];
  NodePtr pa = a;
  return make_node(
      std::move(v), {a},
      [pa, mask](Node& n) {
        Tensor g(n.value.shape());
        for (int64_t i = 0; i < g.size(); ++i) g[i] = n.grad[i] * mask[i];
        accumulate(*pa, g);
      },
      "dropout");
}

void backward(const NodePtr& loss) {
  if (loss->value.size() != 1) {
    throw NonScalarLoss("backward needs a scalar, got " + loss->value.shape_str());
  }
  // Reachable subgraph, then reverse creation order = reverse topological
  // order (parents always predate children).
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{loss.get()};
  seen.insert(loss.get());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents) {
      if (seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(),
            [](const Node* x, const Node* y) { return x->id > y->id; });
  // Interior grads are scratch; leaf grads persist and accumulate.
  for (Node* n : order) {
    if (!n->is_leaf()) n->zero_grad();
  }
  loss->ensure_grad()[0] += 1.0;
  for (Node* n : order) {
    if (n->backprop && !n->grad.empty()) n->backprop(*n);
  }
}

}  // namespace cmlrain::ad
