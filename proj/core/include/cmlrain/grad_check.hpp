#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cmlrain/autodiff.hpp"

namespace cmlrain::ad {

struct GradCheckReport {
  double max_rel_err = 0.0;
  double tol = 0.0;
  std::string worst;  // "param[flat_index]"
  bool pass() const { return max_rel_err < tol; }
};

// Central finite differences against reverse-mode gradients.
//
// `params` are the leaves to check; `build_loss` must rebuild the scalar
// loss graph from the leaves' *current* values on every call (it is invoked
// 2 x total-parameter-count times) and must be deterministic, so dropout
// has to be disabled inside it. Relative error per coordinate is
// |g_ad - g_fd| / max(1, |g_ad|, |g_fd|).
GradCheckReport grad_check(
    const std::vector<std::pair<std::string, NodePtr>>& params,
    const std::function<NodePtr()>& build_loss, double h, double tol);

}  // namespace cmlrain::ad
