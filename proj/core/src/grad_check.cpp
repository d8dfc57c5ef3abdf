#include "cmlrain/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "cmlrain/errors.hpp"

namespace cmlrain::ad {

GradCheckReport grad_check(
    const std::vector<std::pair<std::string, NodePtr>>& params,
    const std::function<NodePtr()>& build_loss, double h, double tol) {
  NodePtr loss = build_loss();
  if (loss->value.size() != 1) {
    throw NonScalarLoss("grad_check loss has shape " + loss->value.shape_str());
  }
  for (const auto& [name, p] : params) {
    (void)name;
    p->zero_grad();
  }
  backward(loss);

  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const auto& [name, p] : params) {
    (void)name;
    analytic.push_back(p->grad_or_zeros());
  }

  GradCheckReport report;
  report.tol = tol;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    NodePtr p = params[pi].second;
    for (int64_t i = 0; i < p->value.size(); ++i) {
      double orig = p->value[i];
      p->value[i] = orig + h;
      double f_plus = build_loss()->value[0];
      p->value[i] = orig - h;
      double f_minus = build_loss()->value[0];
      p->value[i] = orig;
      double g_fd = (f_plus - f_minus) / (2.0 * h);
      double g_ad = analytic[pi][i];
      double rel = std::abs(g_ad - g_fd) /
                   std::max({1.0, std::abs(g_ad), std::abs(g_fd)});
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst = params[pi].first + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

}  // namespace cmlrain::ad
