#include "ftacl/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace ftacl {

double check_gradients(const std::function<TensorPtr()>& loss_fn,
                       const std::vector<TensorPtr>& params, double h) {
  if (h <= 0) throw TensorError("check_gradients: h must be positive");
  for (const auto& p : params) p->zero_grad();
  TensorPtr loss = loss_fn();
  backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p->grad);

  double max_rel = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    for (std::size_t j = 0; j < p.data.size(); ++j) {
      const double saved = p.data[j];
      p.data[j] = saved + h;
      const double fp = loss_fn()->data[0];
      p.data[j] = saved - h;
      const double fm = loss_fn()->data[0];
      p.data[j] = saved;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[i][j];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      max_rel = std::max(max_rel, std::fabs(a - numeric) / denom);
    }
  }
  return max_rel;
}

}  // namespace ftacl
