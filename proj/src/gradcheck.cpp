#include "vsr/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace vsr {

namespace {

double probe(const ScalarFn& f, const Tensor& analytic_grad, Tensor& point, double h,
             std::int64_t i, double floor) {
  const double saved = point[i];
  point[i] = saved + h;
  const double fp = f(point);
  point[i] = saved - h;
  const double fm = f(point);
  point[i] = saved;
  if (!std::isfinite(fp) || !std::isfinite(fm))
    throw NumericError("gradient_check: non-finite function value at probe " + std::to_string(i));
  const double numeric = (fp - fm) / (2.0 * h);
  const double analytic = analytic_grad[i];
  return std::fabs(analytic - numeric) /
         std::max({std::fabs(analytic), std::fabs(numeric), floor});
}

}  // namespace

double gradient_check(const ScalarFn& f, const Tensor& analytic_grad, const Tensor& point,
                      double h, double floor) {
  check_same_shape(analytic_grad, point, "gradient_check");
  Tensor p = point;
  double worst = 0.0;
  for (std::int64_t i = 0; i < p.numel(); ++i)
    worst = std::max(worst, probe(f, analytic_grad, p, h, i, floor));
  return worst;
}

double gradient_check_sampled(const ScalarFn& f, const Tensor& analytic_grad,
                              const Tensor& point, double h, std::int64_t max_coords,
                              Rng& rng, double floor) {
  check_same_shape(analytic_grad, point, "gradient_check");
  Tensor p = point;
  const std::int64_t n = p.numel();
  if (n <= max_coords) return gradient_check(f, analytic_grad, point, h, floor);
  double worst = 0.0;
  for (std::int64_t k = 0; k < max_coords; ++k)
    worst = std::max(worst, probe(f, analytic_grad, p, h, rng.index(n), floor));
  return worst;
}

double gradient_check_params(const std::function<double()>& f,
                             const std::vector<Parameter*>& params, double h,
                             std::int64_t max_coords, Rng& rng, double floor) {
  std::int64_t total = 0;
  for (const Parameter* p : params) total += p->value.numel();
  if (total == 0) throw ConfigError("gradient_check_params: no parameters");

  auto probe_at = [&](std::int64_t flat) {
    for (Parameter* p : params) {
      if (flat >= p->value.numel()) {
        flat -= p->value.numel();
        continue;
      }
      double& w = p->value[flat];
      const double saved = w;
      w = saved + h;
      const double fp = f();
      w = saved - h;
      const double fm = f();
      w = saved;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw NumericError("gradient_check_params: non-finite value probing '" + p->name + "'");
      const double numeric = (fp - fm) / (2.0 * h);
      const double analytic = p->grad[flat];
      return std::fabs(analytic - numeric) /
             std::max({std::fabs(analytic), std::fabs(numeric), floor});
    }
    throw ConfigError("gradient_check_params: probe index out of range");
  };

  double worst = 0.0;
  if (max_coords <= 0 || max_coords >= total) {
    for (std::int64_t i = 0; i < total; ++i) worst = std::max(worst, probe_at(i));
  } else {
    for (std::int64_t k = 0; k < max_coords; ++k)
      worst = std::max(worst, probe_at(rng.index(total)));
  }
  return worst;
}

}  // namespace vsr
