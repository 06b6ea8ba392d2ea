#pragma once

// Central finite-difference gradient verification. Every hand-wired backward
// in this codebase is gated on these checks.

#include <functional>

#include "vsr/tensor.hpp"

namespace vsr {

using ScalarFn = std::function<double(const Tensor&)>;

// Max over all coordinates of |analytic - numeric| / max(|analytic|, |numeric|, floor),
// numeric = (f(p + h e_i) - f(p - h e_i)) / 2h. The floor keeps near-zero
// coordinates — where central differences bottom out at roughly h^2 noise —
// from dividing noise by noise; pass a floor well below the gradient's
// working scale.
double gradient_check(const ScalarFn& f, const Tensor& analytic_grad, const Tensor& point,
                      double h, double floor = 1e-12);

// Same, but probes at most max_coords coordinates picked by rng (for composite
// networks where a full sweep is too slow).
double gradient_check_sampled(const ScalarFn& f, const Tensor& analytic_grad,
                              const Tensor& point, double h, std::int64_t max_coords,
                              Rng& rng, double floor = 1e-12);

// Probes network parameters in place: each picked coordinate is nudged by
// +-h, f() re-evaluated, and the central difference compared against the
// already-populated Parameter::grad. max_coords <= 0 sweeps everything.
double gradient_check_params(const std::function<double()>& f,
                             const std::vector<Parameter*>& params, double h,
                             std::int64_t max_coords, Rng& rng, double floor = 1e-12);

}  // namespace vsr
