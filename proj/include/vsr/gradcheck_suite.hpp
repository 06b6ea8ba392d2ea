#pragma once

// Named finite-difference checks over every hand-wired backward: single
// layers at tol 1e-6, full-network composites at 1e-4, all with h = 1e-5.

#include <string>
#include <vector>

#include "vsr/tensor.hpp"

namespace vsr {

struct GradCheckRow {
  std::string name;
  double max_rel = 0.0;
  double tol = 0.0;
  bool pass() const { return max_rel < tol; }
};

// `which` filters rows by name prefix; "all" runs the full registry. The
// special name "selftest-corrupted" runs a deliberately broken backward that
// must FAIL (detector sanity); it is excluded from "all". Returns an empty
// vector when nothing matches.
std::vector<GradCheckRow> run_gradcheck_suite(const std::string& which);

}  // namespace vsr
