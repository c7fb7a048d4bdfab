#pragma once

// Property suites run by `ordlin verify`, and the finite-difference check of
// the analytic gradient.

#include <cstdint>
#include <string>
#include <vector>

#include "ordlin/scorer.hpp"

namespace ordlin {

struct GradCheckReport {
  std::size_t checked = 0;  // coordinates compared
  std::size_t passed = 0;
  std::size_t kinks = 0;    // skipped: a max switched coordinate inside [-h, h]
  double worst_rel = 0.0;
  double pass_fraction() const { return checked == 0 ? 1.0 : static_cast<double>(passed) / checked; }
};

/// Central differences of loss_grad(...).total() against the analytic
/// gradient. Relative error is |a - d| / max(|a|, |d|, abs_floor).
GradCheckReport gradient_check(const ModelParameters& params, const Example& ex, const OrderLossOptions& opts,
                               double h = 1e-4, double tol = 1e-4, double abs_floor = 1e-6);

/// Random small model and ROOT-prefixed random tree example, for gradient checks.
struct GradCheckCase {
  ModelParameters params;
  Example example;
};
GradCheckCase random_gradcheck_case(std::uint64_t seed, ContextKind context);

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Instances have up to `n` tokens; each suite runs `trials` random cases.
std::vector<SuiteResult> run_property_suites(int n, int trials, std::uint64_t seed);

}  // namespace ordlin
