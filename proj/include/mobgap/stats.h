#pragma once

#include <span>
#include <string>

namespace mobgap {

struct MannWhitneyResult {
  double u{0.0};  // U statistic of the first sample
  double z{0.0};
  double p_value{1.0};  // two-sided, normal approximation
};

// Normal approximation with tie correction and continuity correction.
// Samples of size zero yield p = 1.
MannWhitneyResult mann_whitney_u(std::span<double const> a,
                                 std::span<double const> b);

// "***" for p < 0.01, "**" for p < 0.05, "*" for p < 0.1, else "".
std::string significance_stars(double p_value);

}  // namespace mobgap
