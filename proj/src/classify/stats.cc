#include "mobgap/stats.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace mobgap {

MannWhitneyResult mann_whitney_u(std::span<double const> const a,
                                 std::span<double const> const b) {
  MannWhitneyResult r;
  auto const n1 = static_cast<double>(a.size());
  auto const n2 = static_cast<double>(b.size());
  if (a.empty() || b.empty()) {
    return r;
  }

  struct Obs {
    double v;
    bool first;
  };
  std::vector<Obs> all;
  all.reserve(a.size() + b.size());
  for (auto const v : a) {
    all.push_back({v, true});
  }
  for (auto const v : b) {
    all.push_back({v, false});
  }
  std::sort(begin(all), end(all),
            [](Obs const& x, Obs const& y) { return x.v < y.v; });

  auto rank_sum = 0.0;
  auto tie_term = 0.0;
  for (auto i = 0U; i < all.size();) {
    auto j = i;
    while (j < all.size() && all[j].v == all[i].v) {
      ++j;
    }
    auto const avg_rank = (static_cast<double>(i + j) + 1.0) / 2.0;
    for (auto k = i; k < j; ++k) {
      if (all[k].first) {
        rank_sum += avg_rank;
      }
    }
    auto const t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }

  auto const n = n1 + n2;
  r.u = rank_sum - n1 * (n1 + 1.0) / 2.0;
  auto const mean = n1 * n2 / 2.0;
  auto const var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) {
    return r;
  }
  auto const diff = std::abs(r.u - mean);
  r.z = std::max(0.0, diff - 0.5) / std::sqrt(var);
  r.p_value = std::min(1.0, std::erfc(r.z / std::sqrt(2.0)));
  return r;
}

std::string significance_stars(double const p) {
  if (p < 0.01) {
    return "***";
  }
  if (p < 0.05) {
    return "**";
  }
  if (p < 0.1) {
    return "*";
  }
  return "";
}

}  // namespace mobgap
