#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "pdim/fixpoint.hpp"

namespace pdim {

/// Kolmogorov-Smirnov distance between the empirical anti-CDF of the
/// samples and a reference anti-CDF given as a callable z -> P(X >= z),
/// evaluated on the probe points. Handles atoms naturally since both
/// sides are compared as anti-CDFs at the same points.
template <typename AntiCdf>
double anti_cdf_ks(std::vector<double> xs, const std::vector<double>& probes,
                   AntiCdf&& reference) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double sup = 0.0;
  for (double z : probes) {
    const auto it = std::lower_bound(xs.begin(), xs.end(), z);
    const double tail = static_cast<double>(xs.end() - it) / n;
    sup = std::max(sup, std::abs(tail - reference(z)));
  }
  return sup;
}

inline double anti_cdf_ks(std::vector<double> xs, const GridFunction& F) {
  std::vector<double> probes(F.z.data(), F.z.data() + F.z.size());
  return anti_cdf_ks(std::move(xs), probes, [&](double z) { return F.eval(z); });
}

/// Two-sample KS distance on the pooled sample points.
inline double two_sample_ks(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  double sup = 0.0;
  for (double z : pooled) {
    const double ta =
        static_cast<double>(a.end() - std::lower_bound(a.begin(), a.end(), z)) / a.size();
    const double tb =
        static_cast<double>(b.end() - std::lower_bound(b.begin(), b.end(), z)) / b.size();
    sup = std::max(sup, std::abs(ta - tb));
  }
  return sup;
}

}  // namespace pdim
