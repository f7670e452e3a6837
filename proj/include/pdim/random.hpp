#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace pdim {

/// Model parameters: q is the pseudo-dimension exponent of the edge cost
/// distribution (CDF ~ x^q near 0), lambda is the edge-cost cutoff; the
/// quit penalty of the exploration game is lambda/2.
struct Params {
  double q = 1.0;
  double lambda = 1.0;

  double half() const { return 0.5 * lambda; }

  void validate() const {
    if (!(q > 0.0) || !(q <= 1.0))
      throw std::invalid_argument("Params: q must lie in (0,1]");
    if (!(lambda > 0.0))
      throw std::invalid_argument("Params: lambda must be positive");
  }
};

/// Counter-based stream selector. (master_seed, stream_index) maps to a
/// generator state through a pure hash, so parallel Monte Carlo tasks can
/// each claim an index and the results are independent of scheduling.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;

  SeedSpec with_stream(std::uint64_t index) const {
    return SeedSpec{master_seed, index};
  }
};

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t& state);

/// Deterministic generator for a stream; identical SeedSpec gives a
/// bit-identical sequence.
Rng derive_stream(const SeedSpec& seed);

/// Uniform draw on the open interval (0,1); never returns 0 or 1.
double uniform_open(Rng& rng);

/// Inversion map for Wei(1,q): x = (-ln u)^(1/q).
double weibull_from_uniform(double q, double u);

/// One Wei(1,q) draw; resamples on (vanishingly rare) non-finite results.
double sample_weibull(double q, Rng& rng);

/// Arrival times of the inhomogeneous Poisson process on [0,lambda] with
/// intensity q t^(q-1), sorted ascending. Count is Poisson(lambda^q) and,
/// given the count, arrivals are i.i.d. with CDF (t/lambda)^q.
std::vector<double> sample_poisson_arrivals(const Params& params, Rng& rng);

}  // namespace pdim
