#include "pdim/random.hpp"

#include <algorithm>
#include <cmath>

namespace pdim {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng derive_stream(const SeedSpec& seed) {
  // Mix both words through splitmix64 so that neighbouring stream indices
  // land in unrelated regions of the mt19937_64 state space.
  std::uint64_t s = seed.master_seed;
  std::uint64_t a = splitmix64(s);
  s ^= seed.stream_index * 0xD1342543DE82EF95ULL + 0x2545F4914F6CDD1DULL;
  std::uint64_t b = splitmix64(s);
  std::uint64_t c = splitmix64(s);
  std::uint64_t d = splitmix64(s);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                    static_cast<std::uint32_t>(d), static_cast<std::uint32_t>(d >> 32)};
  return Rng(seq);
}

double uniform_open(Rng& rng) {
  // 53 random bits shifted into (0,1): (k + 0.5) * 2^-53 with k in [0, 2^53).
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
}

double weibull_from_uniform(double q, double u) {
  return std::pow(-std::log(u), 1.0 / q);
}

double sample_weibull(double q, Rng& rng) {
  if (!(q > 0.0)) throw std::invalid_argument("sample_weibull: q must be positive");
  for (;;) {
    double x = weibull_from_uniform(q, uniform_open(rng));
    if (std::isfinite(x)) return x;
  }
}

std::vector<double> sample_poisson_arrivals(const Params& params, Rng& rng) {
  params.validate();
  const double mean = std::pow(params.lambda, params.q);
  std::poisson_distribution<long> count(mean);
  const long n = count(rng);
  std::vector<double> arrivals;
  arrivals.reserve(static_cast<std::size_t>(n));
  const double inv_q = 1.0 / params.q;
  for (long i = 0; i < n; ++i)
    arrivals.push_back(params.lambda * std::pow(uniform_open(rng), inv_q));
  std::sort(arrivals.begin(), arrivals.end());
  return arrivals;
}

}  // namespace pdim
