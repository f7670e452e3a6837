#include "pdim/matching.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "pdim/parallel.hpp"

namespace pdim {

MatchingResult solve_assignment(const AssignmentInstance& instance) {
  const auto& c = instance.costs;
  const int n = static_cast<int>(c.rows());
  if (c.cols() != c.rows() || n < 1)
    throw std::invalid_argument("solve_assignment: cost matrix must be square and nonempty");
  if ((c.array() < 0.0).any() || !c.allFinite())
    throw std::invalid_argument("solve_assignment: costs must be finite and nonnegative");

  const double inf = std::numeric_limits<double>::infinity();
  // 1-based arrays with a virtual column 0, as in the classical O(n^3)
  // shortest augmenting path formulation. u, v are the node potentials.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0);  // match[j] = row matched to column j
  std::vector<int> way(n + 1, 0);

  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }

  MatchingResult result;
  result.assignment.assign(n, -1);
  for (int j = 1; j <= n; ++j) result.assignment[match[j] - 1] = j - 1;
  result.dual_row = Eigen::VectorXd(n);
  result.dual_col = Eigen::VectorXd(n);
  for (int i = 0; i < n; ++i) result.dual_row(i) = u[i + 1];
  for (int j = 0; j < n; ++j) result.dual_col(j) = v[j + 1];
  result.total_cost = 0.0;
  for (int i = 0; i < n; ++i) result.total_cost += c(i, result.assignment[i]);
  return result;
}

AssignmentInstance sample_instance(int n, double q, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_instance: n must be >= 1");
  AssignmentInstance instance;
  instance.costs.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) instance.costs(i, j) = sample_weibull(q, rng);
  return instance;
}

namespace {

MeanStdErr welford(const std::vector<double>& xs) {
  MeanStdErr out;
  double mean = 0.0, m2 = 0.0;
  long k = 0;
  for (double x : xs) {
    ++k;
    const double d = x - mean;
    mean += d / static_cast<double>(k);
    m2 += d * (x - mean);
  }
  out.samples = k;
  out.mean = mean;
  out.std_err = k > 1 ? std::sqrt(m2 / (static_cast<double>(k) * (k - 1))) : 0.0;
  return out;
}

}  // namespace

MeanStdErr estimate_scaled_cost(int n, double q, long samples, SeedSpec seed,
                                int jobs) {
  if (samples < 2) throw std::invalid_argument("estimate_scaled_cost: need samples >= 2");
  const double scale = std::pow(static_cast<double>(n), -1.0 + 1.0 / q);
  std::vector<double> scaled(static_cast<std::size_t>(samples));
  parallel_for(samples, jobs, [&](long i) {
    Rng rng = derive_stream(seed.with_stream(seed.stream_index + static_cast<std::uint64_t>(i)));
    AssignmentInstance instance = sample_instance(n, q, rng);
    scaled[static_cast<std::size_t>(i)] = scale * solve_assignment(instance).total_cost;
  });
  return welford(scaled);
}

double parisi_reference(long n) {
  if (n < 1) throw std::invalid_argument("parisi_reference: n must be >= 1");
  // Summing smallest terms first keeps the rounding error at machine level.
  double sum = 0.0;
  for (long k = n; k >= 1; --k) sum += 1.0 / (static_cast<double>(k) * static_cast<double>(k));
  return sum;
}

BetaEstimate extrapolate_beta_from_means(double q,
                                         std::vector<BetaEstimate::PerSize> per_n) {
  if (per_n.size() < 3)
    throw std::invalid_argument("extrapolate_beta: need at least 3 sizes");
  std::sort(per_n.begin(), per_n.end(),
            [](const auto& a, const auto& b) { return a.n < b.n; });
  for (std::size_t i = 1; i < per_n.size(); ++i)
    if (per_n[i].n == per_n[i - 1].n)
      throw std::invalid_argument("extrapolate_beta: sizes must be distinct");

  // Weighted least squares for mean = beta + b/n; weights 1/SE^2 when
  // standard errors are available, uniform otherwise.
  double s_w = 0, s_wx = 0, s_wy = 0, s_wxx = 0, s_wxy = 0;
  for (const auto& p : per_n) {
    const double x = 1.0 / static_cast<double>(p.n);
    const double w = p.std_err > 0 ? 1.0 / (p.std_err * p.std_err) : 1.0;
    s_w += w;
    s_wx += w * x;
    s_wy += w * p.mean;
    s_wxx += w * x * x;
    s_wxy += w * x * p.mean;
  }
  const double det = s_w * s_wxx - s_wx * s_wx;
  if (!(std::abs(det) > 0))
    throw std::invalid_argument("extrapolate_beta: degenerate fit");
  const double beta = (s_wxx * s_wy - s_wx * s_wxy) / det;
  const double slope = (s_w * s_wxy - s_wx * s_wy) / det;

  // Uncertainty: parameter variance from the weights, inflated by the
  // reduced chi-square when the residuals exceed the Monte Carlo errors.
  double chi2 = 0.0;
  for (const auto& p : per_n) {
    const double x = 1.0 / static_cast<double>(p.n);
    const double r = p.mean - beta - slope * x;
    const double w = p.std_err > 0 ? 1.0 / (p.std_err * p.std_err) : 1.0;
    chi2 += w * r * r;
  }
  const double dof = static_cast<double>(per_n.size()) - 2.0;
  const double inflation = dof > 0 ? std::max(1.0, chi2 / dof) : 1.0;
  const double var_beta = s_wxx / det * inflation;

  BetaEstimate estimate;
  estimate.q = q;
  estimate.per_n = std::move(per_n);
  estimate.extrapolated = beta;
  estimate.uncertainty = std::sqrt(std::max(0.0, var_beta));
  estimate.model = "weighted least squares: mean(n) = beta + b/n";
  return estimate;
}

BetaEstimate extrapolate_beta(double q, std::vector<int> sizes, long samples,
                              SeedSpec seed, int jobs) {
  if (sizes.size() < 3)
    throw std::invalid_argument("extrapolate_beta: need at least 3 sizes");
  std::vector<BetaEstimate::PerSize> per_n;
  std::uint64_t stream_base = seed.stream_index;
  for (int n : sizes) {
    MeanStdErr stats = estimate_scaled_cost(n, q, samples, seed.with_stream(stream_base), jobs);
    stream_base += static_cast<std::uint64_t>(samples);
    per_n.push_back({n, stats.mean, stats.std_err, stats.samples});
  }
  return extrapolate_beta_from_means(q, std::move(per_n));
}

}  // namespace pdim
