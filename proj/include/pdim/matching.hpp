#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pdim/random.hpp"

namespace pdim {

/// Complete bipartite instance: costs(i,j) is the cost of edge (i,j).
struct AssignmentInstance {
  Eigen::MatrixXd costs;
  int size() const { return static_cast<int>(costs.rows()); }
};

/// Optimal assignment with a dual certificate:
///   dual_row(i) + dual_col(j) <= costs(i,j) for all i,j,
///   with equality on matched pairs, so total_cost equals the dual value.
struct MatchingResult {
  std::vector<int> assignment;  // row i matched to column assignment[i]
  double total_cost = 0.0;
  Eigen::VectorXd dual_row;
  Eigen::VectorXd dual_col;
};

/// Successive shortest augmenting paths with node potentials, O(n^3).
MatchingResult solve_assignment(const AssignmentInstance& instance);

AssignmentInstance sample_instance(int n, double q, Rng& rng);

struct MeanStdErr {
  double mean = 0.0;
  double std_err = 0.0;
  long samples = 0;
};

/// Monte Carlo mean and standard error of the scaled matching cost
/// n^(-1+1/q) * M over independent instances. Deterministic for a given
/// SeedSpec regardless of the number of worker threads.
MeanStdErr estimate_scaled_cost(int n, double q, long samples, SeedSpec seed,
                                int jobs = 1);

/// Sum_{k<=n} k^-2, the exact mean matching cost at q=1.
double parisi_reference(long n);

struct BetaEstimate {
  struct PerSize {
    int n = 0;
    double mean = 0.0;
    double std_err = 0.0;
    long samples = 0;
  };
  double q = 0.0;
  std::vector<PerSize> per_n;  // sorted by n
  double extrapolated = 0.0;
  double uncertainty = 0.0;
  std::string model;
};

/// Weighted least-squares fit mean(n) ~ beta + b/n over the given sizes.
BetaEstimate extrapolate_beta(double q, std::vector<int> sizes, long samples,
                              SeedSpec seed, int jobs = 1);

/// Same fit applied to externally supplied per-size means (e.g. an exact
/// reference sequence instead of Monte Carlo).
BetaEstimate extrapolate_beta_from_means(double q,
                                         std::vector<BetaEstimate::PerSize> per_n);

}  // namespace pdim
