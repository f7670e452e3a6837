// End-to-end acceptance checks. Each numbered check prints one PASS/FAIL
// line; the exit status is nonzero if any check fails. Runtime is a few
// minutes, dominated by the n=500 matching batch.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include "pdim/fixpoint.hpp"
#include "pdim/matching.hpp"
#include "pdim/operators.hpp"
#include "pdim/stats.hpp"
#include "pdim/treegame.hpp"

using namespace pdim;

namespace {

int failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %2d. %-34s %s\n", pass ? "PASS" : "FAIL", number, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* pattern, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

int jobs() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 4 : static_cast<int>(hw);
}

FixedPointPair fixed_pair(const Params& params, int n) {
  auto fp = iterate_fixpoint(params, n, 1e-9, 800);
  if (!fp.converged) throw std::runtime_error("fixed point did not converge");
  return {fp.F_A, fp.F_B};
}

void check_exact_small_means() {
  bool pass = true;
  double worst = 0;
  for (int n : {1, 2, 3, 5, 10}) {
    auto stats = estimate_scaled_cost(n, 1.0, 100000, {1001, static_cast<unsigned long long>(n) * 1000000}, jobs());
    const double dev = std::abs(stats.mean - parisi_reference(n)) / stats.std_err;
    worst = std::max(worst, dev);
    if (dev >= 3.0) pass = false;
  }
  report(1, "finite-n exact mean formula", pass, fmt("worst deviation %.2f standard errors", worst));
}

void check_zeta2_limit() {
  auto stats = estimate_scaled_cost(500, 1.0, 200, {1002, 0}, jobs());
  const double zeta2 = M_PI * M_PI / 6.0;
  const double rel = std::abs(stats.mean - zeta2) / zeta2;
  report(2, "limit cost pi^2/6 at n=500", rel < 0.01,
         fmt("mean %.4f, relative error %.4f", stats.mean, rel));
}

void check_logistic_fixed_point() {
  const Params params{1.0, 8.0};
  auto pair = fixed_pair(params, 2048);
  double sup = 0;
  for (const GridFunction* f : {&pair.F_A, &pair.F_B})
    for (int i = 0; i < f->z.size(); ++i)
      if (std::abs(f->z(i)) <= 3.0)
        sup = std::max(sup, std::abs(f->v(i) - 1.0 / (1.0 + std::exp(f->z(i)))));
  report(3, "logistic profile in a wide window", sup < 0.02, fmt("sup distance %.4f", sup));
}

void check_contraction() {
  bool pass = true;
  double worst_norm = 0, worst_change = 0;
  for (double q : {0.2, 0.5, 0.8}) {
    for (double lambda : {1.0, 2.0, 4.0}) {
      const Params params{q, lambda};
      auto p1 = fixed_pair(params, 1024);
      auto p2 = fixed_pair(params, 2048);
      const double n1 = compose_norm(build_operator(Player::B, p1), build_operator(Player::A, p1));
      const double n2 = compose_norm(build_operator(Player::B, p2), build_operator(Player::A, p2));
      const double change = std::abs(n1 - n2) / n2;
      worst_norm = std::max(worst_norm, n2);
      worst_change = std::max(worst_change, change);
      if (!(n1 > 0 && n1 < 1 && n2 > 0 && n2 < 1 && change < 0.01)) pass = false;
    }
  }
  report(4, "composed operator is a contraction", pass,
         fmt("max norm %.4f, max refinement change %.4f", worst_norm, worst_change));
}

void check_I_endpoints() {
  bool pass = true;
  std::string detail;
  {
    const Params params{0.4, 1.0};
    auto pair = fixed_pair(params, 2048);
    if (I_value(pair.F_A, -params.half()) != 0.0) pass = false;
    auto rep = right_endpoint_I(pair.F_A);
    if (!(rep.divergent && std::abs(rep.I_limit - 1.0) < 0.02)) pass = false;
    detail = fmt("q=0.4: I(right)=%.4f;", rep.I_limit);
  }
  {
    const Params params{0.7, 1.0};
    auto pair = fixed_pair(params, 2048);
    auto rep = right_endpoint_I(pair.F_A);
    if (!( !rep.divergent && rep.I_limit < 1.0)) pass = false;
    detail += fmt(" q=0.7: I(right)=%.4f", rep.I_limit);
  }
  report(5, "endpoint dichotomy of I", pass, detail);
}

void check_uniqueness_gap() {
  const Params params{0.5, 2.0};
  Rng rng = derive_stream({1006, 0});
  std::vector<double> medians;
  for (int depth : {4, 8, 12}) {
    std::vector<double> gaps;
    for (int rep = 0; rep < 200; ++rep) {
      GameTree tree = sample_tree(params, depth, 2000000, rng);
      extremal_valuations(tree);
      gaps.push_back(tree.f_b[0] - tree.f_a[0]);
    }
    std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
    medians.push_back(gaps[gaps.size() / 2]);
  }
  const bool pass = medians[0] >= medians[1] - 1e-12 && medians[1] >= medians[2] - 1e-12 &&
                    medians[2] < 0.05 * params.lambda;
  report(6, "valuation gap shrinks with depth", pass,
         fmt("medians %.4f / %.4f / %.4f", medians[0], medians[1], medians[2]));
}

void check_game_paths() {
  const Params params{0.5, 1.0};
  Rng rng = derive_stream({1007, 0});
  int complete = 0;
  bool pass = true;
  double max_delta_sum = 0;
  for (int rep = 0; rep < 20000 && complete < 1000; ++rep) {
    GameTree tree = sample_tree(params, 30, 2000000, rng);
    extremal_valuations(tree);
    GameRecord record = play_game(tree);
    if (!record.complete) continue;
    ++complete;
    max_delta_sum = std::max(max_delta_sum, record.delta_sum);
    if (record.delta_sum > 2.0 * params.lambda + 1e-9) pass = false;
    if (!(tree.f_a[0] >= -record.payoff - 1e-9 && -record.payoff >= tree.f_b[0] - 1e-9))
      pass = false;
  }
  if (complete < 1000) pass = false;
  report(7, "game paths respect the budget", pass,
         fmt("%.0f complete games, max path budget %.4f", static_cast<double>(complete),
             max_delta_sum));
}

void check_tree_distribution() {
  const Params params{0.5, 1.5};
  auto pair = fixed_pair(params, 1024);
  LabeledTreeSampler sampler(pair.F_A, pair.F_B);
  Rng rng = derive_stream({1008, 0});

  std::vector<double> roots(1000);
  for (auto& z : roots) z = sampler.sample_root_label(rng);
  const double ks_root = anti_cdf_ks(roots, pair.F_A);

  // depth-2 labels: conditioned sampler vs valuations of deep direct trees
  std::vector<double> labeled, direct;
  Rng rng2 = derive_stream({1008, 1});
  while (labeled.size() < 2000) {
    GameTree tree = sampler.sample(2, 100000, rng2);
    for (int i = 0; i < tree.size(); ++i)
      if (tree.nodes[i].depth == 2) labeled.push_back(tree.f_a[i]);
  }
  Rng rng3 = derive_stream({1008, 2});
  while (direct.size() < 2000) {
    GameTree tree = sample_tree(params, 18, 2000000, rng3);
    extremal_valuations(tree);
    for (int i = 0; i < tree.size(); ++i) {
      if (tree.nodes[i].depth != 2) continue;
      // keep only labels the truncation no longer moves
      if (tree.f_b[i] - tree.f_a[i] < 1e-6) direct.push_back(tree.f_a[i]);
    }
  }
  const double ks_depth2 = two_sample_ks(labeled, direct);
  report(8, "labeled tree matches the fixed point", ks_root < 0.05 && ks_depth2 < 0.05,
         fmt("root KS %.4f, depth-2 KS %.4f", ks_root, ks_depth2));
}

void check_reasonable_tree_bounds() {
  const Params params{0.5, 1.0};
  auto pair = fixed_pair(params, 1024);
  LabeledTreeSampler sampler(pair.F_A, pair.F_B);
  auto op_a = build_operator(Player::A, pair);
  auto op_b = build_operator(Player::B, pair);
  const double norm = compose_norm(op_b, op_a);
  const double alpha = std::max(empirical_alpha(pair.F_A), empirical_alpha(pair.F_B));
  const auto choice = choose_exponent(params, alpha, norm);
  const double K = default_series_constant(params);

  bool pass = true;
  double worst_mean = 0, worst_residual = 0;
  for (double t : {0.5, 1.0, 2.0}) {
    // two-level mean bound
    Rng rng = derive_stream({1009, static_cast<unsigned long long>(t * 100)});
    double total = 0;
    const long draws = 1000;
    for (long i = 0; i < draws; ++i) {
      GameTree tree = sampler.sample(2, 200000, rng);
      total += static_cast<double>(reasonable_tree(tree, 0, t, 2).edges);
    }
    const double mean2 = total / draws;
    worst_mean = std::max(worst_mean, mean2);
    if (mean2 > 2.0 + std::pow(params.lambda, params.q)) pass = false;

    auto psi = neumann_psi(t, op_b, op_a, K, choice.m);
    worst_residual = std::max(worst_residual, psi.identity_residual);
    if (psi.identity_residual >= 1e-8) pass = false;

    for (int depth : {4, 8, 12}) {
      auto bins = estimate_R(sampler, t, depth, 8,
                             4000, {1010, static_cast<unsigned long long>(depth)}, jobs());
      for (const auto& bin : bins) {
        if (bin.count < 10) continue;
        const double mid = 0.5 * (bin.z_lo + bin.z_hi);
        if (bin.mean - 3 * bin.std_err > psi.psi.eval(mid)) pass = false;
      }
    }
  }
  report(9, "size bounds for reasonable trees", pass,
         fmt("two-level mean %.3f, majorant residual %.2e", worst_mean, worst_residual));
}

void check_solver_oracle() {
  Rng rng = derive_stream({1011, 0});
  bool pass = true;
  for (int n = 1; n <= 6; ++n) {
    for (int rep = 0; rep < 100; ++rep) {
      AssignmentInstance instance = sample_instance(n, 0.5, rng);
      auto result = solve_assignment(instance);

      std::vector<int> perm(n);
      for (int i = 0; i < n; ++i) perm[i] = i;
      double best = std::numeric_limits<double>::infinity();
      do {
        double total = 0;
        for (int i = 0; i < n; ++i) total += instance.costs(i, perm[i]);
        best = std::min(best, total);
      } while (std::next_permutation(perm.begin(), perm.end()));
      if (std::abs(result.total_cost - best) > 1e-9 * std::max(1.0, best)) pass = false;

      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (result.dual_row(i) + result.dual_col(j) > instance.costs(i, j) + 1e-9)
            pass = false;
      for (int i = 0; i < n; ++i) {
        const int j = result.assignment[i];
        if (std::abs(result.dual_row(i) + result.dual_col(j) - instance.costs(i, j)) > 1e-9)
          pass = false;
      }
    }
  }
  report(10, "solver vs brute force with duals", pass, "600 instances, duals to 1e-9");
}

void report_beta_estimates() {
  for (double q : {0.3, 0.5, 0.7}) {
    auto estimate = extrapolate_beta(q, {50, 100, 200}, 2000, {1012, 0}, jobs());
    std::printf("[INFO] beta(%.1f) ~ %.4f +- %.4f (uncertified extrapolation)\n", q,
                estimate.extrapolated, estimate.uncertainty);
  }
  std::fflush(stdout);
}

}  // namespace

int main() {
  check_exact_small_means();
  check_zeta2_limit();
  check_logistic_fixed_point();
  check_contraction();
  check_I_endpoints();
  check_uniqueness_gap();
  check_game_paths();
  check_tree_distribution();
  check_reasonable_tree_bounds();
  check_solver_oracle();
  report_beta_estimates();
  if (failures > 0) {
    std::printf("%d acceptance check(s) failed\n", failures);
    return 1;
  }
  std::printf("all acceptance checks passed\n");
  return 0;
}
