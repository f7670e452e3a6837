// Experiment driver. Every subcommand writes plot-ready CSVs plus a
// manifest.json echoing the configuration and the outcome of its invariant
// checks; the exit status is 0 iff all checks pass.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pdim/io.hpp"
#include "pdim/matching.hpp"
#include "pdim/operators.hpp"
#include "pdim/stats.hpp"
#include "pdim/treegame.hpp"

using namespace pdim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Manifest {
  json doc;
  bool all_pass = true;

  explicit Manifest(const std::string& subcommand) {
    doc["subcommand"] = subcommand;
    doc["checks"] = json::array();
  }

  void check(const std::string& name, bool pass, const json& detail = json::object()) {
    json entry = detail;
    entry["name"] = name;
    entry["pass"] = pass;
    doc["checks"].push_back(entry);
    all_pass = all_pass && pass;
    std::printf("[%s] %s\n", pass ? "PASS" : "FAIL", name.c_str());
  }

  int finish(const fs::path& out) {
    doc["pass"] = all_pass;
    write_json(out / "manifest.json", doc);
    return all_pass ? 0 : 1;
  }
};

int default_jobs() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 4 : static_cast<int>(hw);
}

FixedPointPair fixed_pair(const Params& params, int grid, double tol) {
  auto fp = iterate_fixpoint(params, grid, tol, 800);
  if (!fp.converged) throw std::runtime_error("fixed point did not converge");
  return {fp.F_A, fp.F_B};
}

int run_fixpoint(const Params& params, int grid, double tol, const fs::path& out) {
  Manifest manifest("fixpoint");
  auto fp = iterate_fixpoint(params, grid, tol, 800);
  write_grid_function_csv(out / "F_A.csv", fp.F_A);
  write_grid_function_csv(out / "F_B.csv", fp.F_B);
  std::vector<std::vector<double>> gap_rows;
  for (std::size_t i = 0; i < fp.gaps.size(); ++i)
    gap_rows.push_back({static_cast<double>(i), fp.gaps[i]});
  write_csv(out / "gaps.csv", {"iteration", "sup_gap"}, gap_rows);
  manifest.doc["fixpoint"] = fixpoint_metadata(fp, tol);
  manifest.check("converged below tolerance", fp.converged && fp.residual < 2 * tol,
                 {{"residual", fp.residual}});
  return manifest.finish(out);
}

int run_norm_sweep(std::vector<double> qs, std::vector<double> lambdas, int grid, double tol,
                   const fs::path& out) {
  Manifest manifest("norm-sweep");
  std::vector<std::vector<double>> rows;
  bool contraction = true;
  for (double q : qs) {
    for (double lambda : lambdas) {
      const Params params{q, lambda};
      auto pair = fixed_pair(params, grid, tol);
      auto op_a = build_operator(Player::A, pair);
      auto op_b = build_operator(Player::B, pair);
      const double norm = compose_norm(op_b, op_a);
      rows.push_back({q, lambda, static_cast<double>(grid), norm, op_a.I.maxCoeff(),
                      op_b.I.maxCoeff(), right_endpoint_I(pair.F_A).I_limit,
                      right_endpoint_I(pair.F_B).I_limit});
      if (!(norm > 0 && norm < 1)) contraction = false;
    }
  }
  write_csv(out / "norms.csv",
            {"q", "lambda", "N", "norm", "sup_I_A", "sup_I_B", "I_A_at_right", "I_B_at_right"},
            rows);
  manifest.doc["grid"] = grid;
  manifest.check("all composed norms in (0,1)", contraction);
  return manifest.finish(out);
}

int run_mc_matching(double q, int n, long samples, SeedSpec seed, int jobs,
                    const fs::path& out) {
  Manifest manifest("mc-matching");
  auto stats = estimate_scaled_cost(n, q, samples, seed, jobs);
  write_csv(out / "mc_matching.csv",
            {"q", "n", "samples", "mean_scaled_cost", "std_err", "seed"},
            {{q, static_cast<double>(n), static_cast<double>(samples), stats.mean,
              stats.std_err, static_cast<double>(seed.master_seed)}});
  manifest.doc["mean"] = stats.mean;
  manifest.doc["std_err"] = stats.std_err;
  manifest.check("standard error is finite", std::isfinite(stats.std_err));
  if (q == 1.0) {
    const double reference = parisi_reference(n);
    manifest.check("mean within 3 SE of the exact finite-n value",
                   std::abs(stats.mean - reference) < 3 * stats.std_err,
                   {{"reference", reference}});
  }
  return manifest.finish(out);
}

int run_beta(double q, std::vector<int> sizes, long samples, SeedSpec seed, int jobs,
             const fs::path& out) {
  Manifest manifest("beta");
  std::sort(sizes.begin(), sizes.end());
  auto estimate = extrapolate_beta(q, sizes, samples, seed, jobs);
  std::vector<std::vector<double>> rows;
  for (const auto& p : estimate.per_n)
    rows.push_back({q, static_cast<double>(p.n), static_cast<double>(p.samples), p.mean,
                    p.std_err});
  write_csv(out / "beta_per_n.csv", {"q", "n", "samples", "mean_scaled_cost", "std_err"}, rows);
  manifest.doc["beta"] = estimate.extrapolated;
  manifest.doc["uncertainty"] = estimate.uncertainty;
  manifest.doc["model"] = estimate.model;
  manifest.check("extrapolated limit is finite and positive",
                 std::isfinite(estimate.extrapolated) && estimate.extrapolated > 0);
  return manifest.finish(out);
}

int run_tree_uniqueness(const Params& params, std::vector<int> depths, long samples,
                        SeedSpec seed, const fs::path& out) {
  Manifest manifest("tree-uniqueness");
  std::sort(depths.begin(), depths.end());
  Rng rng = derive_stream(seed);
  std::vector<std::vector<double>> rows;
  std::vector<double> medians;
  for (int depth : depths) {
    std::vector<double> gaps;
    for (long rep = 0; rep < samples; ++rep) {
      GameTree tree = sample_tree(params, depth, 2000000, rng);
      extremal_valuations(tree);
      gaps.push_back(tree.f_b[0] - tree.f_a[0]);
    }
    std::sort(gaps.begin(), gaps.end());
    const double median = gaps[gaps.size() / 2];
    const double mean =
        std::accumulate(gaps.begin(), gaps.end(), 0.0) / static_cast<double>(gaps.size());
    medians.push_back(median);
    rows.push_back({static_cast<double>(depth), median, mean});
  }
  write_csv(out / "uniqueness_gaps.csv", {"depth", "median_gap", "mean_gap"}, rows);
  manifest.check("median gap non-increasing in depth",
                 std::is_sorted(medians.rbegin(), medians.rend()));
  manifest.check("final median gap below 0.05*lambda",
                 medians.back() < 0.05 * params.lambda, {{"median", medians.back()}});
  return manifest.finish(out);
}

int run_tree_distribution(const Params& params, int grid, long samples, SeedSpec seed,
                          const fs::path& out) {
  Manifest manifest("tree-distribution");
  auto pair = fixed_pair(params, grid, 1e-9);
  LabeledTreeSampler sampler(pair.F_A, pair.F_B);

  Rng rng = derive_stream(seed);
  std::vector<double> roots(static_cast<std::size_t>(samples));
  for (auto& z : roots) z = sampler.sample_root_label(rng);
  const double ks_root = anti_cdf_ks(roots, pair.F_A);

  std::vector<double> labeled, direct;
  Rng rng2 = derive_stream(seed.with_stream(1));
  while (labeled.size() < static_cast<std::size_t>(samples)) {
    GameTree tree = sampler.sample(2, 100000, rng2);
    for (int i = 0; i < tree.size(); ++i)
      if (tree.nodes[i].depth == 2) labeled.push_back(tree.f_a[i]);
  }
  Rng rng3 = derive_stream(seed.with_stream(2));
  while (direct.size() < static_cast<std::size_t>(samples)) {
    GameTree tree = sample_tree(params, 18, 2000000, rng3);
    extremal_valuations(tree);
    for (int i = 0; i < tree.size(); ++i)
      if (tree.nodes[i].depth == 2 && tree.f_b[i] - tree.f_a[i] < 1e-6)
        direct.push_back(tree.f_a[i]);
  }

  std::vector<std::vector<double>> rows;
  std::sort(roots.begin(), roots.end());
  for (std::size_t i = 0; i < roots.size(); ++i) {
    const double tail = static_cast<double>(roots.size() - i) / roots.size();
    rows.push_back({roots[i], tail, pair.F_A.eval(roots[i])});
  }
  write_csv(out / "root_anti_cdf.csv", {"z", "empirical_tail", "fixed_point"}, rows);

  manifest.doc["ks_root"] = ks_root;
  const double ks_depth2 = two_sample_ks(labeled, direct);
  manifest.doc["ks_depth2"] = ks_depth2;
  manifest.check("root labels match the fixed point (KS < 0.05)", ks_root < 0.05,
                 {{"ks", ks_root}});
  manifest.check("depth-2 labels match direct simulation (KS < 0.05)", ks_depth2 < 0.05,
                 {{"ks", ks_depth2}});
  return manifest.finish(out);
}

int run_reasonable_size(const Params& params, int grid, std::vector<double> budgets, int k,
                        long samples, SeedSpec seed, int jobs, const fs::path& out) {
  Manifest manifest("reasonable-size");
  auto pair = fixed_pair(params, grid, 1e-9);
  LabeledTreeSampler sampler(pair.F_A, pair.F_B);
  auto op_a = build_operator(Player::A, pair);
  auto op_b = build_operator(Player::B, pair);
  const double norm = compose_norm(op_b, op_a);
  const double alpha = std::max(empirical_alpha(pair.F_A), empirical_alpha(pair.F_B));
  const auto choice = choose_exponent(params, alpha, norm);
  const double K = default_series_constant(params);

  std::vector<std::vector<double>> rows;
  bool below = true, identity_ok = true;
  unsigned long long stream = 0;
  for (double t : budgets) {
    auto psi = neumann_psi(t, op_b, op_a, K, choice.m);
    identity_ok = identity_ok && psi.identity_residual < 1e-8;
    auto bins = estimate_R(sampler, t, k, 8, samples, seed.with_stream(stream++), jobs);
    for (const auto& bin : bins) {
      const double mid = 0.5 * (bin.z_lo + bin.z_hi);
      const double bound = psi.psi.eval(mid);
      rows.push_back({t, static_cast<double>(k), bin.z_lo, bin.z_hi,
                      static_cast<double>(bin.count), bin.mean, bin.std_err, bound});
      if (bin.count >= 10 && bin.mean - 3 * bin.std_err > bound) below = false;
    }
  }
  write_csv(out / "reasonable_size.csv",
            {"t", "k", "z_lo", "z_hi", "count", "mean", "std_err", "majorant"}, rows);
  manifest.doc["norm"] = norm;
  manifest.doc["series_exponent"] = choice.m;
  manifest.check("empirical sizes below the geometric-series majorant", below);
  manifest.check("majorant solves its defining identity", identity_ok);
  return manifest.finish(out);
}

int run_validate_all(SeedSpec seed, int jobs, const fs::path& out) {
  Manifest manifest("validate-all");
  {
    auto stats = estimate_scaled_cost(2, 1.0, 20000, seed, jobs);
    manifest.check("matching mean within 3 SE of 1.25",
                   std::abs(stats.mean - 1.25) < 3 * stats.std_err, {{"mean", stats.mean}});
  }
  {
    const Params params{1.0, 8.0};
    auto pair = fixed_pair(params, 1024, 1e-9);
    double sup = 0;
    for (int i = 0; i < pair.F_A.z.size(); ++i)
      if (std::abs(pair.F_A.z(i)) <= 3.0)
        sup = std::max(sup, std::abs(pair.F_A.v(i) - 1.0 / (1.0 + std::exp(pair.F_A.z(i)))));
    manifest.check("wide-window fixed point is logistic", sup < 0.02, {{"sup", sup}});
  }
  {
    const Params params{0.5, 2.0};
    auto pair = fixed_pair(params, 1024, 1e-9);
    const double norm =
        compose_norm(build_operator(Player::B, pair), build_operator(Player::A, pair));
    manifest.check("composed operator is a contraction", norm > 0 && norm < 1,
                   {{"norm", norm}});
  }
  {
    const Params params{0.5, 1.5};
    auto pair = fixed_pair(params, 1024, 1e-9);
    LabeledTreeSampler sampler(pair.F_A, pair.F_B);
    Rng rng = derive_stream(seed.with_stream(7));
    std::vector<double> roots(1000);
    for (auto& z : roots) z = sampler.sample_root_label(rng);
    const double ks = anti_cdf_ks(roots, pair.F_A);
    manifest.check("labeled tree root matches the fixed point", ks < 0.05, {{"ks", ks}});
  }
  return manifest.finish(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"minimum matching in pseudo-dimension: simulation and validation"};
  app.require_subcommand(1);

  double q = 0.5, lambda = 1.0, tol = 1e-9, t_budget_single = 1.0;
  int n = 100, grid = 1024, depth = 4, k = 4, jobs = default_jobs();
  long samples = 1000;
  unsigned long long seed_value = 1;
  std::string out_dir = "out";
  std::vector<double> q_list, lambda_list, budgets;
  std::vector<int> sizes, depths;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed_value, "master seed");
    cmd->add_option("--jobs", jobs, "worker cap");
    cmd->add_option("--out", out_dir, "output directory");
  };

  auto* c_fix = app.add_subcommand("fixpoint", "iterate the distributional fixed point");
  c_fix->add_option("--q", q)->check(CLI::Range(1e-9, 1.0));
  c_fix->add_option("--lambda", lambda)->check(CLI::PositiveNumber);
  c_fix->add_option("--grid", grid)->check(CLI::PositiveNumber);
  c_fix->add_option("--tol", tol)->check(CLI::PositiveNumber);
  add_common(c_fix);

  auto* c_norm = app.add_subcommand("norm-sweep", "composed operator norm over a grid of (q, lambda)");
  c_norm->add_option("--q", q_list, "q values (default 0.2 0.5 0.8)");
  c_norm->add_option("--lambda", lambda_list, "lambda values (default 1 2 4)");
  c_norm->add_option("--grid", grid);
  c_norm->add_option("--tol", tol);
  add_common(c_norm);

  auto* c_mc = app.add_subcommand("mc-matching", "Monte Carlo scaled matching cost");
  c_mc->add_option("--q", q)->check(CLI::Range(1e-9, 1.0));
  c_mc->add_option("--n", n)->check(CLI::PositiveNumber);
  c_mc->add_option("--samples", samples)->check(CLI::PositiveNumber);
  add_common(c_mc);

  auto* c_beta = app.add_subcommand("beta", "extrapolate the scaled cost limit");
  c_beta->add_option("--q", q)->check(CLI::Range(1e-9, 1.0));
  c_beta->add_option("--n", sizes, "matrix sizes (default 50 100 200)");
  c_beta->add_option("--samples", samples);
  add_common(c_beta);

  auto* c_uni = app.add_subcommand("tree-uniqueness", "extremal valuation gap vs depth");
  c_uni->add_option("--q", q);
  c_uni->add_option("--lambda", lambda);
  c_uni->add_option("--depth", depths, "depths (default 4 8 12)");
  c_uni->add_option("--samples", samples);
  add_common(c_uni);

  auto* c_dist = app.add_subcommand("tree-distribution", "labeled tree vs fixed point");
  c_dist->add_option("--q", q);
  c_dist->add_option("--lambda", lambda);
  c_dist->add_option("--grid", grid);
  c_dist->add_option("--samples", samples);
  add_common(c_dist);

  auto* c_size = app.add_subcommand("reasonable-size", "reasonable-tree sizes vs the majorant");
  c_size->add_option("--q", q);
  c_size->add_option("--lambda", lambda);
  c_size->add_option("--grid", grid);
  c_size->add_option("--t-budget", budgets, "path budgets (default 0.5 1 2)");
  c_size->add_option("--k", k, "tree depth (even)");
  c_size->add_option("--samples", samples);
  add_common(c_size);

  auto* c_all = app.add_subcommand("validate-all", "quick cross-module validation");
  add_common(c_all);

  CLI11_PARSE(app, argc, argv);

  (void)depth;
  (void)t_budget_single;
  if (q_list.empty()) q_list = {0.2, 0.5, 0.8};
  if (lambda_list.empty()) lambda_list = {1.0, 2.0, 4.0};
  if (sizes.empty()) sizes = {50, 100, 200};
  if (depths.empty()) depths = {4, 8, 12};
  if (budgets.empty()) budgets = {0.5, 1.0, 2.0};

  const fs::path out{out_dir};
  const SeedSpec seed{seed_value, 0};

  try {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (c_fix->parsed()) return run_fixpoint({q, lambda}, grid, tol, out);
    if (c_norm->parsed()) return run_norm_sweep(q_list, lambda_list, grid, tol, out);
    if (c_mc->parsed()) return run_mc_matching(q, n, samples, seed, jobs, out);
    if (c_beta->parsed()) return run_beta(q, sizes, samples, seed, jobs, out);
    if (c_uni->parsed()) return run_tree_uniqueness({q, lambda}, depths, samples, seed, out);
    if (c_dist->parsed()) return run_tree_distribution({q, lambda}, grid, samples, seed, out);
    if (c_size->parsed())
      return run_reasonable_size({q, lambda}, grid, budgets, k, samples, seed, jobs, out);
    if (c_all->parsed()) return run_validate_all(seed, jobs, out);
  } catch (const std::exception& err) {
    json failure{{"error", err.what()}};
    write_json(out / "error.json", failure);
    std::fprintf(stderr, "error: %s\n", err.what());
    return 2;
  }
  return 1;
}
