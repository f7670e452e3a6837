#include "pdim/treegame.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "pdim/parallel.hpp"

namespace pdim {

namespace {
constexpr double kDeltaTol = 1e-9;
}

GameTree sample_tree(const Params& params, int depth_cap, long node_cap, Rng& rng) {
  params.validate();
  if (depth_cap < 0 || node_cap < 1)
    throw std::invalid_argument("sample_tree: caps must be positive");

  GameTree tree;
  tree.params = params;
  tree.depth_cap = depth_cap;
  tree.nodes.push_back(TreeNode{});

  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (tree.nodes[i].depth >= depth_cap) {
      tree.nodes[i].frontier = true;
      continue;
    }
    const std::vector<double> arrivals = sample_poisson_arrivals(params, rng);
    if (static_cast<long>(tree.nodes.size() + arrivals.size()) > node_cap) {
      tree.nodes[i].frontier = true;
      tree.hit_node_cap = true;
      continue;
    }
    tree.nodes[i].child_begin = static_cast<int>(tree.nodes.size());
    for (double cost : arrivals) {
      TreeNode child;
      child.parent = static_cast<int>(i);
      child.edge_cost = cost;
      child.depth = tree.nodes[i].depth + 1;
      tree.nodes.push_back(child);
    }
    tree.nodes[i].child_end = static_cast<int>(tree.nodes.size());
  }
  return tree;
}

void extremal_valuations(GameTree& tree) {
  const double h = tree.params.half();
  const int n = tree.size();
  std::vector<double> hp(n), hm(n);
  for (int i = n - 1; i >= 0; --i) {
    const TreeNode& node = tree.nodes[i];
    if (node.frontier) {
      hp[i] = h;
      hm[i] = -h;
      continue;
    }
    if (node.child_begin == node.child_end) {
      hp[i] = hm[i] = h;  // true leaf
      continue;
    }
    double best_p = h, best_m = h;
    for (int c = node.child_begin; c < node.child_end; ++c) {
      best_p = std::min(best_p, tree.nodes[c].edge_cost - hp[c]);
      best_m = std::min(best_m, tree.nodes[c].edge_cost - hm[c]);
    }
    hp[i] = best_p;
    hm[i] = best_m;
  }
  tree.f_a.resize(n);
  tree.f_b.resize(n);
  for (int i = 0; i < n; ++i) {
    const bool even = tree.nodes[i].depth % 2 == 0;
    tree.f_a[i] = even ? std::min(hp[i], hm[i]) : std::max(hp[i], hm[i]);
    tree.f_b[i] = even ? std::max(hp[i], hm[i]) : std::min(hp[i], hm[i]);
  }
}

void delta_labels(GameTree& tree) {
  if (tree.f_a.empty()) throw std::logic_error("delta_labels: f_a not present");
  const int n = tree.size();
  tree.delta.assign(n, 0.0);
  for (int i = 1; i < n; ++i) {
    const TreeNode& node = tree.nodes[i];
    tree.delta[i] = node.edge_cost - tree.f_a[node.parent] - tree.f_a[i];
  }
}

GameRecord play_game(const GameTree& tree) {
  if (tree.f_a.empty() || tree.f_b.empty())
    throw std::logic_error("play_game: valuations not present");
  const double h = tree.params.half();
  GameRecord record;
  int cur = 0;
  record.path.push_back(cur);
  for (;;) {
    const TreeNode& node = tree.nodes[cur];
    if (node.frontier) return record;  // incomplete
    const bool alice = node.depth % 2 == 0;
    const std::vector<double>& val = alice ? tree.f_a : tree.f_b;
    int best = -1;
    double best_move = std::numeric_limits<double>::infinity();
    for (int c = node.child_begin; c < node.child_end; ++c) {
      const double move = tree.nodes[c].edge_cost - val[c];
      if (move < best_move) {
        best_move = move;
        best = c;
      }
    }
    if (best < 0 || best_move >= h) {
      record.payoff += alice ? -h : h;
      record.alice_quit = alice;
      record.complete = true;
      return record;
    }
    const double cost = tree.nodes[best].edge_cost;
    record.payoff += alice ? -cost : cost;
    record.delta_sum += cost - tree.f_a[cur] - tree.f_a[best];
    cur = best;
    record.path.push_back(cur);
  }
}

// ---------------------------------------------------------------------------
// Conditioned sampling of the labeled tree

LabeledTreeSampler::LabeledTreeSampler(GridFunction F_A, GridFunction F_B) {
  params_ = F_A.params;
  auto make_tables = [](GridFunction F) {
    PlayerTables t;
    t.seg_coeff.resize(F.segments());
    for (int k = 0; k < F.segments(); ++k)
      t.seg_coeff(k) = std::max(0.0, -F.slope(k));
    t.F = std::move(F);
    return t;
  };
  table_a_ = make_tables(std::move(F_A));
  table_b_ = make_tables(std::move(F_B));
}

double LabeledTreeSampler::sample_root_label(Rng& rng) const {
  const GridFunction& F = table_a_.F;
  const double u = uniform_open(rng);
  if (u <= F.right_value()) return params_.half();  // atom at lambda/2
  // Invert the anti-CDF: find z with F(z) = u (F decreasing from 1).
  int lo = 0, hi = F.segments();
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    if (F.v(mid) >= u)
      lo = mid;
    else
      hi = mid;
  }
  const double span = F.v(lo) - F.v(hi);
  const double w = span > 0 ? (F.v(lo) - u) / span : 0.5;
  return F.z(lo) + w * (F.z(hi) - F.z(lo));
}

double LabeledTreeSampler::offspring_intensity(Player player, double z) const {
  const PlayerTables& t = tables(player);
  const double q = params_.q;
  const double h = params_.half();
  // mu({l - f > z}) = lambda^q - int ((z+f)_+)^q dF(f)
  double expectation = t.F.right_value() * std::pow(std::max(0.0, z + h), q);
  for (int k = 0; k < t.F.segments(); ++k) {
    if (t.seg_coeff(k) == 0.0) continue;
    const double s0 = std::max(0.0, z + t.F.z(k));
    const double s1 = std::max(0.0, z + t.F.z(k + 1));
    if (!(s1 > 0.0)) continue;
    expectation += t.seg_coeff(k) *
                   (std::pow(s1, q + 1.0) - std::pow(s0, q + 1.0)) / (q + 1.0);
  }
  return std::max(0.0, std::pow(params_.lambda, q) - expectation);
}

double LabeledTreeSampler::sample_offdiag_label(const PlayerTables& t, double z,
                                                Rng& rng) const {
  const double q = params_.q;
  const double h = params_.half();
  const double lam_q = std::pow(params_.lambda, q);
  // f-marginal of the restricted measure has density proportional to
  // (lambda^q - ((z+f)_+)^q) dF(f): rejection against dF itself.
  for (;;) {
    double f;
    const double u = uniform_open(rng);
    if (u <= t.F.right_value()) {
      f = h;
    } else {
      int lo = 0, hi = t.F.segments();
      while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (t.F.v(mid) >= u)
          lo = mid;
        else
          hi = mid;
      }
      const double span = t.F.v(lo) - t.F.v(hi);
      const double w = span > 0 ? (t.F.v(lo) - u) / span : 0.5;
      f = t.F.z(lo) + w * (t.F.z(hi) - t.F.z(lo));
    }
    const double accept = (lam_q - std::pow(std::max(0.0, z + f), q)) / lam_q;
    if (uniform_open(rng) < accept) return f;
  }
}

double LabeledTreeSampler::sample_diag_position(const PlayerTables& t, double z,
                                                Rng& rng) const {
  const double q = params_.q;
  const int n = t.F.segments();
  // Segment masses of rho^z, then exact inversion of (z+t)^(q-1) inside
  // the chosen segment.
  Eigen::VectorXd cum(n);
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    if (t.seg_coeff(k) > 0.0 && z + t.F.z(k + 1) > 0.0)
      total += t.seg_coeff(k) * segment_hat(q, z, t.F.z(k), t.F.z(k + 1)).m0;
    cum(k) = total;
  }
  if (!(total > 0.0)) return t.F.z(n);  // degenerate: all mass at the right end
  const double target = uniform_open(rng) * total;
  int k = 0;
  while (k < n - 1 && cum(k) < target) ++k;
  const double s0 = std::max(0.0, z + t.F.z(k));
  const double s1 = std::max(0.0, z + t.F.z(k + 1));
  const double p0 = std::pow(s0, q), p1 = std::pow(s1, q);
  const double s = std::pow(p0 + uniform_open(rng) * (p1 - p0), 1.0 / q);
  return std::clamp(s - z, t.F.z(k), t.F.z(k + 1));
}

void LabeledTreeSampler::spawn_children(GameTree& tree, int node, double z,
                                        Player player, Rng& rng) const {
  const PlayerTables& t = tables(player);
  const double q = params_.q;
  const double h = params_.half();
  const double lam_q = std::pow(params_.lambda, q);

  tree.nodes[node].child_begin = tree.size();
  auto add_child = [&](double cost, double label) {
    TreeNode child;
    child.parent = node;
    child.edge_cost = cost;
    child.depth = tree.nodes[node].depth + 1;
    tree.nodes.push_back(child);
    tree.f_a.push_back(label);
  };

  // Poisson cloud strictly above the diagonal l - f = z.
  const double intensity = offspring_intensity(player, z);
  std::poisson_distribution<long> count(intensity);
  const long n_offdiag = count(rng);
  for (long i = 0; i < n_offdiag; ++i) {
    const double f = sample_offdiag_label(t, z, rng);
    const double a_q = std::pow(std::max(0.0, z + f), q);
    const double cost = std::pow(a_q + uniform_open(rng) * (lam_q - a_q), 1.0 / q);
    add_child(cost, f);
  }

  // Exactly one point on the diagonal itself -- except at the quit value
  // lambda/2, which conditions on min(l - f) >= lambda/2 with no minimizer
  // on the diagonal.
  if (z < h - 1e-12) {
    const double mass = density_mass(t.F, z);
    const double iz = mass / (atom_mass(t.F, z) + mass);
    if (uniform_open(rng) < iz) {
      const double f = sample_diag_position(t, z, rng);
      add_child(z + f, f);
    } else {
      add_child(z + h, h);
    }
  }
  tree.nodes[node].child_end = tree.size();
}

GameTree LabeledTreeSampler::sample(int depth_cap, long node_cap, Rng& rng) const {
  if (depth_cap < 0 || node_cap < 1)
    throw std::invalid_argument("sample: caps must be positive");
  GameTree tree;
  tree.params = params_;
  tree.depth_cap = depth_cap;
  tree.nodes.push_back(TreeNode{});
  tree.f_a.push_back(sample_root_label(rng));

  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (tree.nodes[i].depth >= depth_cap) {
      tree.nodes[i].frontier = true;
      continue;
    }
    if (static_cast<long>(tree.nodes.size()) >= node_cap) {
      tree.nodes[i].frontier = true;
      tree.hit_node_cap = true;
      continue;
    }
    const bool even = tree.nodes[i].depth % 2 == 0;
    // Children of an even-distance vertex carry values distributed like
    // f at odd distance, i.e. the B branch, and vice versa.
    spawn_children(tree, static_cast<int>(i), tree.f_a[i],
                   even ? Player::B : Player::A, rng);
  }
  return tree;
}

ReasonableTree reasonable_tree(const GameTree& tree, int u, double t, int k) {
  if (tree.f_a.empty()) throw std::logic_error("reasonable_tree: f_a not present");
  if (u < 0 || u >= tree.size()) throw std::invalid_argument("reasonable_tree: bad node");
  const double h = tree.params.half();
  ReasonableTree result;

  std::function<void(int, int, double)> dfs = [&](int x, int steps, double acc) {
    if (steps == k) return;
    const TreeNode& node = tree.nodes[x];
    const bool alice_pos = steps % 2 == 0;
    if (alice_pos && tree.f_a[x] >= h - kDeltaTol) return;  // quitting is optimal
    if (node.frontier) {
      result.hit_frontier = true;
      return;
    }
    for (int c = node.child_begin; c < node.child_end; ++c) {
      const double delta = tree.nodes[c].edge_cost - tree.f_a[x] - tree.f_a[c];
      if (alice_pos) {
        if (delta > kDeltaTol) continue;  // odd steps must be exactly optimal
      } else {
        if (acc + delta > t + kDeltaTol) continue;
      }
      result.edges += 1;
      result.members.push_back(c);
      dfs(c, steps + 1, acc + std::max(0.0, delta));
    }
  };
  dfs(u, 0, 0.0);
  return result;
}

std::vector<RBin> estimate_R(const LabeledTreeSampler& sampler, double t, int k,
                             int z_bins, long samples, SeedSpec seed, int jobs) {
  if (k % 2 != 0) throw std::invalid_argument("estimate_R: k must be even");
  if (samples < 100) throw std::invalid_argument("estimate_R: need samples >= 100");
  if (z_bins < 1) throw std::invalid_argument("estimate_R: need z_bins >= 1");

  const double h = sampler.params().half();
  std::vector<double> labels(static_cast<std::size_t>(samples));
  std::vector<double> sizes(static_cast<std::size_t>(samples));
  parallel_for(samples, jobs, [&](long i) {
    Rng rng = derive_stream(seed.with_stream(seed.stream_index + static_cast<std::uint64_t>(i)));
    GameTree tree = sampler.sample(k, 1000000, rng);
    labels[static_cast<std::size_t>(i)] = tree.f_a[0];
    sizes[static_cast<std::size_t>(i)] =
        static_cast<double>(reasonable_tree(tree, 0, t, k).edges);
  });

  std::vector<RBin> bins(static_cast<std::size_t>(z_bins));
  std::vector<double> m2(static_cast<std::size_t>(z_bins), 0.0);
  for (int b = 0; b < z_bins; ++b) {
    bins[b].z_lo = -h + sampler.params().lambda * b / z_bins;
    bins[b].z_hi = -h + sampler.params().lambda * (b + 1) / z_bins;
  }
  for (long i = 0; i < samples; ++i) {
    int b = static_cast<int>((labels[i] + h) / sampler.params().lambda * z_bins);
    b = std::clamp(b, 0, z_bins - 1);
    RBin& bin = bins[static_cast<std::size_t>(b)];
    bin.count += 1;
    const double d = sizes[i] - bin.mean;
    bin.mean += d / static_cast<double>(bin.count);
    m2[static_cast<std::size_t>(b)] += d * (sizes[i] - bin.mean);
  }
  for (int b = 0; b < z_bins; ++b) {
    RBin& bin = bins[static_cast<std::size_t>(b)];
    if (bin.count < 10) {
      bin.mean = std::numeric_limits<double>::quiet_NaN();
      bin.std_err = std::numeric_limits<double>::quiet_NaN();
    } else {
      bin.std_err = std::sqrt(m2[static_cast<std::size_t>(b)] /
                              (static_cast<double>(bin.count) * (bin.count - 1)));
    }
  }
  return bins;
}

}  // namespace pdim
