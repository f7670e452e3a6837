#pragma once

#include <vector>

#include "pdim/fixpoint.hpp"
#include "pdim/operators.hpp"
#include "pdim/random.hpp"

namespace pdim {

struct TreeNode {
  int parent = -1;
  double edge_cost = 0.0;  // cost of the edge to the parent
  int depth = 0;
  int child_begin = 0;
  int child_end = 0;        // children occupy [child_begin, child_end)
  bool frontier = false;    // truncated: offspring were never generated
};

/// Rooted tree arena; node 0 is the root, children are contiguous and
/// appear after their parent (breadth-first order).
struct GameTree {
  Params params;
  std::vector<TreeNode> nodes;
  int depth_cap = 0;
  bool hit_node_cap = false;

  // Optional labels, filled by extremal_valuations / delta_labels or by
  // the conditioned sampler.
  std::vector<double> f_a;
  std::vector<double> f_b;
  std::vector<double> delta;

  int size() const { return static_cast<int>(nodes.size()); }
};

/// Galton-Watson tree with offspring edge costs from the inhomogeneous
/// Poisson process on [0, lambda]. Nodes at depth_cap, and nodes left
/// unexpanded by node_cap, are marked as frontier.
GameTree sample_tree(const Params& params, int depth_cap, long node_cap, Rng& rng);

/// Fills f_a and f_b by two backward propagations of
///   h(u) = min(lambda/2, min_children l(u,v) - h(v))
/// from the truncation frontier, one seeded with +lambda/2 and one with
/// -lambda/2. True leaves always take lambda/2. The propagation whose
/// values are smaller at even depth is f_a.
void extremal_valuations(GameTree& tree);

/// delta(v) = l(u,v) - f_a(u) - f_a(v) for every non-root v (0 at root).
void delta_labels(GameTree& tree);

struct GameRecord {
  std::vector<int> path;  // visited nodes, starting at the root
  double payoff = 0.0;    // Alice's total
  double delta_sum = 0.0;
  bool alice_quit = false;
  bool complete = false;  // false if the walk reached the truncation frontier
};

/// Plays the game with Alice following f_a and Bob following f_b;
/// a player quits when the penalty lambda/2 beats every move.
GameRecord play_game(const GameTree& tree);

/// Samples the game-value-labeled tree directly: the root label is drawn
/// from F_A, and each vertex with label z spawns a Poisson cloud in the
/// region {l - f > z} of the lf-square plus one point on the diagonal
/// l - f = z (continuous part with probability I(z), otherwise the atom
/// at (z + lambda/2, lambda/2)).
class LabeledTreeSampler {
 public:
  LabeledTreeSampler(GridFunction F_A, GridFunction F_B);

  GameTree sample(int depth_cap, long node_cap, Rng& rng) const;
  double sample_root_label(Rng& rng) const;

  /// mu({l - f > z}) for the measure of the given player; Monte Carlo
  /// oracle target for the mean off-diagonal offspring count.
  double offspring_intensity(Player player, double z) const;

  const Params& params() const { return params_; }

 private:
  struct PlayerTables {
    GridFunction F;
    Eigen::VectorXd seg_coeff;  // -slope per segment
  };

  const PlayerTables& tables(Player player) const {
    return player == Player::A ? table_a_ : table_b_;
  }

  void spawn_children(GameTree& tree, int node, double z, Player player, Rng& rng) const;
  double sample_offdiag_label(const PlayerTables& t, double z, Rng& rng) const;
  double sample_diag_position(const PlayerTables& t, double z, Rng& rng) const;

  Params params_;
  PlayerTables table_a_;
  PlayerTables table_b_;
};

struct ReasonableTree {
  long edges = 0;
  bool hit_frontier = false;  // size is then a lower bound
  std::vector<int> members;   // nodes of the subtree, excluding u
};

/// Depth-k truncation of the union of all (u,t)-reasonable paths: odd
/// steps must be exactly f_a-optimal (delta = 0 within 1e-9) and the
/// cumulative delta along the path stays <= t. A vertex whose game value
/// is lambda/2 ends every path (quitting is optimal there). Size counts
/// edges.
ReasonableTree reasonable_tree(const GameTree& tree, int u, double t, int k);

struct RBin {
  double z_lo = 0.0;
  double z_hi = 0.0;
  long count = 0;
  double mean = 0.0;
  double std_err = 0.0;
};

/// Empirical R^k_t per root-label bin from conditioned tree samples.
/// Bins with fewer than 10 samples report count only.
std::vector<RBin> estimate_R(const LabeledTreeSampler& sampler, double t, int k,
                             int z_bins, long samples, SeedSpec seed, int jobs = 1);

}  // namespace pdim
