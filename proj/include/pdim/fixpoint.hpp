#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pdim/random.hpp"

namespace pdim {

/// Piecewise-linear function on [-lambda/2, lambda/2]. Grid nodes are
/// strictly increasing with exact endpoints; uniform by default, with an
/// optional graded mesh clustering nodes near the endpoints for small q
/// where the fixed point has endpoint singularities in its derivative.
struct GridFunction {
  Params params;
  Eigen::VectorXd z;  // n+1 nodes
  Eigen::VectorXd v;  // values at the nodes

  int segments() const { return static_cast<int>(z.size()) - 1; }
  double slope(int k) const { return (v(k + 1) - v(k)) / (z(k + 1) - z(k)); }
  double eval(double x) const;
  double right_value() const { return v(v.size() - 1); }

  static Eigen::VectorXd uniform_grid(const Params& params, int n);
  static Eigen::VectorXd graded_grid(const Params& params, int n, double exponent);
  /// Uniform grid for q >= 0.3, graded otherwise.
  static Eigen::VectorXd default_grid(const Params& params, int n);

  static GridFunction zero(const Params& params, const Eigen::VectorXd& grid);
};

/// Moments of the singular kernel over one grid segment, weighted by the
/// linear hat functions of the segment endpoints:
///   m0    = int q (z+t)_+^(q-1) dt
///   left  = int q (z+t)_+^(q-1) (t1-t)/(t1-t0) dt
///   right = int q (z+t)_+^(q-1) (t-t0)/(t1-t0) dt
/// Evaluated without cancellation even when the segment is far narrower
/// than its distance to the pole t = -z (graded meshes make such cells).
struct SegHat {
  double m0 = 0.0;
  double left = 0.0;
  double right = 0.0;
};
SegHat segment_hat(double q, double z, double t0, double t1);

enum class KernelMode {
  AgainstG,   // int q (z+t)_+^(q-1) G(t) dt
  AgainstDG,  // int q (z+t)_+^(q-1) dG(t), including the atom of mass
              // -G(lambda/2) at t = lambda/2
};

/// Segment-exact evaluation of the singular kernel integral; valid for
/// z in [-lambda/2, 3 lambda/2].
double kernel_integral(const GridFunction& G, double z, KernelMode mode);

/// The anti-CDF map G -> exp(-int q(z+t)_+^(q-1) G(t) dt) on the grid.
GridFunction apply_V(const GridFunction& G);

struct FixPointResult {
  GridFunction F_A;  // limit of even iterates from F_0 = 0 (lower branch)
  GridFunction F_B;  // limit of odd iterates (upper branch)
  std::vector<double> gaps;  // sup|F_{k+2} - F_k| per iteration
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;  // max of sup|V(F_B)-F_A| and sup|V(F_A)-F_B|
};

/// Alternating iteration F_{k+1} = V(F_k) started from 0, stopped when
/// both parity subsequences move less than tol in sup norm.
FixPointResult iterate_fixpoint(const Params& params, int n, double tol = 1e-8,
                                int max_iter = 500);

/// Analytic derivative d/dz V(G) = V(G) * int q(z+t)_+^(q-1) dG(t).
/// Endpoint values may be infinite for q < 1.
GridFunction derivative_of_V(const GridFunction& G, const GridFunction& VG);

/// Supremum over interior nodes of (-F'(z)) / (lambda/2 - |z|)^(q-1).
double derivative_bound_ratio(const GridFunction& Fprime);

struct BoundReport {
  double a_hat = 0.0;
  double a_hat_refined = 0.0;
  bool pass = false;  // finite and < 5% relative change under grid doubling
};

/// Computes fixed points at n and 2n nodes and checks that the empirical
/// envelope constant for -F' <= a * (lambda/2-|z|)^(q-1) is stable.
BoundReport verify_derivative_bound(const Params& params, int n, double tol = 1e-8);

}  // namespace pdim
