#pragma once

#include <Eigen/Dense>

#include "pdim/fixpoint.hpp"

namespace pdim {

enum class Player { A, B };

struct FixedPointPair {
  GridFunction F_A;
  GridFunction F_B;
};

/// Density along the diagonal l - f = z of the lf-square,
///   rho^z(t) = q (z+t)_+^(q-1) * (-F'(t)),
/// represented through the segment slopes of the piecewise-linear F, plus
/// the atom q (z+lambda/2)^(q-1) F(lambda/2) at t = lambda/2.
struct DiagonalDensity {
  Params params;
  double z = 0.0;
  Eigen::VectorXd nodes;
  Eigen::VectorXd seg_coeff;  // c_k = -slope_k(F) >= 0, one per segment
  double atom = 0.0;
  double continuous_mass = 0.0;
};

DiagonalDensity build_density(const GridFunction& F, double z);

/// int rho^z(t) dt, segment exact; valid for z in [-lambda/2, 3 lambda/2].
double density_mass(const GridFunction& F, double z);

/// q (z+lambda/2)^(q-1) * F(lambda/2); infinite at z = -lambda/2 for q < 1.
double atom_mass(const GridFunction& F, double z);

/// Total marginal mass of the diagonal l - f = z (continuous part + atom).
double marginal_J(const GridFunction& F, double z);

struct RightLimitReport {
  double I_limit = 0.0;
  double mass_limit = 0.0;  // extrapolated int rho^z as z -> lambda/2
  bool divergent = false;   // mass grows without bound => I = 1
  double growth_exponent = 0.0;
};

/// Continuous extension of I at z = +lambda/2, by extrapolating
/// int rho^z over a geometric sequence z -> lambda/2 with a ratio test
/// for divergence.
RightLimitReport right_endpoint_I(const GridFunction& F);

/// I(z) = mass / (atom + mass), with the continuous extensions 0 at
/// -lambda/2 and right_endpoint_I at +lambda/2.
double I_value(const GridFunction& F, double z);

/// Discretized transition operator L = D(S(.)): row z holds the hat-basis
/// quadrature weights of the normalized kernel rho^z / int rho^z, and
/// I holds the substochastic diagonal factor.
struct KernelOperator {
  Player player = Player::A;
  Params params;
  Eigen::VectorXd z;
  Eigen::MatrixXd weights;  // nonnegative, rows sum to 1
  Eigen::VectorXd I;        // endpoint entries are the continuous extensions
  bool right_divergent = false;
};

/// Builds the operator for the given player from a converged fixed-point
/// pair (player A uses F_A, player B uses F_B).
KernelOperator build_operator(Player player, const FixedPointPair& pair);

/// L(h)(z) = I(z) * sum_t W[z,t] h(t) on the grid.
GridFunction apply_operator(const KernelOperator& op, const GridFunction& h);

/// Averaging factor alone: S(h)(z) = sum_t W[z,t] h(t).
GridFunction apply_stochastic(const KernelOperator& op, const GridFunction& h);

/// sup over the grid of (L_B o L_A)(1); equals the sup-norm operator norm
/// of the composition since both factors are positive.
double compose_norm(const KernelOperator& op_B, const KernelOperator& op_A);

/// Dense matrix of the composition D_B S_B D_A S_A.
Eigen::MatrixXd compose_matrix(const KernelOperator& op_B, const KernelOperator& op_A);

/// Empirical envelope constant for the diagonal-mass bound
///   J(z) <= alpha * max((z+lambda/2)^(2q-1), |z-lambda/2|^(q-1)),
/// swept over [-lambda/2, 3 lambda/2].
double empirical_alpha(const GridFunction& F);

struct ExponentChoice {
  double m = 0.0;
  double epsilon = 0.0;  // estimated tail factor at the chosen m
  bool ok = false;       // epsilon < 1/2 reached within the candidate set
};

/// Smallest m in {1,2,4,8,16}/lambda whose tail factor drops below 1/2.
ExponentChoice choose_exponent(const Params& params, double alpha, double norm);

/// Default series prefactor 2 (2 + lambda^q).
double default_series_constant(const Params& params);

struct PsiResult {
  GridFunction psi;
  double norm = 0.0;               // ||L_B o L_A|| on the grid
  double identity_residual = 0.0;  // sup |(L_B o L_A)psi - (psi - K e^{mt})|
};

/// Geometric-series majorant psi_t = K e^{mt} sum_k (L_B o L_A)^k (1),
/// computed by solving (Id - L_B L_A) x = 1. Throws if the composed norm
/// is >= 1 on the grid.
PsiResult neumann_psi(double t, const KernelOperator& op_B, const KernelOperator& op_A,
                      double K_const, double m);

}  // namespace pdim
