#include "pdim/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace pdim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd negative_slopes(const GridFunction& F) {
  Eigen::VectorXd c(F.segments());
  for (int k = 0; k < F.segments(); ++k) c(k) = std::max(0.0, -F.slope(k));
  return c;
}

}  // namespace

double density_mass(const GridFunction& F, double z) {
  const double q = F.params.q;
  double mass = 0.0;
  for (int k = 0; k < F.segments(); ++k) {
    const double t1 = F.z(k + 1);
    if (z + t1 <= 0.0) continue;
    const double c = std::max(0.0, -F.slope(k));
    mass += c * segment_hat(q, z, F.z(k), t1).m0;
  }
  return mass;
}

double atom_mass(const GridFunction& F, double z) {
  const double q = F.params.q;
  const double s = z + F.params.half();
  if (s <= 0.0) {
    if (F.right_value() == 0.0) return 0.0;
    return q < 1.0 ? kInf : q * F.right_value();
  }
  return q * std::pow(s, q - 1.0) * F.right_value();
}

double marginal_J(const GridFunction& F, double z) {
  return atom_mass(F, z) + density_mass(F, z);
}

DiagonalDensity build_density(const GridFunction& F, double z) {
  const double h = F.params.half();
  if (z < -h - 1e-12 || z > h + 1e-12)
    throw std::invalid_argument("build_density: z outside [-lambda/2, lambda/2]");
  DiagonalDensity d;
  d.params = F.params;
  d.z = z;
  d.nodes = F.z;
  d.seg_coeff = negative_slopes(F);
  d.atom = atom_mass(F, z);
  d.continuous_mass = density_mass(F, z);
  return d;
}

RightLimitReport right_endpoint_I(const GridFunction& F) {
  const Params& p = F.params;
  const double h = p.half();
  const int n = F.segments();
  const double last_cell = F.z(n) - F.z(n - 1);

  // Geometric approach z_k = lambda/2 - d_k; stop well above the grid
  // resolution so that the mass values still see the continuum behaviour.
  std::vector<double> masses;
  double d = h / 4.0;
  while (d >= 8.0 * last_cell && masses.size() < 48) {
    masses.push_back(density_mass(F, h - d));
    d *= 0.5;
  }
  RightLimitReport report;
  if (masses.size() < 4) {
    report.mass_limit = density_mass(F, h);
    report.I_limit = report.mass_limit / (atom_mass(F, h) + report.mass_limit);
    return report;
  }

  const std::size_t m = masses.size();
  double growth = 0.0;
  for (std::size_t k = m - 3; k < m; ++k)
    growth += std::log2(masses[k] / masses[k - 1]);
  growth /= 3.0;
  report.growth_exponent = growth;

  // Under halving of the distance the mass increments scale like d^(2q-1):
  // they keep growing toward the endpoint exactly when the mass diverges
  // there, and otherwise their ratio gives a geometric tail estimate.
  double ratio = 0.0;
  int used = 0;
  for (std::size_t k = m - 2; k < m; ++k) {
    const double inc_prev = masses[k - 1] - masses[k - 2];
    const double inc_cur = masses[k] - masses[k - 1];
    if (inc_prev > 0.0 && inc_cur > 0.0) {
      ratio += inc_cur / inc_prev;
      ++used;
    }
  }
  ratio = used > 0 ? ratio / used : 0.0;
  if (ratio > 0.95) {
    report.divergent = true;
    report.mass_limit = kInf;
    report.I_limit = 1.0;
    return report;
  }
  const double last_inc = masses[m - 1] - masses[m - 2];
  report.mass_limit = masses[m - 1];
  if (ratio > 0.0 && last_inc > 0.0)
    report.mass_limit += last_inc * ratio / (1.0 - ratio);
  report.I_limit = report.mass_limit / (atom_mass(F, h) + report.mass_limit);
  return report;
}

double I_value(const GridFunction& F, double z) {
  const double h = F.params.half();
  if (z <= -h + 1e-15 * F.params.lambda) return 0.0;
  if (z >= h - 1e-15 * F.params.lambda) return right_endpoint_I(F).I_limit;
  const double mass = density_mass(F, z);
  return mass / (atom_mass(F, z) + mass);
}

KernelOperator build_operator(Player player, const FixedPointPair& pair) {
  const GridFunction& F = (player == Player::A) ? pair.F_A : pair.F_B;
  const Params& p = F.params;
  const double q = p.q;
  const int n = F.segments();
  const int nodes = n + 1;

  KernelOperator op;
  op.player = player;
  op.params = p;
  op.z = F.z;
  op.weights = Eigen::MatrixXd::Zero(nodes, nodes);
  op.I = Eigen::VectorXd::Zero(nodes);

  const Eigen::VectorXd c = negative_slopes(F);

  for (int i = 0; i < nodes; ++i) {
    const double z = F.z(i);
    if (i == 0) {
      // Support of rho^z degenerates; I = 0 so the row never contributes.
      op.weights(0, nodes - 1) = 1.0;
      continue;
    }
    Eigen::VectorXd row = Eigen::VectorXd::Zero(nodes);
    double mass = 0.0;
    for (int k = 0; k < n; ++k) {
      const double t0 = F.z(k), t1 = F.z(k + 1);
      if (z + t1 <= 0.0 || c(k) == 0.0) continue;
      const SegHat sm = segment_hat(q, z, t0, t1);
      row(k) += c(k) * sm.left;
      row(k + 1) += c(k) * sm.right;
      mass += c(k) * sm.m0;
    }
    if (!(mass > 0.0)) {
      op.weights(i, nodes - 1) = 1.0;
      op.I(i) = 0.0;
      continue;
    }
    row /= row.sum();
    if (std::abs(row.sum() - 1.0) > 1e-6)
      throw std::runtime_error("build_operator: kernel row failed to normalize");
    op.weights.row(i) = row.transpose();
    op.I(i) = mass / (atom_mass(F, z) + mass);
  }

  op.I(0) = 0.0;
  const RightLimitReport right = right_endpoint_I(F);
  op.I(nodes - 1) = right.I_limit;
  op.right_divergent = right.divergent;
  return op;
}

GridFunction apply_stochastic(const KernelOperator& op, const GridFunction& h) {
  if (h.z.size() != op.z.size() || (h.z - op.z).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("apply: grid mismatch");
  GridFunction out;
  out.params = op.params;
  out.z = op.z;
  out.v = op.weights * h.v;
  return out;
}

GridFunction apply_operator(const KernelOperator& op, const GridFunction& h) {
  GridFunction out = apply_stochastic(op, h);
  out.v = op.I.cwiseProduct(out.v);
  return out;
}

double compose_norm(const KernelOperator& op_B, const KernelOperator& op_A) {
  GridFunction ones;
  ones.params = op_A.params;
  ones.z = op_A.z;
  ones.v = Eigen::VectorXd::Ones(op_A.z.size());
  return apply_operator(op_B, apply_operator(op_A, ones)).v.maxCoeff();
}

Eigen::MatrixXd compose_matrix(const KernelOperator& op_B, const KernelOperator& op_A) {
  const Eigen::MatrixXd la = op_A.I.asDiagonal() * op_A.weights;
  const Eigen::MatrixXd lb = op_B.I.asDiagonal() * op_B.weights;
  return lb * la;
}

double empirical_alpha(const GridFunction& F) {
  const Params& p = F.params;
  const double h = p.half();
  double sup = 0.0;
  auto probe = [&](double z) {
    const double envelope = std::max(std::pow(z + h, 2.0 * p.q - 1.0),
                                     std::pow(std::abs(z - h), p.q - 1.0));
    if (!std::isfinite(envelope) || !(envelope > 0.0)) return;
    const double j = marginal_J(F, z);
    if (std::isfinite(j)) sup = std::max(sup, j / envelope);
  };
  for (int i = 1; i + 1 < F.z.size(); ++i) probe(F.z(i));
  for (int i = 1; i <= 200; ++i) probe(h + (2.0 * h) * i / 200.0);
  return sup;
}

namespace {

// int_z^inf |x - pole|^(q-1) e^{m(z-x)} dx, by segment-exact power moments
// with a midpoint exponential on a mesh geometric around the pole.
double power_exp_tail(double q, double pole, double z, double m) {
  const double cutoff = std::max(z, pole) + 40.0 / m;
  double total = 0.0;
  auto piece = [&](double x0, double x1) {
    // |x - pole|^(q-1) is one-signed on [x0, x1]
    const double mid = 0.5 * (x0 + x1);
    const double a0 = std::abs(x0 - pole), a1 = std::abs(x1 - pole);
    const double mom = std::abs(std::pow(a1, q) - std::pow(a0, q)) / q;
    total += std::exp(m * (z - mid)) * mom;
  };
  auto sweep = [&](double from, double to) {
    if (to <= from) return;
    const int steps = 400;
    // geometric spacing measured from the pole
    const double d0 = std::max(std::abs(from - pole), 1e-14 * (to - from + 1.0));
    const double d1 = std::abs(to - pole);
    if (from >= pole) {
      double prev = from;
      for (int i = 1; i <= steps; ++i) {
        double x = pole + d0 * std::pow(std::max(d1, d0 * 1.0000001) / d0,
                                        static_cast<double>(i) / steps);
        x = std::min(x, to);
        if (x > prev) piece(prev, x);
        prev = x;
      }
      if (prev < to) piece(prev, to);
    } else {
      // from < pole <= to is split by the caller; here to <= pole
      double prev = to;
      std::vector<double> xs;
      const double dd0 = std::max(std::abs(to - pole), 1e-14);
      const double dd1 = std::abs(from - pole);
      for (int i = 1; i <= steps; ++i) {
        double x = pole - dd0 * std::pow(std::max(dd1, dd0 * 1.0000001) / dd0,
                                         static_cast<double>(i) / steps);
        x = std::max(x, from);
        xs.push_back(x);
      }
      for (double x : xs) {
        if (x < prev) piece(x, prev);
        prev = x;
      }
    }
  };
  if (z < pole) {
    sweep(z, pole);
    sweep(pole, cutoff);
  } else {
    sweep(z, cutoff);
  }
  return total;
}

}  // namespace

ExponentChoice choose_exponent(const Params& params, double alpha, double norm) {
  const double h = params.half();
  ExponentChoice choice;
  for (double factor : {1.0, 2.0, 4.0, 8.0, 16.0}) {
    const double m = factor / params.lambda;
    double sup = 0.0;
    for (int i = 0; i <= 32; ++i) {
      const double z = -h + params.lambda * i / 32.0;
      sup = std::max(sup, power_exp_tail(params.q, -h, z, m) +
                              power_exp_tail(params.q, h, z, m));
    }
    const double eps = alpha / (1.0 - norm) * sup;
    choice.m = m;
    choice.epsilon = eps;
    if (eps < 0.5) {
      choice.ok = true;
      break;
    }
  }
  return choice;
}

double default_series_constant(const Params& params) {
  return 2.0 * (2.0 + std::pow(params.lambda, params.q));
}

PsiResult neumann_psi(double t, const KernelOperator& op_B, const KernelOperator& op_A,
                      double K_const, double m) {
  if (t < 0.0 || t > 2.0 * op_A.params.lambda + 1e-12)
    throw std::invalid_argument("neumann_psi: t outside [0, 2*lambda]");
  PsiResult result;
  result.norm = compose_norm(op_B, op_A);
  if (!(result.norm < 1.0))
    throw std::runtime_error("neumann_psi: composed operator norm >= 1, series diverges");

  const Eigen::MatrixXd composed = compose_matrix(op_B, op_A);
  const int n = static_cast<int>(composed.rows());
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - composed;
  const Eigen::VectorXd x = system.partialPivLu().solve(Eigen::VectorXd::Ones(n));

  const double scale = K_const * std::exp(m * t);
  result.psi.params = op_A.params;
  result.psi.z = op_A.z;
  result.psi.v = scale * x;
  // relative to the inhomogeneous term, so the report is scale-free
  result.identity_residual =
      (composed * result.psi.v - (result.psi.v.array() - scale).matrix())
          .cwiseAbs()
          .maxCoeff() /
      scale;
  return result;
}

}  // namespace pdim
