#include <doctest.h>

#include <cmath>
#include <functional>

#include "pdim/operators.hpp"
#include "pdim/random.hpp"

using namespace pdim;

namespace {

FixedPointPair fixed_pair(const Params& params, int n) {
  auto fp = iterate_fixpoint(params, n, 1e-9, 500);
  REQUIRE(fp.converged);
  return {fp.F_A, fp.F_B};
}

// Adaptive Simpson of f on [a,b] (smooth integrand).
double simpson(const std::function<double(double)>& f, double a, double b, double tol,
               int depth) {
  const double m = 0.5 * (a + b);
  const double whole = (b - a) / 6.0 * (f(a) + 4 * f(m) + f(b));
  const double left = (m - a) / 6.0 * (f(a) + 4 * f(0.5 * (a + m)) + f(m));
  const double right = (b - m) / 6.0 * (f(m) + 4 * f(0.5 * (m + b)) + f(b));
  if (depth <= 0 || std::abs(left + right - whole) < 15 * tol) return left + right;
  return simpson(f, a, m, tol / 2, depth - 1) + simpson(f, m, b, tol / 2, depth - 1);
}

// Direct quadrature of int h(t) rho^z(t) dt with the substitution
// u = (z+t)^q that removes the kernel pole; the density factor -F'(t)
// is read from the segment slopes, independently of the row assembly.
double rho_integral_oracle(const GridFunction& F, const GridFunction& h, double z) {
  const double q = F.params.q;
  const double hh = F.params.half();
  double total = 0.0;
  for (int k = 0; k < F.segments(); ++k) {
    const double t0 = std::max(F.z(k), -z), t1 = F.z(k + 1);
    if (t1 <= t0) continue;
    const double c = std::max(0.0, -F.slope(k));
    if (c == 0.0) continue;
    const double u0 = std::pow(z + t0, q), u1 = std::pow(z + t1, q);
    auto f = [&](double u) { return h.eval(std::pow(u, 1.0 / q) - z); };
    total += c * simpson(f, u0, u1, 1e-13, 36);
  }
  (void)hh;
  return total;
}

GridFunction on_grid(const KernelOperator& op, const std::function<double(double)>& f) {
  GridFunction g;
  g.params = op.params;
  g.z = op.z;
  g.v.resize(op.z.size());
  for (int i = 0; i < op.z.size(); ++i) g.v(i) = f(op.z(i));
  return g;
}

}  // namespace

TEST_CASE("diagonal density is nonnegative with the right support") {
  const Params params{0.5, 2.0};
  auto pair = fixed_pair(params, 512);
  Rng rng = derive_stream({404, 0});
  for (int rep = 0; rep < 1000; ++rep) {
    const double z = -params.half() + uniform_open(rng) * params.lambda;
    auto d = build_density(pair.F_A, z);
    CHECK(d.continuous_mass >= 0.0);
    CHECK(d.atom >= 0.0);
    CHECK((d.seg_coeff.array() >= 0.0).all());
  }
  CHECK_THROWS(build_density(pair.F_A, params.half() + 0.5));

  // Toward the left end the atom blows up like (z + lambda/2)^{q-1} while
  // the continuous mass stays bounded, so I decreases to 0 there.
  double prev = 1.0;
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const double i = I_value(pair.F_A, -params.half() + eps);
    CHECK(i < prev);
    prev = i;
  }
  CHECK(prev < 0.01);
}

TEST_CASE("diagonal mass obeys the two-regime envelope") {
  const Params params{0.5, 2.0};
  auto pair = fixed_pair(params, 512);
  const double alpha = empirical_alpha(pair.F_A);
  CHECK(std::isfinite(alpha));
  CHECK(alpha > 0.0);
  const double h = params.half();
  for (double frac : {0.05, 0.3, 0.6, 0.95}) {
    const double z = -h + frac * params.lambda;
    const double envelope = std::max(std::pow(z + h, 2 * params.q - 1),
                                     std::pow(std::abs(z - h), params.q - 1));
    CHECK(density_mass(pair.F_A, z) <= alpha * envelope * (1 + 1e-9));
  }
}

TEST_CASE("I endpoints and interior range") {
  const Params params{0.5, 2.0};
  auto pair = fixed_pair(params, 512);
  CHECK(I_value(pair.F_A, -params.half()) == 0.0);
  for (double frac : {0.1, 0.5, 0.9}) {
    const double z = -params.half() + frac * params.lambda;
    const double i = I_value(pair.F_A, z);
    CHECK(i >= 0.0);
    CHECK(i < 1.0);
  }
}

TEST_CASE("right-endpoint dichotomy in q") {
  {
    const Params params{0.4, 1.0};
    auto pair = fixed_pair(params, 1024);
    auto report = right_endpoint_I(pair.F_A);
    CHECK(report.divergent);
    CHECK(report.I_limit == doctest::Approx(1.0).epsilon(0.02));
  }
  {
    const Params params{0.7, 1.0};
    auto pair = fixed_pair(params, 1024);
    auto report = right_endpoint_I(pair.F_A);
    CHECK(!report.divergent);
    CHECK(report.I_limit < 1.0);
    CHECK(std::isfinite(report.mass_limit));
  }
}

TEST_CASE("operator rows are stochastic and apply matches its contracts") {
  const Params params{0.5, 2.0};
  auto pair = fixed_pair(params, 512);
  auto op_a = build_operator(Player::A, pair);

  for (int i = 0; i < op_a.weights.rows(); ++i) {
    CHECK((op_a.weights.row(i).array() >= 0.0).all());
    CHECK(op_a.weights.row(i).sum() == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK((op_a.I.array() >= 0.0).all());
  CHECK((op_a.I.array() <= 1.0).all());
  CHECK(op_a.I(0) == 0.0);

  // L(1) = I exactly
  auto ones = on_grid(op_a, [](double) { return 1.0; });
  auto li = apply_operator(op_a, ones);
  CHECK((li.v - op_a.I).cwiseAbs().maxCoeff() < 1e-12);

  // L(t) stays inside [-lambda/2, lambda/2]
  auto ident = on_grid(op_a, [](double z) { return z; });
  auto lt = apply_operator(op_a, ident);
  CHECK(lt.v.maxCoeff() <= params.half() + 1e-12);
  CHECK(lt.v.minCoeff() >= -params.half() - 1e-12);

  // linearity
  Rng rng = derive_stream({606, 0});
  auto h1 = on_grid(op_a, [&](double z) { return std::sin(3 * z); });
  auto h2 = on_grid(op_a, [&](double z) { return z * z; });
  (void)rng;
  GridFunction combo = h1;
  combo.v = 2.0 * h1.v - 0.7 * h2.v;
  auto lhs = apply_operator(op_a, combo);
  auto rhs1 = apply_operator(op_a, h1);
  auto rhs2 = apply_operator(op_a, h2);
  CHECK((lhs.v - (2.0 * rhs1.v - 0.7 * rhs2.v)).cwiseAbs().maxCoeff() < 1e-10);

  // positivity and the sup bound of the stochastic factor
  auto pos = on_grid(op_a, [](double z) { return 1.5 + std::cos(2 * z); });
  CHECK((apply_operator(op_a, pos).v.array() >= 0.0).all());
  CHECK(apply_stochastic(op_a, pos).v.maxCoeff() <= pos.v.maxCoeff() + 1e-12);
}

TEST_CASE("operator application matches direct quadrature of the definition") {
  const Params params{0.6, 1.5};
  auto pair = fixed_pair(params, 512);
  auto op_a = build_operator(Player::A, pair);
  auto h = on_grid(op_a, [](double z) { return 0.3 + 0.5 * std::sin(2.0 * z); });
  auto lh = apply_operator(op_a, h);
  for (int i = 50; i + 50 < op_a.z.size(); i += 45) {
    const double z = op_a.z(i);
    const double numerator = rho_integral_oracle(pair.F_A, h, z);
    const double denom = atom_mass(pair.F_A, z) + density_mass(pair.F_A, z);
    CHECK(lh.v(i) == doctest::Approx(numerator / denom).epsilon(1e-6));
  }
}

TEST_CASE("composed norm is a contraction and refinement stable") {
  const Params params{0.5, 2.0};
  auto pair1 = fixed_pair(params, 1024);
  auto norm1 = compose_norm(build_operator(Player::B, pair1), build_operator(Player::A, pair1));
  CHECK(norm1 > 0.0);
  CHECK(norm1 < 1.0);

  auto pair2 = fixed_pair(params, 2048);
  auto norm2 = compose_norm(build_operator(Player::B, pair2), build_operator(Player::A, pair2));
  CHECK(std::abs(norm1 - norm2) / norm2 < 0.01);

  // factorization bound: norm <= sup I_B * sup I_A
  auto op_a = build_operator(Player::A, pair1);
  auto op_b = build_operator(Player::B, pair1);
  CHECK(norm1 <= op_a.I.maxCoeff() * op_b.I.maxCoeff() + 1e-12);
}

TEST_CASE("marginal mass identities") {
  const Params params{0.5, 2.0};
  auto pair = fixed_pair(params, 512);
  // At z = -lambda/2 the atom term diverges for q < 1.
  CHECK(std::isinf(marginal_J(pair.F_A, -params.half())));
  // Interior: equals the operator denominator by definition.
  for (double frac : {0.2, 0.7}) {
    const double z = -params.half() + frac * params.lambda;
    CHECK(marginal_J(pair.F_A, z) ==
          doctest::Approx(atom_mass(pair.F_A, z) + density_mass(pair.F_A, z)));
  }
  // Extended range up to 3*lambda/2 stays finite.
  CHECK(std::isfinite(marginal_J(pair.F_A, 1.4 * params.half())));
  CHECK(std::isfinite(marginal_J(pair.F_A, 3.0 * params.half())));
}

TEST_CASE("geometric series majorant") {
  const Params params{0.5, 1.0};
  auto pair = fixed_pair(params, 1024);
  auto op_a = build_operator(Player::A, pair);
  auto op_b = build_operator(Player::B, pair);
  const double norm = compose_norm(op_b, op_a);
  const double alpha = std::max(empirical_alpha(pair.F_A), empirical_alpha(pair.F_B));
  auto choice = choose_exponent(params, alpha, norm);
  const double K = default_series_constant(params);
  CHECK(K == doctest::Approx(2.0 * (2.0 + std::pow(params.lambda, params.q))));

  for (double t : {0.0, 0.5, 2.0 * params.lambda}) {
    auto psi = neumann_psi(t, op_b, op_a, K, choice.m);
    const double floor = K * std::exp(choice.m * t);
    CHECK(psi.psi.v.minCoeff() >= floor - 1e-9);
    CHECK(psi.psi.v.maxCoeff() <= floor / (1.0 - norm) + 1e-9);
    CHECK(psi.identity_residual < 1e-8);
  }
  CHECK_THROWS(neumann_psi(3.0 * params.lambda, op_b, op_a, K, choice.m));
}
