#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "permlab/error.hpp"
#include "permlab/models.hpp"

using namespace permlab;

namespace {

const Pattern p21 = parse_pattern("21");

// sup over w of theta (w^2 + (1-w)^2) - [w log 2w + (1-w) log 2(1-w)] by grid search
// refined with a golden-section pass.
double xi_free_energy_oracle(double theta) {
  auto f = [&](double w) {
    auto xlx = [](double x) { return x > 0 ? x * std::log(x) : 0.0; };
    return theta * (w * w + (1 - w) * (1 - w)) - (xlx(w) + xlx(1 - w) + std::log(2.0));
  };
  double best = 0.5;
  for (int k = 0; k <= 100000; ++k)
    if (f(k / 100000.0) > f(best)) best = k / 100000.0;
  double a = std::max(0.0, best - 1e-5), b = std::min(1.0, best + 1e-5);
  const double g = (std::sqrt(5.0) - 1) / 2;
  for (int it = 0; it < 200; ++it) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (f(c) > f(d)) b = d; else a = c;
  }
  return f(0.5 * (a + b));
}

double tanh_fixed_point(double theta) {
  double x = 1.0;
  for (int k = 0; k < 200000; ++k) x = std::tanh(theta * x);
  return x;
}

int inversion_degree(const Permutation& eta, int i) {
  int d = 0;
  for (int j = 0; j < eta.size(); ++j) d += (j < i && eta[j] > eta[i]) || (j > i && eta[j] < eta[i]);
  return d;
}

}  // namespace

TEST_CASE("reference permutons") {
  CHECK(has_uniform_marginals(mu_ell(0.7)));
  CHECK(has_uniform_marginals(xi()));
  CHECK(has_uniform_marginals(rect_permuton(0.35)));
  CHECK_FALSE(has_uniform_marginals(xi11()));
  CHECK_THROWS_AS(mu_ell(1.5), ValidationError);
  CHECK_THROWS_AS(rect_permuton(-0.1), ValidationError);
  CHECK(t_sigma_measure_exact(p21, rect_permuton(0.0)) == doctest::Approx(0.0));
  CHECK(t_sigma_measure_exact(p21, rect_permuton(1.0)) == doctest::Approx(1.0));
}

TEST_CASE("Curie-Weiss root against plain iteration") {
  CHECK(curie_weiss_root(0.5) == 0.0);
  CHECK(curie_weiss_root(1.0) == 0.0);
  for (double theta : {1.5, 2.0, 4.0}) {
    const double m = curie_weiss_root(theta);
    CHECK(m == doctest::Approx(std::tanh(theta * m)).epsilon(1e-15));
    CHECK(m == doctest::Approx(tanh_fixed_point(theta)).epsilon(1e-12));
  }
}

TEST_CASE("xi free energy against the one-parameter search") {
  CHECK(xi_free_energy(0.0) == doctest::Approx(0.0).epsilon(1e-15));
  for (double theta : {0.5, 1.0, 2.0, 3.5}) CHECK(xi_free_energy(theta) == doctest::Approx(xi_free_energy_oracle(theta)).epsilon(1e-9));
}

TEST_CASE("xi Gibbs optimizers") {
  CHECK(xi_gibbs_optimizers(0.5).size() == 1);
  const auto two = xi_gibbs_optimizers(2.0);
  REQUIRE(two.size() == 2);
  const double m = curie_weiss_root(2.0);
  CHECK(two[0].w11 == doctest::Approx((1 + m) / 2));
  CHECK(two[1].w11 == doctest::Approx((1 - m) / 2));
  CHECK(box_mass(two[0].measure, blocks::D11) == doctest::Approx((1 + m) / 2));
}

TEST_CASE("conditioned xi optimizers") {
  for (double delta : {0.55, 0.625, 0.8}) {
    const XiConditional c = xi_conditional_optimizers(delta);
    REQUIRE(c.optimizers.size() == 2);
    const double p = (1 + std::sqrt(2 * delta - 1)) / 2, q = 1 - p;
    CHECK(c.optimizers[0].w11 == doctest::Approx(p).epsilon(1e-14));
    CHECK(c.G == doctest::Approx(p * std::log(p) + q * std::log(q) + std::log(2.0)).epsilon(1e-14));
    CHECK(t_sigma_measure_exact(p21, c.optimizers[0].measure) == doctest::Approx(delta));
  }
  CHECK_THROWS_AS(xi_conditional_optimizers(0.5), ValidationError);
  CHECK_THROWS_AS(xi_conditional_optimizers(0.3), ValidationError);
}

TEST_CASE("Mallows density against the sinh form") {
  for (double beta : {-3.0, -0.5, 1.0, 4.0})
    for (Point p : {Point{0.1, 0.2}, Point{0.5, 0.5}, Point{0.9, 0.3}})
      CHECK(mallows_phi(beta, p.x, p.y) ==
            doctest::Approx(oracle::mallows_permuton_density(-beta, p.x, p.y)).epsilon(1e-12));
  CHECK(mallows_density(1.5, 0.3, 0.6) == mallows_phi(3.0, 0.3, 0.6));
  CHECK(mallows_phi(0.0, 0.2, 0.9) == 1.0);
}

TEST_CASE("Mallows density is a permuton density") {
  for (double theta : {-2.0, 1.0}) {
    auto f = [&](double x, double y) { return mallows_density(theta, x, y); };
    CHECK(oracle::quad2(f, 0, 1, 0, 1, 400) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(oracle::quad2(f, 0, 0.3, 0, 1, 400) == doctest::Approx(0.3).epsilon(1e-5));
    CHECK(oracle::quad2(f, 0, 1, 0.6, 1, 400) == doctest::Approx(0.4).epsilon(1e-5));
  }
  CHECK(t_sigma_measure_exact(p21, mallows_grid(1.0, 32)) > 0.5);
  CHECK(t_sigma_measure_exact(p21, mallows_grid(-1.0, 32)) < 0.5);
}

TEST_CASE("Mallows density solves the Euler-Lagrange equation") {
  const MallowsResidual r = mallows_el_residual(1.0, 64, 1e-3);
  CHECK(r.relative < 1e-4);
  CHECK(r.literal_relative > 1.0);
  SolveConfig c;
  c.grid_m = 32;
  const auto [f, rep] = solve_el(p21, lebesgue(), 1.0, c);
  REQUIRE(rep.converged);
  CHECK(tv_distance(f.to_permuton(), mallows_grid(1.0, 32)) < 5e-3);
}

TEST_CASE("S* membership uses constant inversion degree") {
  for (const char* s : {"1", "21", "321", "2143", "3412", "4321"}) CHECK(sstar_check(parse_permutation(s)));
  for (const char* s : {"132", "2413", "312"}) CHECK_FALSE(sstar_check(parse_permutation(s)));
  const Permutation sq = substitution_square(parse_permutation("21"));
  CHECK(sq == parse_permutation("4321"));
  CHECK(sstar_check(substitution_square(parse_permutation("2143"))));
  CHECK_THROWS_AS(sstar_inflate(parse_permutation("132"), 0.5), ValidationError);
}

TEST_CASE("CC test on constructions") {
  for (double z : {0.1, 0.5, 0.9}) {
    const CcReport r = cc_test_21(rect_permuton(z));
    CHECK(r.cc);
    CHECK(r.constant == doctest::Approx(z).epsilon(1e-9));
  }
  const Permutation eta = parse_permutation("2143");
  const double z = 0.4;
  const CcReport r = cc_test_21(sstar_inflate(eta, z));
  CHECK(r.cc);
  CHECK(r.constant == doctest::Approx((inversion_degree(eta, 0) + z) / eta.size()).epsilon(1e-9));
  for (const Permuton& mu : {lebesgue(), mu_ell(0.5), mallows_grid(1.0, 32)}) {
    const CcReport c = cc_test_21(mu);
    CHECK_FALSE(c.cc);
    CHECK(c.witnesses.size() == 2);
  }
}

TEST_CASE("support diagnostics") {
  const SupportDiagnostics x = support_diagnostics_21(xi());
  CHECK_FALSE(x.interior);
  CHECK(x.b == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(x.triangle_mass == doctest::Approx(0.0));
  for (double z : {0.2, 0.7}) {
    const SupportDiagnostics d = support_diagnostics_21(rect_permuton(z));
    CHECK(d.b == doctest::Approx(z).epsilon(1e-9));
    CHECK(d.triangle_mass == doctest::Approx(0.0));
    CHECK(d.residual < 1e-9);
  }
  CHECK(support_diagnostics_21(lebesgue()).interior);
}

TEST_CASE("compressing into D11 and the reflection identity") {
  const Permuton nu = Permuton::grid(oracle::random_doubly_stochastic(4, 21));
  const Permuton c = compress_d11(nu);
  CHECK(box_mass(c, blocks::D11) == doctest::Approx(1.0));
  CHECK(t_sigma_measure_exact(p21, c) == doctest::Approx(t_sigma_measure_exact(p21, nu)));
  for (double ell : {0.2, 0.8}) {
    const ReflectIdentity r = reflect_identity_check(nu, ell);
    CHECK(r.gap < 1e-12);
  }
  CHECK_THROWS_AS(reflect_identity_check(xi(), 0.5), ValidationError);
}

TEST_CASE("block masses and the separation test") {
  const BlockMasses b = block_masses(mu_ell(0.6));
  CHECK(b.d11 == doctest::Approx(0.4));
  CHECK(b.off() == doctest::Approx(0.2));
  CHECK(dmat_check(xi11()).separated);
  CHECK_FALSE(dmat_check(xi()).separated);
  CHECK_FALSE(dmat_check(lebesgue()).separated);
  CHECK(dmat_check(xi11()).band_ok);
}

TEST_CASE("phase-scan bounds") {
  CHECK(std::isinf(off_diagonal_bound(0.0)));
  CHECK(off_diagonal_bound(0.5) == doctest::Approx(std::log(4.0) / std::log(3.0)));
  CHECK(minor_block_bound(0.98) == doctest::Approx(0.1));
}

TEST_CASE("phase scan at ell = 0 has a single optimizer") {
  PhaseScanConfig c;
  c.solve.grid_m = 8;
  const auto rows = phase_scan({0.0}, {0.55, 0.3}, c);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].attainable);
  CHECK(rows[0].clusters == 1);
  CHECK_FALSE(rows[0].separated);
  CHECK_FALSE(rows[1].attainable);  // below t21(mu_0)
  CHECK_THROWS_AS(phase_scan({1.0}, {0.6}, c), ValidationError);
}
