#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "permlab/error.hpp"
#include "permlab/measures.hpp"
#include "permlab/models.hpp"

using namespace permlab;

namespace {

Eigen::MatrixXd two_by_two(double ell) {
  Eigen::MatrixXd d(2, 2);
  d << 1 + ell, 1 - ell, 1 - ell, 1 + ell;
  return d;
}

}  // namespace

TEST_CASE("grid construction validates the density") {
  CHECK_NOTHROW(Permuton::grid(Eigen::MatrixXd::Ones(3, 3)));
  CHECK_THROWS_AS(Permuton::grid(Eigen::MatrixXd::Ones(2, 3)), ValidationError);
  Eigen::MatrixXd neg = Eigen::MatrixXd::Ones(2, 2);
  neg(0, 0) = -0.5;
  CHECK_THROWS_AS(Permuton::grid(neg), ValidationError);
  CHECK_THROWS_AS(Permuton::grid(2.0 * Eigen::MatrixXd::Ones(2, 2)), ValidationError);
}

TEST_CASE("segments must have slope plus or minus one") {
  CHECK_THROWS_AS(make_segment({0, 0}, {1, 0.5}, 1.0), ValidationError);
  const Segment s = make_segment({1, 0}, {0, 1}, 1.0);
  CHECK(s.from.x == 0.0);
  CHECK(s.dir == -1);
  CHECK(s.intercept() == doctest::Approx(1.0));
}

TEST_CASE("box mass of a grid matches quadrature of the density") {
  const Eigen::MatrixXd d = oracle::random_doubly_stochastic(5, 11);
  const Permuton mu = Permuton::grid(d);
  auto dens = [&](double x, double y) {
    const int i = std::min(4, static_cast<int>(x * 5)), j = std::min(4, static_cast<int>(y * 5));
    return d(i, j);
  };
  for (Rect r : {make_rect(0.1, 0.7, 0.2, 0.9), make_rect(0.0, 1.0, 0.33, 0.34),
                 make_rect(0.4, 0.6, 0.0, 1.0)}) {
    // quadrature nodes aligned so that cells are integrated exactly
    double q = 0.0;
    const int r_n = 1000;
    const double hx = r.width() / r_n, hy = r.height() / r_n;
    for (int a = 0; a < r_n; ++a)
      for (int b = 0; b < r_n; ++b) q += dens(r.x_lo + (a + 0.5) * hx, r.y_lo + (b + 0.5) * hy);
    q *= hx * hy;
    CHECK(box_mass(mu, r) == doctest::Approx(q).epsilon(2e-3));
  }
}

TEST_CASE("box mass of a segment measure follows the segment length") {
  const Permuton x = xi();
  CHECK(box_mass(x, blocks::D11) == doctest::Approx(0.5));
  CHECK(box_mass(x, blocks::D12) == doctest::Approx(0.0));
  CHECK(box_mass(x, make_rect(0, 0.25, 0, 1)) == doctest::Approx(0.25));
  CHECK(box_mass(x, make_rect(0, 0.25, 0, 0.3)) == doctest::Approx(0.05));
}

TEST_CASE("property: random Sinkhorn grids have uniform marginals") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const int m = 2 + static_cast<int>(s % 6);
    const Permuton mu = Permuton::grid(oracle::random_doubly_stochastic(m, s));
    CHECK(has_uniform_marginals(mu, 1e-9));
    for (double x : {0.13, 0.5, 0.77})
      CHECK(box_mass(mu, make_rect(0, x, 0, 1)) == doctest::Approx(x).epsilon(1e-9));
  }
}

TEST_CASE("marginal CDFs of a non-permuton grid") {
  Eigen::MatrixXd d(2, 2);
  d << 2, 0, 2, 0;  // all mass at y < 1/2
  const Permuton nu = Permuton::grid(d);
  const auto [fx, fy] = marginal_cdfs(nu);
  CHECK(fx.is_identity());
  CHECK_FALSE(fy.is_identity());
  CHECK(fy(0.25) == doctest::Approx(0.5));
  CHECK(fy(0.5) == doctest::Approx(1.0));
  CHECK(fy.inverse(0.5) == doctest::Approx(0.25));
}

TEST_CASE("project_uniform leaves permutons alone") {
  const Permuton mu = mu_ell(0.3);
  const Permuton p = project_uniform(mu, 8);
  CHECK(tv_distance(p, mu) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("property: project_uniform output has uniform marginals") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    Eigen::MatrixXd d = oracle::random_doubly_stochastic(4, s + 100);
    d.col(0) *= 3.0;  // break the y-marginal
    d *= 16.0 / d.sum();
    const Permuton nu = Permuton::grid(d);
    CHECK_FALSE(has_uniform_marginals(nu, 1e-6));
    const Permuton p = project_uniform(nu, 16);
    CHECK(has_uniform_marginals(p, 1e-9));
    // idempotent
    CHECK(tv_distance(project_uniform(p, 16), p) < 1e-9);
  }
}

TEST_CASE("project_uniform of a lower-half grid stretches it") {
  Eigen::MatrixXd d(2, 2);
  d << 2, 0, 2, 0;
  const Permuton p = project_uniform(Permuton::grid(d), 2);
  CHECK(has_uniform_marginals(p, 1e-12));
  CHECK(box_mass(p, make_rect(0, 0.5, 0, 1)) == doctest::Approx(0.5));
}

TEST_CASE("KL of the uniform permuton against mu_ell") {
  for (double ell : {0.0, 0.25, 0.5, 0.9}) {
    // D(lambda | mu_ell) = -1/2 log(1 - ell^2) by direct summation over the four blocks
    const double expect = 0.5 * (std::log(1.0 / (1 + ell)) + std::log(1.0 / (1 - ell)));
    CHECK(kl_divergence(lebesgue(), mu_ell(ell)) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("KL is infinite without absolute continuity and zero on the diagonal") {
  CHECK(std::isinf(kl_divergence(lebesgue(), mu_ell(1.0))));
  CHECK(kl_divergence(xi(), xi()) == doctest::Approx(0.0));
  CHECK(kl_divergence(xi11(), xi()) == doctest::Approx(std::log(2.0)));
  CHECK(std::isinf(kl_divergence(xi(), xi11())));
}

TEST_CASE("KL across grid resolutions uses the union partition") {
  const Eigen::MatrixXd a = oracle::random_doubly_stochastic(3, 5);
  const Permuton nu = Permuton::grid(a);
  const Permuton mu = mu_ell(0.4);
  // oracle: evaluate on the 6x6 refinement by hand
  double kl = 0.0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      const double f = a(i / 2, j / 2);
      const double g = two_by_two(0.4)(i / 3, j / 3);
      kl += f / 36.0 * std::log(f / g);
    }
  CHECK(kl_divergence(nu, mu) == doctest::Approx(kl).epsilon(1e-12));
}

TEST_CASE("property: tv is a metric bounded by one") {
  const Permuton a = mu_ell(0.2), b = mu_ell(0.7), c = lebesgue();
  CHECK(tv_distance(a, b) == doctest::Approx(tv_distance(b, a)));
  CHECK(tv_distance(a, b) <= tv_distance(a, c) + tv_distance(c, b) + 1e-15);
  CHECK(tv_distance(a, b) == doctest::Approx(0.25));  // |0.5 ell difference| over two blocks
  CHECK(tv_distance(lebesgue(), xi()) == doctest::Approx(1.0));
  CHECK(tv_distance(xi11(), xi22()) == doctest::Approx(1.0));
}

TEST_CASE("reflect is an involution that swaps D11 and D22") {
  const Permuton nu = Permuton::grid(oracle::random_doubly_stochastic(4, 3));
  CHECK(tv_distance(reflect(reflect(nu)), nu) < 1e-14);
  CHECK(box_mass(reflect(nu), blocks::D11) == doctest::Approx(box_mass(nu, blocks::D22)));
  CHECK(tv_distance(reflect(xi11()), xi22()) < 1e-12);
}

TEST_CASE("mixtures and flattening") {
  const Permuton m = mix({mu_ell(0.2), mu_ell(0.6)}, {0.5, 0.5});
  CHECK(tv_distance(m, mu_ell(0.4)) < 1e-12);
  CHECK_THROWS_AS(mix({mu_ell(0.2)}, {0.7}), ValidationError);
  const FlatMeasure f = flatten(mix({lebesgue(), xi()}, {0.25, 0.75}));
  CHECK(f.m == 1);
  CHECK(f.segments.size() == 2);
  CHECK(f.box_mass({0, 1, 0, 1}) == doctest::Approx(1.0));
}

TEST_CASE("rasterize keeps box masses on the raster") {
  const Permuton r = rasterize(xi(), 4);
  CHECK(r.kind() == Permuton::Kind::Grid);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const Rect cell = make_rect(i / 4.0, (i + 1) / 4.0, j / 4.0, (j + 1) / 4.0);
      CHECK(box_mass(r, cell) == doctest::Approx(box_mass(xi(), cell)));
    }
}

TEST_CASE("corner sums are cumulative") {
  Eigen::MatrixXd mass(2, 2);
  mass << 1, 2, 3, 4;
  const auto c = corner_sums(mass);
  CHECK(c(2, 2) == doctest::Approx(10));
  CHECK(c(1, 2) == doctest::Approx(3));
  CHECK(c(2, 1) == doctest::Approx(4));
}
