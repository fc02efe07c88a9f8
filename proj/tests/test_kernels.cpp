#include <doctest.h>

#include <random>

#include "permlab/kernels.hpp"

using namespace permlab;

namespace {

// P(U < V) for U ~ U[a,b], V ~ U[c,d] by quadrature over U.
double prob_less_quad(double a, double b, double c, double d) {
  const int r = 200000;
  double s = 0.0;
  for (int k = 0; k < r; ++k) {
    const double u = a + (k + 0.5) * (b - a) / r;
    s += std::clamp((d - u) / (d - c), 0.0, 1.0);
  }
  return s / r;
}

// Inversion probability between a uniform point of `cell` and a uniform point of `s`.
double cell_segment_quad(const Rect& cell, const Segment& s, int r) {
  double tot = 0.0;
  for (int a = 0; a < r; ++a) {
    const double x = s.from.x + (a + 0.5) * s.length_x() / r;
    const double y = s.y_at(x);
    for (int b = 0; b < r; ++b)
      for (int c = 0; c < r; ++c) {
        const double u = cell.x_lo + (b + 0.5) * cell.width() / r;
        const double v = cell.y_lo + (c + 0.5) * cell.height() / r;
        tot += (u - x) * (v - y) < 0;
      }
  }
  return tot / (static_cast<double>(r) * r * r);
}

double segment_segment_quad(const Segment& s, const Segment& t, int r) {
  double tot = 0.0;
  for (int a = 0; a < r; ++a) {
    const double x = s.from.x + (a + 0.5) * s.length_x() / r;
    for (int b = 0; b < r; ++b) {
      const double u = t.from.x + (b + 0.5) * t.length_x() / r;
      tot += (u - x) * (t.y_at(u) - s.y_at(x)) < 0;
    }
  }
  return tot / (static_cast<double>(r) * r);
}

}  // namespace

TEST_CASE("prob_less against quadrature") {
  CHECK(kernels::prob_less(0, 1, 0, 1) == doctest::Approx(0.5));
  CHECK(kernels::prob_less(0, 1, 2, 3) == doctest::Approx(1.0));
  CHECK(kernels::prob_less(2, 3, 0, 1) == doctest::Approx(0.0));
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 20; ++k) {
    double a = u(gen), b = u(gen), c = u(gen), d = u(gen);
    if (a > b) std::swap(a, b);
    if (c > d) std::swap(c, d);
    if (b - a < 1e-3 || d - c < 1e-3) continue;
    CHECK(kernels::prob_less(a, b, c, d) == doctest::Approx(prob_less_quad(a, b, c, d)).epsilon(1e-6));
  }
}

TEST_CASE("cell-segment inversion probability against quadrature") {
  const Segment down = make_segment({0.1, 0.9}, {0.6, 0.4}, 1.0);
  const Segment up = make_segment({0.2, 0.1}, {0.9, 0.8}, 1.0);
  for (const Segment& s : {down, up})
    for (Rect cell : {make_rect(0, 0.5, 0, 0.5), make_rect(0.25, 0.5, 0.5, 0.75),
                      make_rect(0.3, 0.9, 0.2, 0.6)})
      CHECK(kernels::inversion_cell_segment(cell, s) ==
            doctest::Approx(cell_segment_quad(cell, s, 60)).epsilon(3e-2));
}

TEST_CASE("segment-segment inversion probability") {
  const Segment a = make_segment({0, 0.5}, {0.5, 0}, 1.0);
  const Segment b = make_segment({0.5, 1}, {1, 0.5}, 1.0);
  CHECK(kernels::inversion_segment_segment(a, a) == doctest::Approx(1.0));
  CHECK(kernels::inversion_segment_segment(a, b) == doctest::Approx(0.0));
  const Segment inc = make_segment({0, 0}, {1, 1}, 1.0);
  CHECK(kernels::inversion_segment_segment(inc, inc) == doctest::Approx(0.0));
  const Segment c = make_segment({0.2, 0.3}, {0.7, 0.8}, 1.0);
  const Segment d = make_segment({0.1, 0.9}, {0.6, 0.4}, 1.0);
  CHECK(kernels::inversion_segment_segment(c, d) ==
        doctest::Approx(segment_segment_quad(c, d, 2000)).epsilon(2e-3));
  // symmetric in its arguments
  CHECK(kernels::inversion_segment_segment(c, d) ==
        doctest::Approx(kernels::inversion_segment_segment(d, c)));
}

TEST_CASE("property: inversion weight of the uniform grid") {
  // for lambda, W(x, y) = x(1-y) + (1-x)y is bilinear, so its cell average is its centre value
  const int m = 6;
  const Eigen::MatrixXd mass = Eigen::MatrixXd::Constant(m, m, 1.0 / (m * m));
  const Eigen::MatrixXd w = kernels::inversion_weight(mass);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const double x = (i + 0.5) / m, y = (j + 0.5) / m;
      CHECK(w(i, j) == doctest::Approx(x * (1 - y) + (1 - x) * y).epsilon(1e-12));
    }
  CHECK((mass.array() * w.array()).sum() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("area below an antidiagonal") {
  CHECK(kernels::area_below_antidiagonal({0, 1, 0, 1}, 1.0) == doctest::Approx(0.5));
  CHECK(kernels::area_below_antidiagonal({0, 1, 0, 1}, 2.0) == doctest::Approx(1.0));
  CHECK(kernels::area_below_antidiagonal({0.5, 1, 0.5, 1}, 1.0) == doctest::Approx(0.0));
}
