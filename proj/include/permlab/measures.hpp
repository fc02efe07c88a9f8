#pragma once

#include <memory>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace permlab {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

// Closed axis-aligned rectangle inside the unit square.
struct Rect {
  double x_lo = 0.0;
  double x_hi = 1.0;
  double y_lo = 0.0;
  double y_hi = 1.0;

  double width() const { return x_hi - x_lo; }
  double height() const { return y_hi - y_lo; }
};

// Validates bounds; throws ValidationError.
Rect make_rect(double x_lo, double x_hi, double y_lo, double y_hi);

namespace blocks {
inline constexpr Rect D11{0.0, 0.5, 0.0, 0.5};
inline constexpr Rect D12{0.0, 0.5, 0.5, 1.0};
inline constexpr Rect D21{0.5, 1.0, 0.0, 0.5};
inline constexpr Rect D22{0.5, 1.0, 0.5, 1.0};
}  // namespace blocks

// Slope +1 or -1 segment carrying `weight` spread uniformly in x.
// Normalized so that from.x < to.x.
struct Segment {
  Point from;
  Point to;
  double weight = 0.0;
  int dir = 1;  // +1 increasing, -1 decreasing

  double length_x() const { return to.x - from.x; }
  double y_at(double x) const { return from.y + dir * (x - from.x); }
  // y - dir*x, constant along the segment.
  double intercept() const { return from.y - dir * from.x; }
};

Segment make_segment(Point a, Point b, double weight);

class Permuton {
 public:
  enum class Kind { Grid, Segments, Mixture };

  // density(i, j) is the density on the cell [i/m, (i+1)/m] x [j/m, (j+1)/m];
  // the row index runs along x.
  struct Grid {
    Eigen::MatrixXd density;
    Eigen::MatrixXd corner;  // (m+1)x(m+1): mass of [0, i/m] x [0, j/m]
    int m() const { return static_cast<int>(density.rows()); }
  };
  struct Segments {
    std::vector<Segment> segments;
  };
  struct Mixture {
    std::vector<Permuton> components;
    std::vector<double> weights;
  };

  Permuton();  // Lebesgue measure on the unit square

  static Permuton grid(Eigen::MatrixXd density);
  static Permuton segments(std::vector<Segment> segments);
  static Permuton mixture(std::vector<Permuton> components,
                          std::vector<double> weights);

  Kind kind() const;
  const Grid& as_grid() const;
  const Segments& as_segments() const;
  const Mixture& as_mixture() const;

 private:
  using Rep = std::variant<Grid, Segments, Mixture>;
  explicit Permuton(std::shared_ptr<const Rep> rep) : rep_(std::move(rep)) {}
  std::shared_ptr<const Rep> rep_;
};

Permuton lebesgue();

// Piecewise-linear CDF given by increasing knots and their values.
class MarginalCdf {
 public:
  MarginalCdf(std::vector<double> knots, std::vector<double> values);

  double operator()(double x) const;
  // inf{x : F(x) >= u}
  double inverse(double u) const;
  bool is_identity(double tol = 1e-12) const;

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
};

// A permuton reduced to one absolutely continuous grid part plus a list of
// segments, all masses absolute. Mixtures of grids are merged on the least
// common multiple resolution.
struct FlatMeasure {
  int m = 0;                  // 0 when there is no grid part
  Eigen::MatrixXd cell_mass;  // m x m
  Eigen::MatrixXd corner;     // (m+1)x(m+1) cumulative masses
  std::vector<Segment> segments;

  double box_mass(const Rect& r) const;
  // mass of [0,x] x [0,y]
  double lower_left(double x, double y) const;
};

inline constexpr int kMaxCommonResolution = 4096;

FlatMeasure flatten(const Permuton& mu);

double box_mass(const Permuton& mu, const Rect& r);
double box_mass(const FlatMeasure& mu, const Rect& r);

std::pair<MarginalCdf, MarginalCdf> marginal_cdfs(const Permuton& mu);

bool has_uniform_marginals(const Permuton& mu, double tol = 1e-12);

// Exact cell masses of mu on an m x m grid, returned as a Grid permuton.
Permuton rasterize(const Permuton& mu, int m);

Permuton project_uniform(const Permuton& nu, int m_out);

// +infinity when nu is not absolutely continuous with respect to mu.
double kl_divergence(const Permuton& nu, const Permuton& mu);
double tv_distance(const Permuton& nu, const Permuton& mu);

Permuton reflect(const Permuton& nu);

Permuton mix(std::vector<Permuton> components, std::vector<double> weights);

// Cell-by-cell masses of a grid permuton (density / m^2).
Eigen::MatrixXd cell_masses(const Permuton::Grid& g);

// Cumulative corner table of a matrix of cell masses.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
corner_sums(const Eigen::MatrixBase<Derived>& mass) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index r = mass.rows();
  const Eigen::Index c = mass.cols();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(r + 1, c + 1);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i)
      out(i + 1, j + 1) = mass(i, j) + out(i, j + 1) + out(i + 1, j) - out(i, j);
  return out;
}

}  // namespace permlab
