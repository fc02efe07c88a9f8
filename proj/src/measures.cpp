#include "permlab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "permlab/error.hpp"

namespace permlab {

namespace {

constexpr double kMassTol = 1e-9;

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

// mass of [0,x] x [0,y] for a grid given by its corner table
double corner_lookup(const Eigen::MatrixXd& corner, double x, double y) {
  const int m = static_cast<int>(corner.rows()) - 1;
  x = std::clamp(x, 0.0, 1.0) * m;
  y = std::clamp(y, 0.0, 1.0) * m;
  const int i = std::min(static_cast<int>(x), m - 1);
  const int j = std::min(static_cast<int>(y), m - 1);
  const double fx = x - i;
  const double fy = y - j;
  const double c00 = corner(i, j), c10 = corner(i + 1, j);
  const double c01 = corner(i, j + 1), c11 = corner(i + 1, j + 1);
  return c00 + fx * (c10 - c00) + fy * (c01 - c00) +
         fx * fy * (c11 - c10 - c01 + c00);
}

double grid_box(const Eigen::MatrixXd& corner, const Rect& r) {
  return corner_lookup(corner, r.x_hi, r.y_hi) -
         corner_lookup(corner, r.x_lo, r.y_hi) -
         corner_lookup(corner, r.x_hi, r.y_lo) +
         corner_lookup(corner, r.x_lo, r.y_lo);
}

double segment_box(const Segment& s, const Rect& r) {
  double lo = std::max(s.from.x, r.x_lo);
  double hi = std::min(s.to.x, r.x_hi);
  // x-range on which y_at(x) stays inside [y_lo, y_hi]
  if (s.dir > 0) {
    lo = std::max(lo, s.from.x + (r.y_lo - s.from.y));
    hi = std::min(hi, s.from.x + (r.y_hi - s.from.y));
  } else {
    lo = std::max(lo, s.from.x - (r.y_hi - s.from.y));
    hi = std::min(hi, s.from.x + (s.from.y - r.y_lo));
  }
  if (hi <= lo) return 0.0;
  return s.weight * (hi - lo) / s.length_x();
}

void append_flat(const Permuton& mu, double w,
                 std::vector<std::pair<const Permuton::Grid*, double>>& grids,
                 std::vector<Segment>& segs) {
  if (w == 0.0) return;
  switch (mu.kind()) {
    case Permuton::Kind::Grid:
      grids.emplace_back(&mu.as_grid(), w);
      break;
    case Permuton::Kind::Segments:
      for (Segment s : mu.as_segments().segments) {
        s.weight *= w;
        if (s.weight > 0.0) segs.push_back(s);
      }
      break;
    case Permuton::Kind::Mixture: {
      const auto& mx = mu.as_mixture();
      for (std::size_t c = 0; c < mx.components.size(); ++c)
        append_flat(mx.components[c], w * mx.weights[c], grids, segs);
      break;
    }
  }
}

void collect_knots(const Permuton& mu, std::vector<double>& xs,
                   std::vector<double>& ys) {
  switch (mu.kind()) {
    case Permuton::Kind::Grid: {
      const int m = mu.as_grid().m();
      for (int i = 0; i <= m; ++i) {
        xs.push_back(static_cast<double>(i) / m);
        ys.push_back(static_cast<double>(i) / m);
      }
      break;
    }
    case Permuton::Kind::Segments:
      for (const auto& s : mu.as_segments().segments) {
        xs.push_back(s.from.x);
        xs.push_back(s.to.x);
        ys.push_back(s.from.y);
        ys.push_back(s.to.y);
      }
      break;
    case Permuton::Kind::Mixture:
      for (const auto& c : mu.as_mixture().components) collect_knots(c, xs, ys);
      break;
  }
}

std::vector<double> sorted_unique(std::vector<double> v) {
  v.push_back(0.0);
  v.push_back(1.0);
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Breakpoints of the partition generated by two uniform grids.
std::vector<double> merged_lines(int a, int b) {
  std::vector<double> v;
  for (int i = 0; i <= a; ++i) v.push_back(static_cast<double>(i) / a);
  if (b > 0)
    for (int i = 0; i <= b; ++i) v.push_back(static_cast<double>(i) / b);
  return sorted_unique(std::move(v));
}

double cell_density(const FlatMeasure& f, double cx, double cy) {
  if (f.m == 0) return 0.0;
  const int i = std::min(static_cast<int>(cx * f.m), f.m - 1);
  const int j = std::min(static_cast<int>(cy * f.m), f.m - 1);
  return f.cell_mass(i, j) * f.m * f.m;
}

// Calls fn(nu_mass, mu_mass, nu_density, mu_density) for every piece of a
// common refinement of the two measures.
template <typename Fn>
void for_each_common_piece(const FlatMeasure& nu, const FlatMeasure& mu, Fn fn) {
  const int a = nu.m > 0 ? nu.m : mu.m;
  const int b = nu.m > 0 ? mu.m : 0;
  if (a > 0) {
    const auto lines = merged_lines(a, b);
    const std::size_t n = lines.size() - 1;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = lines[i + 1] - lines[i];
      const double cx = 0.5 * (lines[i] + lines[i + 1]);
      for (std::size_t j = 0; j < n; ++j) {
        const double h = lines[j + 1] - lines[j];
        const double cy = 0.5 * (lines[j] + lines[j + 1]);
        const double dn = cell_density(nu, cx, cy);
        const double dm = cell_density(mu, cx, cy);
        fn(dn * w * h, dm * w * h, dn, dm);
      }
    }
  }

  struct Tagged {
    Segment s;
    int owner;
  };
  std::vector<Tagged> all;
  for (const auto& s : nu.segments) all.push_back({s, 0});
  for (const auto& s : mu.segments) all.push_back({s, 1});
  std::sort(all.begin(), all.end(), [](const Tagged& p, const Tagged& q) {
    if (p.s.dir != q.s.dir) return p.s.dir < q.s.dir;
    return p.s.intercept() < q.s.intercept();
  });
  std::size_t start = 0;
  while (start < all.size()) {
    std::size_t end = start + 1;
    while (end < all.size() && all[end].s.dir == all[start].s.dir &&
           std::abs(all[end].s.intercept() - all[end - 1].s.intercept()) <= 1e-12)
      ++end;
    std::vector<double> xs;
    for (std::size_t k = start; k < end; ++k) {
      xs.push_back(all[k].s.from.x);
      xs.push_back(all[k].s.to.x);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    for (std::size_t p = 0; p + 1 < xs.size(); ++p) {
      const double len = xs[p + 1] - xs[p];
      if (len <= 0.0) continue;
      const double mid = 0.5 * (xs[p] + xs[p + 1]);
      double d[2] = {0.0, 0.0};
      for (std::size_t k = start; k < end; ++k) {
        const Segment& s = all[k].s;
        if (s.from.x <= mid && mid <= s.to.x) d[all[k].owner] += s.weight / s.length_x();
      }
      fn(d[0] * len, d[1] * len, d[0], d[1]);
    }
    start = end;
  }
}

}  // namespace

Rect make_rect(double x_lo, double x_hi, double y_lo, double y_hi) {
  if (!(in_unit(x_lo) && in_unit(x_hi) && in_unit(y_lo) && in_unit(y_hi)) ||
      x_lo > x_hi || y_lo > y_hi)
    throw ValidationError("rectangle bounds must be ordered and inside [0,1]");
  return {x_lo, x_hi, y_lo, y_hi};
}

Segment make_segment(Point a, Point b, double weight) {
  if (!(in_unit(a.x) && in_unit(a.y) && in_unit(b.x) && in_unit(b.y)))
    throw ValidationError("segment endpoints must lie in the unit square");
  if (!(weight >= 0.0) || !std::isfinite(weight))
    throw ValidationError("segment weight must be nonnegative");
  if (b.x < a.x) std::swap(a, b);
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  if (!(dx > 0.0) || std::abs(std::abs(dy) - dx) > 1e-12)
    throw ValidationError("segments must have slope +1 or -1 and positive length");
  Segment s;
  s.from = a;
  s.to = b;
  s.weight = weight;
  s.dir = dy > 0 ? 1 : -1;
  return s;
}

Permuton::Permuton() : Permuton(grid(Eigen::MatrixXd::Ones(1, 1))) {}

Permuton lebesgue() { return Permuton(); }

Permuton Permuton::grid(Eigen::MatrixXd density) {
  const auto m = density.rows();
  if (m < 1 || density.cols() != m)
    throw ValidationError("grid density must be a nonempty square matrix");
  if (!density.allFinite() || density.minCoeff() < 0.0)
    throw ValidationError("grid density must be finite and nonnegative");
  const double total = density.sum() / static_cast<double>(m * m);
  if (std::abs(total - 1.0) > kMassTol) {
    std::ostringstream os;
    os << "grid density integrates to " << total << ", expected 1";
    throw ValidationError(os.str());
  }
  Grid g;
  g.density = std::move(density);
  g.corner = corner_sums(cell_masses(g));
  return Permuton(std::make_shared<const Rep>(std::move(g)));
}

Permuton Permuton::segments(std::vector<Segment> segs) {
  if (segs.empty()) throw ValidationError("segment permuton needs at least one segment");
  double total = 0.0;
  for (auto& s : segs) {
    // re-validate, callers may have built the struct by hand
    s = make_segment(s.from, s.to, s.weight);
    total += s.weight;
  }
  if (std::abs(total - 1.0) > kMassTol)
    throw ValidationError("segment weights must sum to 1");
  return Permuton(std::make_shared<const Rep>(Segments{std::move(segs)}));
}

Permuton Permuton::mixture(std::vector<Permuton> components,
                           std::vector<double> weights) {
  if (components.empty() || components.size() != weights.size())
    throw ValidationError("mixture needs matching nonempty components and weights");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw ValidationError("mixture weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ValidationError("mixture weights must sum to 1 within 1e-12");
  return Permuton(
      std::make_shared<const Rep>(Mixture{std::move(components), std::move(weights)}));
}

Permuton::Kind Permuton::kind() const {
  return static_cast<Kind>(rep_->index());
}
const Permuton::Grid& Permuton::as_grid() const { return std::get<Grid>(*rep_); }
const Permuton::Segments& Permuton::as_segments() const {
  return std::get<Segments>(*rep_);
}
const Permuton::Mixture& Permuton::as_mixture() const {
  return std::get<Mixture>(*rep_);
}

Eigen::MatrixXd cell_masses(const Permuton::Grid& g) {
  const double m = g.m();
  return g.density / (m * m);
}

MarginalCdf::MarginalCdf(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.size() < 2 || knots_.size() != values_.size())
    throw ValidationError("a CDF needs at least two knots");
  values_.front() = 0.0;
  values_.back() = 1.0;
  for (std::size_t i = 1; i < values_.size(); ++i)
    values_[i] = std::clamp(values_[i], values_[i - 1], 1.0);
}

double MarginalCdf::operator()(double x) const {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - knots_.begin());
  const double x0 = knots_[k - 1], x1 = knots_[k];
  const double v0 = values_[k - 1], v1 = values_[k];
  return v0 + (v1 - v0) * (x - x0) / (x1 - x0);
}

double MarginalCdf::inverse(double u) const {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) {
    for (std::size_t k = 0; k < values_.size(); ++k)
      if (values_[k] >= 1.0) return knots_[k];
    return 1.0;
  }
  const auto it = std::lower_bound(values_.begin(), values_.end(), u);
  const std::size_t k = static_cast<std::size_t>(it - values_.begin());
  const double v0 = values_[k - 1], v1 = values_[k];
  const double x0 = knots_[k - 1], x1 = knots_[k];
  return x0 + (x1 - x0) * (u - v0) / (v1 - v0);
}

bool MarginalCdf::is_identity(double tol) const {
  for (std::size_t k = 0; k < knots_.size(); ++k)
    if (std::abs(values_[k] - knots_[k]) > tol) return false;
  return true;
}

FlatMeasure flatten(const Permuton& mu) {
  std::vector<std::pair<const Permuton::Grid*, double>> grids;
  FlatMeasure f;
  append_flat(mu, 1.0, grids, f.segments);
  if (grids.empty()) return f;
  long long l = 1;
  for (const auto& [g, w] : grids) {
    l = std::lcm(l, static_cast<long long>(g->m()));
    if (l > kMaxCommonResolution)
      throw ValidationError("common grid resolution exceeds 4096");
  }
  f.m = static_cast<int>(l);
  if (grids.size() == 1 && grids[0].first->m() == f.m) {
    f.cell_mass = grids[0].second * cell_masses(*grids[0].first);
  } else {
    f.cell_mass = Eigen::MatrixXd::Zero(f.m, f.m);
    const double area = 1.0 / (static_cast<double>(f.m) * f.m);
    for (const auto& [g, w] : grids) {
      const int r = f.m / g->m();
      for (int j = 0; j < f.m; ++j)
        for (int i = 0; i < f.m; ++i)
          f.cell_mass(i, j) += w * g->density(i / r, j / r) * area;
    }
  }
  f.corner = corner_sums(f.cell_mass);
  return f;
}

double FlatMeasure::lower_left(double x, double y) const {
  double total = m > 0 ? corner_lookup(corner, x, y) : 0.0;
  const Rect r{0.0, std::clamp(x, 0.0, 1.0), 0.0, std::clamp(y, 0.0, 1.0)};
  for (const auto& s : segments) total += segment_box(s, r);
  return total;
}

double FlatMeasure::box_mass(const Rect& r) const {
  double total = m > 0 ? grid_box(corner, r) : 0.0;
  for (const auto& s : segments) total += segment_box(s, r);
  return total;
}

double box_mass(const FlatMeasure& mu, const Rect& r) { return mu.box_mass(r); }

double box_mass(const Permuton& mu, const Rect& r) {
  switch (mu.kind()) {
    case Permuton::Kind::Grid:
      return grid_box(mu.as_grid().corner, r);
    case Permuton::Kind::Segments: {
      double total = 0.0;
      for (const auto& s : mu.as_segments().segments) total += segment_box(s, r);
      return total;
    }
    case Permuton::Kind::Mixture: {
      const auto& mx = mu.as_mixture();
      double total = 0.0;
      for (std::size_t c = 0; c < mx.components.size(); ++c)
        if (mx.weights[c] > 0.0) total += mx.weights[c] * box_mass(mx.components[c], r);
      return total;
    }
  }
  return 0.0;
}

std::pair<MarginalCdf, MarginalCdf> marginal_cdfs(const Permuton& mu) {
  std::vector<double> xs, ys;
  collect_knots(mu, xs, ys);
  xs = sorted_unique(std::move(xs));
  ys = sorted_unique(std::move(ys));
  std::vector<double> fx(xs.size()), fy(ys.size());
  for (std::size_t k = 0; k < xs.size(); ++k) fx[k] = box_mass(mu, {0.0, xs[k], 0.0, 1.0});
  for (std::size_t k = 0; k < ys.size(); ++k) fy[k] = box_mass(mu, {0.0, 1.0, 0.0, ys[k]});
  return {MarginalCdf(std::move(xs), std::move(fx)),
          MarginalCdf(std::move(ys), std::move(fy))};
}

bool has_uniform_marginals(const Permuton& mu, double tol) {
  const auto [f1, f2] = marginal_cdfs(mu);
  return f1.is_identity(tol) && f2.is_identity(tol);
}

Permuton rasterize(const Permuton& mu, int m) {
  if (m < 1) throw ValidationError("resolution must be positive");
  const FlatMeasure f = flatten(mu);
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(m, m);
  if (f.m > 0) {
    Eigen::MatrixXd c(m + 1, m + 1);
    for (int i = 0; i <= m; ++i)
      for (int j = 0; j <= m; ++j)
        c(i, j) = corner_lookup(f.corner, static_cast<double>(i) / m,
                                static_cast<double>(j) / m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        mass(i, j) = c(i + 1, j + 1) - c(i, j + 1) - c(i + 1, j) + c(i, j);
  }
  for (const auto& s : f.segments) {
    std::vector<double> cuts{s.from.x, s.to.x};
    for (int k = 1; k < m; ++k) {
      const double g = static_cast<double>(k) / m;
      if (g > s.from.x && g < s.to.x) cuts.push_back(g);
      const double xc = s.from.x + s.dir * (g - s.from.y);
      if (xc > s.from.x && xc < s.to.x) cuts.push_back(xc);
    }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
      const double len = cuts[p + 1] - cuts[p];
      if (len <= 0.0) continue;
      const double mid = 0.5 * (cuts[p] + cuts[p + 1]);
      const int i = std::min(static_cast<int>(mid * m), m - 1);
      const int j = std::min(static_cast<int>(s.y_at(mid) * m), m - 1);
      mass(i, j) += s.weight * len / s.length_x();
    }
  }
  mass = mass.cwiseMax(0.0);
  mass /= mass.sum();
  return Permuton::grid(mass * (static_cast<double>(m) * m));
}

Permuton project_uniform(const Permuton& nu, int m_out) {
  if (m_out < 1) throw ValidationError("m_out must be positive");
  if (has_uniform_marginals(nu)) return nu;

  Eigen::MatrixXd mass;
  {
    FlatMeasure f;
    bool grid_only = false;
    try {
      f = flatten(nu);
      grid_only = f.segments.empty();
    } catch (const ValidationError&) {
    }
    mass = grid_only ? f.cell_mass : cell_masses(rasterize(nu, m_out).as_grid());
  }
  const int m = static_cast<int>(mass.rows());

  // Ax(i, k): share of source column i whose CDF image lands in output column k.
  auto transfer = [&](const Eigen::VectorXd& band) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m_out);
    double lo = 0.0;
    for (int i = 0; i < m; ++i) {
      const double hi = std::min(1.0, lo + band(i));
      const double width = hi - lo;
      if (width > 0.0) {
        const int k0 = std::max(0, static_cast<int>(std::floor(lo * m_out)));
        const int k1 = std::min(m_out - 1, static_cast<int>(std::ceil(hi * m_out)));
        for (int k = k0; k <= k1; ++k) {
          const double ov = std::min(hi, static_cast<double>(k + 1) / m_out) -
                            std::max(lo, static_cast<double>(k) / m_out);
          if (ov > 0.0) a(i, k) = ov / width;
        }
      }
      lo = hi;
    }
    return a;
  };
  const Eigen::MatrixXd ax = transfer(mass.rowwise().sum());
  const Eigen::MatrixXd ay = transfer(mass.colwise().sum().transpose());
  Eigen::MatrixXd out = ax.transpose() * mass * ay;
  out = out.cwiseMax(0.0);
  out /= out.sum();
  return Permuton::grid(out * (static_cast<double>(m_out) * m_out));
}

double kl_divergence(const Permuton& nu, const Permuton& mu) {
  const FlatMeasure fn = flatten(nu);
  const FlatMeasure fm = flatten(mu);
  double kl = 0.0;
  bool infinite = false;
  for_each_common_piece(fn, fm, [&](double mn, double, double dn, double dm) {
    if (mn <= 0.0) return;
    if (dm <= 0.0) {
      infinite = true;
      return;
    }
    kl += mn * std::log(dn / dm);
  });
  return infinite ? std::numeric_limits<double>::infinity() : kl;
}

double tv_distance(const Permuton& nu, const Permuton& mu) {
  const FlatMeasure fn = flatten(nu);
  const FlatMeasure fm = flatten(mu);
  double l1 = 0.0;
  for_each_common_piece(fn, fm,
                        [&](double mn, double mm, double, double) { l1 += std::abs(mn - mm); });
  return std::min(1.0, 0.5 * l1);
}

Permuton reflect(const Permuton& nu) {
  switch (nu.kind()) {
    case Permuton::Kind::Grid:
      return Permuton::grid(nu.as_grid().density.reverse());
    case Permuton::Kind::Segments: {
      std::vector<Segment> out;
      for (const auto& s : nu.as_segments().segments)
        out.push_back(make_segment({1.0 - s.to.x, 1.0 - s.to.y},
                                   {1.0 - s.from.x, 1.0 - s.from.y}, s.weight));
      return Permuton::segments(std::move(out));
    }
    case Permuton::Kind::Mixture: {
      const auto& mx = nu.as_mixture();
      std::vector<Permuton> comps;
      for (const auto& c : mx.components) comps.push_back(reflect(c));
      return Permuton::mixture(std::move(comps), mx.weights);
    }
  }
  return nu;
}

Permuton mix(std::vector<Permuton> components, std::vector<double> weights) {
  if (components.size() == 1 && weights.size() == 1 &&
      std::abs(weights[0] - 1.0) <= 1e-12)
    return components[0];
  return Permuton::mixture(std::move(components), std::move(weights));
}

}  // namespace permlab
