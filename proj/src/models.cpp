#include "permlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include <Eigen/Eigenvalues>

#include "permlab/error.hpp"
#include "permlab/kernels.hpp"

namespace permlab {

namespace {

bool same_point(Point a, Point b) {
  return std::abs(a.x - b.x) <= 1e-15 && std::abs(a.y - b.y) <= 1e-15;
}

std::vector<Point> support_samples(const FlatMeasure& f, int resolution, bool with_ends) {
  std::vector<Point> pts;
  if (f.m > 0) {
    // at least `resolution` nodes per axis
    const int r = std::max(1, (resolution + f.m - 1) / f.m);
    for (int j = 0; j < f.m; ++j)
      for (int i = 0; i < f.m; ++i) {
        if (!(f.cell_mass(i, j) > 0.0)) continue;
        for (int b = 0; b < r; ++b)
          for (int a = 0; a < r; ++a)
            pts.push_back({(i + (a + 0.5) / r) / f.m, (j + (b + 0.5) / r) / f.m});
      }
  }
  for (const auto& s : f.segments) {
    if (s.weight <= 0.0) continue;
    for (int k = 0; k < resolution; ++k) {
      const double x = s.from.x + (k + 0.5) / resolution * s.length_x();
      pts.push_back({x, s.y_at(x)});
    }
    if (with_ends) {
      pts.push_back(s.from);
      pts.push_back(s.to);
    }
  }
  return pts;
}

}  // namespace

Permuton mu_ell(double ell) {
  if (!(ell >= 0.0 && ell <= 1.0)) throw ValidationError("ell must lie in [0, 1]");
  Eigen::MatrixXd d(2, 2);
  d << 1.0 + ell, 1.0 - ell, 1.0 - ell, 1.0 + ell;
  return Permuton::grid(d);
}

Permuton xi11() { return Permuton::segments({make_segment({0.0, 0.5}, {0.5, 0.0}, 1.0)}); }

Permuton xi22() { return Permuton::segments({make_segment({0.5, 1.0}, {1.0, 0.5}, 1.0)}); }

Permuton xi() { return Permuton::mixture({xi11(), xi22()}, {0.5, 0.5}); }

Permuton rect_permuton(double z) {
  if (!(z >= 0.0 && z <= 1.0)) throw ValidationError("z must lie in [0, 1]");
  struct Raw {
    Point a, b;
    double w;
  };
  const std::vector<Raw> raw{{{0.0, z}, {z, 0.0}, z / 2},
                             {{1.0 - z, 1.0}, {1.0, 1.0 - z}, z / 2},
                             {{z, 0.0}, {1.0, 1.0 - z}, (1.0 - z) / 2},
                             {{0.0, z}, {1.0 - z, 1.0}, (1.0 - z) / 2}};
  std::vector<Segment> segs;
  for (const auto& r : raw) {
    if (std::abs(r.b.x - r.a.x) <= 0.0 || r.w <= 0.0) continue;
    const Segment s = make_segment(r.a, r.b, r.w);
    bool merged = false;
    for (auto& t : segs)
      if (same_point(t.from, s.from) && same_point(t.to, s.to)) {
        t.weight += s.weight;
        merged = true;
      }
    if (!merged) segs.push_back(s);
  }
  return Permuton::segments(std::move(segs));
}

double curie_weiss_root(double theta) {
  if (theta <= 1.0) return 0.0;
  double lo = 0.0, hi = 1.0;  // x - tanh(theta x) < 0 just above 0, > 0 at 1
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid - std::tanh(theta * mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

XiMixture xi_mixture(double w11) {
  XiMixture x;
  x.w11 = w11;
  x.w22 = 1.0 - w11;
  x.measure = Permuton::mixture({xi11(), xi22()}, {x.w11, x.w22});
  return x;
}

std::vector<XiMixture> xi_gibbs_optimizers(double theta) {
  if (theta <= 1.0) return {xi_mixture(0.5)};
  const double m = curie_weiss_root(theta);
  return {xi_mixture((1.0 + m) / 2.0), xi_mixture((1.0 - m) / 2.0)};
}

double xi_free_energy(double theta) {
  const double x = curie_weiss_root(theta);
  const double p = (1.0 + x) / 2.0, q = (1.0 - x) / 2.0;
  auto xlogx = [](double v) { return v > 0.0 ? v * std::log(v) : 0.0; };
  return theta * (1.0 + x * x) / 2.0 - xlogx(p) - xlogx(q) - std::log(2.0);
}

XiConditional xi_conditional_optimizers(double delta) {
  if (!(delta > 0.5 && delta < 1.0)) throw ValidationError("delta must lie in (1/2, 1)");
  const double r = std::sqrt(2.0 * delta - 1.0);
  const double p = (1.0 + r) / 2.0, q = 1.0 - p;
  XiConditional out;
  out.optimizers = {xi_mixture(p), xi_mixture(q)};
  out.G = p * std::log(p) + q * std::log(q) + std::log(2.0);
  return out;
}

double mallows_phi(double beta, double x, double y) {
  if (std::abs(beta) < 1e-12) return 1.0;
  const double num = beta / 2.0 * std::sinh(beta / 2.0);
  const double den = std::exp(-beta / 4.0) * std::cosh(beta * (x - y) / 2.0) -
                     std::exp(beta / 4.0) * std::cosh(beta * (x + y - 1.0) / 2.0);
  return num / (den * den);
}

double mallows_density(double theta, double x, double y) { return mallows_phi(2.0 * theta, x, y); }

Permuton mallows_grid(double theta, int m) {
  if (m < 1) throw ValidationError("resolution must be positive");
  Eigen::MatrixXd d(m, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) d(i, j) = mallows_density(theta, (i + 0.5) / m, (j + 0.5) / m);
  d *= (static_cast<double>(m) * m) / d.sum();
  return Permuton::grid(d);
}

MallowsResidual mallows_el_residual(double theta, int m, double h) {
  if (m < 2 || !(h > 0.0)) throw ValidationError("need m >= 2 and h > 0");
  auto lf = [&](double x, double y) { return std::log(mallows_density(theta, x, y)); };
  MallowsResidual r;
  double scale = 0.0, worst_lit = 0.0;
  for (int i = 1; i < m; ++i)
    for (int j = 1; j < m; ++j) {
      const double x = static_cast<double>(i) / m, y = static_cast<double>(j) / m;
      const double mixed =
          (lf(x + h, y + h) - lf(x + h, y - h) - lf(x - h, y + h) + lf(x - h, y - h)) /
          (4.0 * h * h);
      const double rhs = 4.0 * theta * mallows_density(theta, x, y);
      r.max_abs = std::max(r.max_abs, std::abs(mixed + rhs));
      worst_lit = std::max(worst_lit, std::abs(mixed - rhs));
      scale = std::max(scale, std::abs(rhs));
    }
  r.relative = scale > 0.0 ? r.max_abs / scale : r.max_abs;
  r.literal_relative = scale > 0.0 ? worst_lit / scale : worst_lit;
  return r;
}

bool sstar_check(const Permutation& eta) {
  const int n = eta.size();
  int degree = -1;
  for (int i = 0; i < n; ++i) {
    int d = 0;
    for (int j = 0; j < n; ++j)
      if ((j < i && eta[j] > eta[i]) || (j > i && eta[j] < eta[i])) ++d;
    if (degree >= 0 && d != degree) return false;
    degree = d;
  }
  return true;
}

Permuton sstar_inflate(const Permutation& eta, double z) {
  if (!sstar_check(eta)) throw ValidationError("permutation " + eta.str() + " is not in S*");
  const int n = eta.size();
  const Permuton r = rect_permuton(z);
  std::vector<Segment> segs;
  for (int i = 0; i < n; ++i) {
    const double ox = static_cast<double>(i), oy = static_cast<double>(eta[i] - 1);
    for (const auto& s : r.as_segments().segments)
      segs.push_back(make_segment({(ox + s.from.x) / n, (oy + s.from.y) / n},
                                  {(ox + s.to.x) / n, (oy + s.to.y) / n}, s.weight / n));
  }
  return Permuton::segments(std::move(segs));
}

Permutation substitution_square(const Permutation& eta) {
  const int n = eta.size();
  std::vector<int> v;
  v.reserve(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) v.push_back((eta[i] - 1) * n + eta[j]);
  return Permutation(std::move(v));
}

CcReport cc_test_21(const Permuton& mu, double tol, int resolution) {
  const FlatMeasure f = flatten(mu);
  const auto pts = support_samples(f, resolution, false);
  CcReport rep;
  rep.resolution = resolution;
  rep.tolerance = tol;
  rep.samples = static_cast<int>(pts.size());
  if (pts.empty()) return rep;
  std::vector<double> w(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) w[k] = pair_weight_21(f, pts[k]);
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
  const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
  rep.constant = mean;
  rep.max_deviation = std::max(mean - *lo, *hi - mean);
  rep.cc = rep.max_deviation <= tol;
  if (!rep.cc) {
    rep.witnesses.push_back(pts[static_cast<std::size_t>(lo - w.begin())]);
    rep.witnesses.push_back(pts[static_cast<std::size_t>(hi - w.begin())]);
  }
  return rep;
}

SupportDiagnostics support_diagnostics_21(const Permuton& mu, int resolution, double eps) {
  SupportDiagnostics d;
  const Eigen::MatrixXd cells = cell_masses(rasterize(mu, resolution).as_grid());
  const double floor = 1e-12;
  for (int j = 0; j + 1 < resolution && !d.interior; ++j)
    for (int i = 0; i + 1 < resolution && !d.interior; ++i)
      d.interior = cells(i, j) > floor && cells(i + 1, j) > floor && cells(i, j + 1) > floor &&
                   cells(i + 1, j + 1) > floor;

  const FlatMeasure f = flatten(mu);
  std::vector<Point> cand = support_samples(f, resolution, true);
  if (f.m > 0) {
    // corners of positive cells
    for (int j = 0; j <= f.m; ++j)
      for (int i = 0; i <= f.m; ++i) {
        bool touches = false;
        for (int a = i - 1; a <= i && !touches; ++a)
          for (int b = j - 1; b <= j && !touches; ++b)
            touches = a >= 0 && b >= 0 && a < f.m && b < f.m && f.cell_mass(a, b) > 0.0;
        if (touches) cand.push_back({static_cast<double>(i) / f.m, static_cast<double>(j) / f.m});
      }
  }
  std::vector<Point> front;
  for (const Point& p : cand)
    if (f.lower_left(p.x, p.y) <= eps) front.push_back(p);
  d.frontier_points = static_cast<int>(front.size());
  if (front.empty()) return d;

  Eigen::MatrixXd xy(static_cast<Eigen::Index>(front.size()), 2);
  for (std::size_t k = 0; k < front.size(); ++k) {
    xy(static_cast<Eigen::Index>(k), 0) = front[k].x;
    xy(static_cast<Eigen::Index>(k), 1) = front[k].y;
  }
  const Eigen::RowVector2d centroid = xy.colwise().mean();
  const Eigen::MatrixXd centred = xy.rowwise() - centroid;
  const Eigen::Matrix2d cov = centred.transpose() * centred;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  Eigen::Vector2d nrm = es.eigenvectors().col(0);  // smallest eigenvalue
  if (nrm.sum() < 0.0) nrm = -nrm;
  d.normal = {nrm(0), nrm(1)};
  d.residual = std::sqrt(std::max(es.eigenvalues()(0), 0.0) / static_cast<double>(front.size()));
  d.b = (xy.col(0) + xy.col(1)).mean();

  // mass of {x + y < b}; pieces on the line itself do not count
  const double on_line = 1e-9;
  double tri = 0.0;
  if (f.m > 0) {
    const double h = 1.0 / f.m;
    for (int j = 0; j < f.m; ++j)
      for (int i = 0; i < f.m; ++i)
        if (f.cell_mass(i, j) > 0.0)
          tri += f.cell_mass(i, j) / (h * h) *
                 kernels::area_below_antidiagonal({i * h, (i + 1) * h, j * h, (j + 1) * h}, d.b);
  }
  for (const auto& s : f.segments) {
    if (s.dir < 0) {
      const double c = s.from.x + s.from.y;
      if (c < d.b - on_line) tri += s.weight;
    } else {
      // x + y = 2x + intercept < b
      const double cut = std::min(s.to.x, (d.b - s.intercept()) / 2.0);
      if (cut > s.from.x + on_line) tri += s.weight * (cut - s.from.x) / s.length_x();
    }
  }
  d.triangle_mass = tri;
  return d;
}

Permuton compress_d11(const Permuton& nu) {
  switch (nu.kind()) {
    case Permuton::Kind::Grid: {
      const auto& g = nu.as_grid();
      const int m = g.m();
      Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2 * m, 2 * m);
      d.topLeftCorner(m, m) = 4.0 * g.density;
      return Permuton::grid(d);
    }
    case Permuton::Kind::Segments: {
      std::vector<Segment> out;
      for (const auto& s : nu.as_segments().segments)
        out.push_back(make_segment({s.from.x / 2, s.from.y / 2}, {s.to.x / 2, s.to.y / 2}, s.weight));
      return Permuton::segments(std::move(out));
    }
    case Permuton::Kind::Mixture: {
      const auto& mx = nu.as_mixture();
      std::vector<Permuton> comps;
      for (const auto& c : mx.components) comps.push_back(compress_d11(c));
      return Permuton::mixture(std::move(comps), mx.weights);
    }
  }
  return nu;
}

ReflectIdentity reflect_identity_check(const Permuton& nu, double ell) {
  if (!(ell >= 0.0 && ell < 1.0)) throw ValidationError("ell must lie in [0, 1)");
  if (!flatten(nu).segments.empty())
    throw ValidationError("the compression identity needs an absolutely continuous measure");
  const Permuton base = mu_ell(ell);
  const Permuton tilde = compress_d11(nu);
  ReflectIdentity r;
  r.lhs = kl_divergence(nu, base) - kl_divergence(tilde, base);
  r.rhs = block_masses(nu).off() * (std::log1p(ell) - std::log1p(-ell)) - std::log(4.0);
  r.gap = std::abs(r.lhs - r.rhs);
  const Pattern p21 = parse_pattern("21");
  r.t21 = t_sigma_measure_exact(p21, nu);
  r.t21_compressed = t_sigma_measure_exact(p21, tilde);
  return r;
}

BlockMasses block_masses(const Permuton& nu) {
  BlockMasses b;
  b.d11 = box_mass(nu, blocks::D11);
  b.d12 = box_mass(nu, blocks::D12);
  b.d21 = box_mass(nu, blocks::D21);
  b.d22 = box_mass(nu, blocks::D22);
  return b;
}

DmatReport dmat_check(const Permuton& nu, int m_out) {
  DmatReport r;
  r.m_out = m_out;
  r.blocks = block_masses(nu);
  const Permuton gamma = project_uniform(nu, m_out);
  const double c = std::clamp(r.blocks.d11, 0.0, 1.0);
  r.band_mass = box_mass(gamma, {0.0, c, c, 1.0}) + box_mass(gamma, {c, 1.0, 0.0, c});
  r.band_bound = 4.0 * r.blocks.off();
  r.band_ok = r.band_mass <= r.band_bound + 4.0 / m_out;
  r.separated = std::abs(r.blocks.d11 - r.blocks.d22) > 8.0 * r.blocks.off();
  return r;
}

double off_diagonal_bound(double ell) {
  const double gap = std::log1p(ell) - std::log1p(-ell);
  return gap > 0.0 ? std::log(4.0) / gap : std::numeric_limits<double>::infinity();
}

double minor_block_bound(double delta) { return std::sqrt((1.0 - delta) / 2.0); }

std::vector<PhaseScanRow> phase_scan(const std::vector<double>& ells,
                                     const std::vector<double>& deltas,
                                     const PhaseScanConfig& cfg) {
  for (double l : ells)
    if (!(l >= 0.0 && l < 1.0)) throw ValidationError("ell values must lie in [0, 1)");
  std::vector<PhaseScanRow> rows;
  for (double l : ells)
    for (double d : deltas) {
      PhaseScanRow r;
      r.ell = l;
      r.delta = d;
      rows.push_back(r);
    }
  const Pattern p21 = parse_pattern("21");
  const int total = static_cast<int>(rows.size());
  const int outer = std::max(1, std::min(cfg.jobs, total));
  const int inner = std::max(1, cfg.jobs / outer);

  auto run_row = [&](PhaseScanRow& r) {
    const double t0 = (2.0 - r.ell) / 4.0;
    if (!(r.delta > t0 && r.delta < 1.0)) {
      r.attainable = false;
      r.note = "delta outside (t21(mu_ell), 1)";
      return;
    }
    const auto base = discretize(mu_ell(r.ell), cfg.solve.grid_m, cfg.solve.bins_per_segment);
    const DensityField biased = biased_field(base, blocks::D11, cfg.bias);
    const std::vector<DensityField> inits{uniform_field(base), biased, reflect_field(biased)};
    MultiStartResult res;
    try {
      res = multi_start_optimize(p21, Target::delta(r.delta), inits, cfg.solve, inner,
                                 cfg.delta_tol);
    } catch (const NumericalError& e) {
      r.attainable = false;
      r.note = e.what();
      return;
    }
    bool all_sep = true;
    for (const auto& o : res.optima) {
      ClusterSummary c;
      c.blocks = block_masses(o.field.to_permuton());
      c.G = o.objective;
      c.theta = o.theta;
      c.t_sigma = o.t_sigma;
      c.starts = o.starts;
      c.near_optimal = o.near_optimal;
      c.separated = o.separated.value_or(false);
      c.off_bound_ok = c.blocks.off() <= off_diagonal_bound(r.ell);
      c.minor_block_bound_ok = std::min(c.blocks.d11, c.blocks.d22) <= minor_block_bound(r.delta);
      if (c.near_optimal) all_sep = all_sep && c.separated;
      r.all.push_back(c);
    }
    r.clusters = res.optimal_clusters();
    const ClusterSummary& best = r.all.front();
    r.G = best.G;
    r.separated = all_sep;
    r.d11 = best.blocks.d11;
    r.d22 = best.blocks.d22;
    r.offdiag = best.blocks.off();
  };

  if (outer == 1) {
    for (auto& r : rows) run_row(r);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < outer; ++w)
      pool.emplace_back([&, w] {
        for (int t = w; t < total; t += outer) run_row(rows[static_cast<std::size_t>(t)]);
      });
    for (auto& th : pool) th.join();
  }
  return rows;
}

}  // namespace permlab
