#include "permlab/variational.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

#include "permlab/error.hpp"
#include "permlab/kernels.hpp"
#include "permlab/models.hpp"
#include "permlab/rng.hpp"

namespace permlab {

namespace {

constexpr double kMinDamping = 1.0 / (1 << 20);

void require_pair_pattern(const Pattern& sigma) {
  if (sigma.size() != 2)
    throw UnsupportedError("the Euler-Lagrange operator is implemented for sigma in {12, 21}");
}

Point piece_centre(const DiscreteBase& b, Eigen::Index a) {
  if (a < b.cells()) {
    const Eigen::Index i = a % b.m, j = a / b.m;
    return {(static_cast<double>(i) + 0.5) / b.m, (static_cast<double>(j) + 0.5) / b.m};
  }
  const Segment& s = b.bins[static_cast<std::size_t>(a - b.cells())];
  return {0.5 * (s.from.x + s.to.x), 0.5 * (s.from.y + s.to.y)};
}

// W for sigma = 21 given nu masses per piece.
Eigen::VectorXd inversion_weight(const DiscreteBase& b, const Eigen::VectorXd& mass) {
  Eigen::VectorXd w(b.size());
  const Eigen::Index nc = b.cells();
  const Eigen::Index nb = b.bin_mass.size();
  if (nc > 0) {
    const Eigen::Map<const Eigen::MatrixXd> cells(mass.data(), b.m, b.m);
    const Eigen::MatrixXd wc = kernels::inversion_weight(cells);
    w.head(nc) = Eigen::Map<const Eigen::VectorXd>(wc.data(), nc);
  }
  if (nb > 0) {
    const auto mb = mass.tail(nb);
    w.tail(nb).noalias() = b.bin_bin * mb;
    if (nc > 0) {
      w.head(nc).noalias() += b.cell_bin * mb;
      w.tail(nb).noalias() += b.cell_bin.transpose() * mass.head(nc);
    }
  }
  return w;
}

double entropy_of(const Eigen::VectorXd& w, const Eigen::VectorXd& g) {
  double d = 0.0;
  for (Eigen::Index a = 0; a < g.size(); ++a)
    if (w(a) > 0.0 && g(a) > 0.0) d += w(a) * g(a) * std::log(g(a));
  return d;
}

template <typename Fn>
void run_tasks(int tasks, int jobs, Fn fn) {
  jobs = std::max(1, std::min(jobs, tasks));
  if (jobs == 1) {
    for (int t = 0; t < tasks; ++t) fn(t);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&, w] {
      for (int t = w; t < tasks; t += jobs) fn(t);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

Eigen::VectorXd DiscreteBase::masses() const {
  Eigen::VectorXd w(size());
  if (cells() > 0) w.head(cells()) = Eigen::Map<const Eigen::VectorXd>(cell_mass.data(), cells());
  if (bin_mass.size() > 0) w.tail(bin_mass.size()) = bin_mass;
  return w;
}

std::shared_ptr<const DiscreteBase> discretize(const Permuton& mu, int grid_m,
                                               int bins_per_segment) {
  if (grid_m < 1 || bins_per_segment < 1)
    throw ValidationError("grid resolution and bin count must be positive");
  const FlatMeasure f = flatten(mu);
  auto b = std::make_shared<DiscreteBase>();
  b->source = mu;
  b->bins_per_segment = bins_per_segment;
  if (f.m > 0) {
    const int r = (grid_m + f.m - 1) / f.m;
    b->m = f.m * r;
    if (r == 1) {
      b->cell_mass = f.cell_mass;
    } else {
      b->cell_mass.resize(b->m, b->m);
      const double scale = 1.0 / (static_cast<double>(r) * r);
      for (int j = 0; j < b->m; ++j)
        for (int i = 0; i < b->m; ++i) b->cell_mass(i, j) = f.cell_mass(i / r, j / r) * scale;
    }
  }
  for (const Segment& s : f.segments) {
    const double len = s.length_x() / bins_per_segment;
    for (int k = 0; k < bins_per_segment; ++k) {
      const double x0 = s.from.x + k * len;
      const double x1 = k + 1 == bins_per_segment ? s.to.x : x0 + len;
      Segment piece = s;
      piece.from = {x0, s.y_at(x0)};
      piece.to = {x1, s.y_at(x1)};
      piece.weight = s.weight / bins_per_segment;
      b->bins.push_back(piece);
    }
  }
  const auto nb = static_cast<Eigen::Index>(b->bins.size());
  b->bin_mass.resize(nb);
  for (Eigen::Index a = 0; a < nb; ++a) b->bin_mass(a) = b->bins[static_cast<std::size_t>(a)].weight;
  b->bin_bin.resize(nb, nb);
  for (Eigen::Index a = 0; a < nb; ++a)
    for (Eigen::Index c = a; c < nb; ++c)
      b->bin_bin(a, c) = b->bin_bin(c, a) = kernels::inversion_segment_segment(
          b->bins[static_cast<std::size_t>(a)], b->bins[static_cast<std::size_t>(c)]);
  if (b->m > 0 && nb > 0) {
    b->cell_bin.resize(b->cells(), nb);
    const double h = 1.0 / b->m;
    for (Eigen::Index c = 0; c < nb; ++c)
      for (int j = 0; j < b->m; ++j)
        for (int i = 0; i < b->m; ++i)
          b->cell_bin(i + static_cast<Eigen::Index>(b->m) * j, c) =
              kernels::inversion_cell_segment({i * h, (i + 1) * h, j * h, (j + 1) * h},
                                              b->bins[static_cast<std::size_t>(c)]);
  }
  return b;
}

Eigen::VectorXd DensityField::masses() const { return base->masses().cwiseProduct(g); }

double DensityField::integral() const { return masses().sum(); }

Eigen::MatrixXd DensityField::cell_values() const {
  if (base->m == 0) return {};
  return Eigen::Map<const Eigen::MatrixXd>(g.data(), base->m, base->m);
}

Permuton DensityField::to_permuton() const {
  const Eigen::VectorXd mass = masses() / masses().sum();
  const Eigen::Index nc = base->cells();
  const double ac = mass.head(nc).sum();
  const double sing = 1.0 - ac;
  std::vector<Permuton> parts;
  std::vector<double> weights;
  if (nc > 0 && ac > 0.0) {
    Eigen::MatrixXd cells = Eigen::Map<const Eigen::MatrixXd>(mass.data(), base->m, base->m);
    cells /= cells.sum();
    parts.push_back(Permuton::grid(cells * (static_cast<double>(base->m) * base->m)));
    weights.push_back(ac);
  }
  if (!base->bins.empty() && sing > 0.0) {
    std::vector<Segment> segs = base->bins;
    const double total = mass.tail(base->bin_mass.size()).sum();
    for (std::size_t k = 0; k < segs.size(); ++k)
      segs[k].weight = mass(nc + static_cast<Eigen::Index>(k)) / total;
    parts.push_back(Permuton::segments(std::move(segs)));
    weights.push_back(sing);
  }
  if (parts.size() == 1) return parts[0];
  weights[1] = 1.0 - weights[0];
  return Permuton::mixture(std::move(parts), std::move(weights));
}

DensityField normalized(DensityField f) {
  f.g = f.g.cwiseMax(0.0);
  const double z = f.integral();
  if (!(z > 0.0)) throw ValidationError("density field has zero integral");
  f.g /= z;
  return f;
}

DensityField uniform_field(std::shared_ptr<const DiscreteBase> base) {
  const Eigen::Index n = base->size();
  return normalized(DensityField{std::move(base), Eigen::VectorXd::Ones(n)});
}

DensityField random_field(std::shared_ptr<const DiscreteBase> base, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd g(base->size());
  for (Eigen::Index a = 0; a < g.size(); ++a) g(a) = 0.1 + 1.9 * rng.uniform();
  return normalized(DensityField{std::move(base), std::move(g)});
}

DensityField biased_field(std::shared_ptr<const DiscreteBase> base, const Rect& r,
                          double factor) {
  Eigen::VectorXd g(base->size());
  for (Eigen::Index a = 0; a < g.size(); ++a) {
    const Point c = piece_centre(*base, a);
    const bool inside = c.x >= r.x_lo && c.x <= r.x_hi && c.y >= r.y_lo && c.y <= r.y_hi;
    g(a) = inside ? factor : 1.0;
  }
  return normalized(DensityField{std::move(base), std::move(g)});
}

DensityField reflect_field(const DensityField& f) {
  const DiscreteBase& b = *f.base;
  DensityField out{f.base, Eigen::VectorXd(f.g.size())};
  const Eigen::Index nc = b.cells();
  for (int j = 0; j < b.m; ++j)
    for (int i = 0; i < b.m; ++i) {
      const Eigen::Index src = i + static_cast<Eigen::Index>(b.m) * j;
      const Eigen::Index dst = (b.m - 1 - i) + static_cast<Eigen::Index>(b.m) * (b.m - 1 - j);
      out.g(dst) = f.g(src);
    }
  for (Eigen::Index a = nc; a < b.size(); ++a) {
    const Point c = piece_centre(b, a);
    Eigen::Index match = -1;
    for (Eigen::Index d = nc; d < b.size() && match < 0; ++d) {
      const Point e = piece_centre(b, d);
      if (std::abs(e.x - (1.0 - c.x)) < 1e-9 && std::abs(e.y - (1.0 - c.y)) < 1e-9) match = d;
    }
    if (match < 0) throw ValidationError("base permuton is not invariant under reflection");
    out.g(match) = f.g(a);
  }
  return normalized(out);
}

double l1_distance(const DensityField& u, const DensityField& v) {
  if (u.g.size() != v.g.size()) throw ValidationError("fields live on different bases");
  return u.base->masses().cwiseProduct((u.g - v.g).cwiseAbs()).sum();
}

Eigen::VectorXd pattern_weight(const Pattern& sigma, const DensityField& f) {
  require_pair_pattern(sigma);
  const Eigen::VectorXd mass = f.masses();
  Eigen::VectorXd w = inversion_weight(*f.base, mass);
  if (!sigma.is_inversion()) w = Eigen::VectorXd::Constant(w.size(), mass.sum()) - w;
  return w;
}

double pattern_density(const Pattern& sigma, const DensityField& f) {
  if (sigma.size() == 2) return std::clamp(f.masses().dot(pattern_weight(sigma, f)), 0.0, 1.0);
  return t_sigma_measure_exact(sigma, f.to_permuton());
}

double relative_entropy(const DensityField& f) { return entropy_of(f.base->masses(), f.g); }

double contraction_constant(int k) {
  const double x = 4.0 * k * k;
  return std::expm1(x) / x;
}

double theta_c(int k) {
  if (k < 2) throw ValidationError("theta_c needs k >= 2");
  return std::min(1.0, 1.0 / contraction_constant(k));
}

DensityField el_operator(const Pattern& sigma, double theta, const DensityField& g) {
  const Eigen::VectorXd w = g.base->masses();
  const Eigen::VectorXd wt = pattern_weight(sigma, g);
  Eigen::VectorXd e = (sigma.size() * theta) * wt;
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < e.size(); ++a)
    if (w(a) > 0.0) top = std::max(top, e(a));
  DensityField out{g.base, (e.array() - top).exp().matrix()};
  out.g /= w.dot(out.g);
  return out;
}

DensityField initial_field(std::shared_ptr<const DiscreteBase> base, const SolveConfig& cfg) {
  switch (cfg.init) {
    case InitKind::Uniform:
      return uniform_field(std::move(base));
    case InitKind::Random:
      return random_field(std::move(base), cfg.seed);
    case InitKind::Custom:
      if (!cfg.custom_init || cfg.custom_init->g.size() != base->size())
        throw ValidationError("custom initialization does not match the base");
      return normalized(DensityField{std::move(base), cfg.custom_init->g});
  }
  return uniform_field(std::move(base));
}

std::pair<DensityField, SolveReport> solve_el(const Pattern& sigma, const DensityField& init,
                                              double theta, const SolveConfig& cfg) {
  require_pair_pattern(sigma);
  if (!(cfg.tolerance > 0.0)) throw ValidationError("tolerance must be positive");
  if (!(cfg.damping > 0.0 && cfg.damping <= 1.0))
    throw ValidationError("damping must lie in (0, 1]");
  const Eigen::VectorXd w = init.base->masses();
  DensityField g = normalized(init);
  SolveReport rep;
  rep.theta = theta;
  rep.certified_unique = std::abs(theta) < theta_c(sigma.size());
  const double scale = static_cast<double>(sigma.size()) * theta;
  auto objective = [&](const DensityField& f, const Eigen::VectorXd& wt) {
    return theta * f.masses().dot(wt) - relative_entropy(f);
  };
  auto tilt = [&](const Eigen::VectorXd& wt) {
    Eigen::VectorXd e = scale * wt;
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < e.size(); ++a)
      if (w(a) > 0.0) top = std::max(top, e(a));
    Eigen::VectorXd out = (e.array() - top).exp().matrix();
    return Eigen::VectorXd(out / w.dot(out));
  };
  double alpha = cfg.damping;
  Eigen::VectorXd wt = pattern_weight(sigma, g);
  double f_cur = objective(g, wt);
  for (std::int64_t it = 1; it <= cfg.max_iterations; ++it) {
    const Eigen::VectorXd tg = tilt(wt);
    if (cfg.record_objective) rep.objective.push_back(f_cur);
    const double r = w.dot((tg - g.g).cwiseAbs());
    rep.iterations = it;
    rep.residual = r;
    if (r <= cfg.tolerance) {
      g.g = tg;
      rep.converged = true;
      break;
    }
    // Backtrack until the objective does not drop; T(g) - g is an ascent direction.
    for (;;) {
      DensityField next{g.base, (1.0 - alpha) * g.g + alpha * tg};
      Eigen::VectorXd wn = pattern_weight(sigma, next);
      const double fn = objective(next, wn);
      const double slack = 1e-12 * std::max(1.0, std::abs(f_cur));
      // Once F is flat to rounding, fall back to requiring a smaller residual.
      const bool ok = fn > f_cur + slack ||
                      (fn >= f_cur - slack && w.dot((tilt(wn) - next.g).cwiseAbs()) < r);
      if (!cfg.adaptive_damping || ok || alpha <= kMinDamping) {
        g = std::move(next);
        wt = std::move(wn);
        f_cur = fn;
        break;
      }
      alpha = std::max(0.5 * alpha, kMinDamping);
    }
    if (cfg.adaptive_damping) alpha = std::min(cfg.damping, 2.0 * alpha);
  }
  rep.damping = alpha;
  rep.t_sigma = pattern_density(sigma, g);
  rep.kl = relative_entropy(g);
  rep.free_energy = theta * rep.t_sigma - rep.kl;
  return {std::move(g), std::move(rep)};
}

std::pair<DensityField, SolveReport> solve_el(const Pattern& sigma, const Permuton& mu,
                                              double theta, const SolveConfig& cfg) {
  auto base = discretize(mu, cfg.grid_m, cfg.bins_per_segment);
  return solve_el(sigma, initial_field(base, cfg), theta, cfg);
}

double free_energy(const Pattern& sigma, const Permuton& mu, double theta,
                   const SolveConfig& cfg) {
  return solve_el(sigma, mu, theta, cfg).second.free_energy;
}

double free_energy(const Pattern& sigma, const std::vector<DensityField>& inits, double theta,
                   const SolveConfig& cfg) {
  if (inits.empty()) throw ValidationError("need at least one initialization");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& init : inits) best = std::max(best, solve_el(sigma, init, theta, cfg).second.free_energy);
  return best;
}

DerivativeCheck free_energy_derivative_check(const Pattern& sigma, const Permuton& mu,
                                             double theta, double h, const SolveConfig& cfg) {
  if (!(h > 0.0)) throw ValidationError("step must be positive");
  auto base = discretize(mu, cfg.grid_m, cfg.bins_per_segment);
  const DensityField init = initial_field(base, cfg);
  const double fp = solve_el(sigma, init, theta + h, cfg).second.free_energy;
  const double fm = solve_el(sigma, init, theta - h, cfg).second.free_energy;
  DerivativeCheck d;
  d.centered = (fp - fm) / (2.0 * h);
  d.t_sigma = solve_el(sigma, init, theta, cfg).second.t_sigma;
  d.gap = std::abs(d.centered - d.t_sigma);
  return d;
}

ThetaHat theta_hat(const Pattern& sigma, const DensityField& init, double delta, double tol,
                   const SolveConfig& cfg) {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
  if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
  ThetaHat best;
  best.field = uniform_field(init.base);
  best.t_sigma = pattern_density(sigma, best.field);
  best.report.t_sigma = best.t_sigma;
  best.report.converged = true;
  const double t0 = best.t_sigma;
  if (std::abs(delta - t0) <= tol) return best;

  auto probe = [&](double theta) {
    auto [f, rep] = solve_el(sigma, init, theta, cfg);
    ThetaHat h;
    h.theta = theta;
    h.t_sigma = rep.t_sigma;
    h.field = std::move(f);
    h.report = std::move(rep);
    return h;
  };
  int probes = 0;
  auto keep = [&](ThetaHat&& h) {
    ++probes;
    if (std::abs(h.t_sigma - delta) < std::abs(best.t_sigma - delta)) best = std::move(h);
  };

  const double dir = delta > t0 ? 1.0 : -1.0;
  double lo = 0.0, t_lo = t0, hi = dir;
  for (;;) {
    ThetaHat h = probe(hi);
    const double t = h.t_sigma;
    keep(std::move(h));
    if (std::abs(t - delta) <= tol) {
      best.probes = probes;
      return best;
    }
    if (dir * (t - delta) > 0.0) break;
    lo = hi;
    t_lo = t;
    if (std::abs(2.0 * hi) > cfg.theta_max) {
      std::ostringstream os;
      os << "delta = " << delta << " is not attainable with |theta| <= " << cfg.theta_max
         << ": pattern density ranges over [" << std::min(t0, t_lo) << ", "
         << std::max(t0, t_lo) << "] for theta in [" << std::min(0.0, lo) << ", "
         << std::max(0.0, lo) << "]";
      throw NumericalError(os.str());
    }
    hi *= 2.0;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (std::abs(hi - lo) <= 1e-14 * std::max(1.0, std::abs(mid))) break;
    ThetaHat h = probe(mid);
    const double t = h.t_sigma;
    keep(std::move(h));
    if (std::abs(t - delta) <= tol) break;
    if (dir * (t - delta) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  best.probes = probes;
  return best;
}

double theta_hat(const Pattern& sigma, const Permuton& mu, double delta, double tol,
                 const SolveConfig& cfg) {
  auto base = discretize(mu, cfg.grid_m, cfg.bins_per_segment);
  return theta_hat(sigma, initial_field(base, cfg), delta, tol, cfg).theta;
}

ConditionalResult conditional_optimizer(const Pattern& sigma, const DensityField& init,
                                        double delta, const SolveConfig& cfg, double tol) {
  ThetaHat h = theta_hat(sigma, init, delta, tol, cfg);
  ConditionalResult r;
  r.theta = h.theta;
  r.t_sigma = h.t_sigma;
  r.G = relative_entropy(h.field);
  r.el_residual = h.report.residual;
  r.field = std::move(h.field);
  r.report = std::move(h.report);
  return r;
}

ConditionalResult conditional_optimizer(const Pattern& sigma, const Permuton& mu, double delta,
                                        const SolveConfig& cfg, double tol) {
  auto base = discretize(mu, cfg.grid_m, cfg.bins_per_segment);
  return conditional_optimizer(sigma, initial_field(base, cfg), delta, cfg, tol);
}

int MultiStartResult::optimal_clusters() const {
  return static_cast<int>(std::count_if(optima.begin(), optima.end(),
                                        [](const Optimum& o) { return o.near_optimal; }));
}

MultiStartResult multi_start_optimize(const Pattern& sigma, Target target,
                                      const std::vector<DensityField>& inits,
                                      const SolveConfig& cfg, int jobs, double delta_tol) {
  if (inits.empty()) throw ValidationError("need at least one initialization");
  const bool by_theta = target.kind == Target::Kind::Theta;
  const int n = static_cast<int>(inits.size());
  std::vector<std::optional<Optimum>> runs(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(n));
  run_tasks(n, jobs, [&](int i) {
    try {
      Optimum o;
      if (by_theta) {
        auto [f, rep] = solve_el(sigma, inits[static_cast<std::size_t>(i)], target.value, cfg);
        o.field = std::move(f);
        o.theta = target.value;
        o.objective = rep.free_energy;
        o.t_sigma = rep.t_sigma;
        o.kl = rep.kl;
        o.converged = rep.converged;
      } else {
        ThetaHat h = theta_hat(sigma, inits[static_cast<std::size_t>(i)], target.value,
                               delta_tol, cfg);
        o.field = std::move(h.field);
        o.theta = h.theta;
        o.kl = relative_entropy(o.field);
        o.objective = o.kl;
        o.t_sigma = h.t_sigma;
        o.converged = h.report.converged && std::abs(h.t_sigma - target.value) <= delta_tol;
      }
      runs[static_cast<std::size_t>(i)] = std::move(o);
    } catch (...) {
      failures[static_cast<std::size_t>(i)] = std::current_exception();
    }
  });
  for (int i = 0; i < n; ++i)
    if (!runs[static_cast<std::size_t>(i)]) std::rethrow_exception(failures[static_cast<std::size_t>(i)]);

  const double radius = by_theta ? 10.0 * cfg.tolerance : kDeltaClusterRadius;
  MultiStartResult res;
  for (auto& r : runs) {
    bool placed = false;
    for (auto& c : res.optima)
      if (l1_distance(c.field, r->field) <= radius) {
        ++c.starts;
        placed = true;
        break;
      }
    if (!placed) {
      r->starts = 1;
      res.optima.push_back(std::move(*r));
    }
  }
  std::stable_sort(res.optima.begin(), res.optima.end(), [&](const Optimum& a, const Optimum& b) {
    return by_theta ? a.objective > b.objective : a.objective < b.objective;
  });
  const double best = res.optima.front().objective;
  for (auto& o : res.optima) {
    o.near_optimal = std::abs(o.objective - best) <= kNearOptimalGap;
    if (sigma.is_inversion()) o.separated = dmat_check(o.field.to_permuton()).separated;
  }
  return res;
}

}  // namespace permlab
