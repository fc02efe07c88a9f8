#include "permlab/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "permlab/error.hpp"
#include "permlab/rng.hpp"
#include "permlab/sampler.hpp"

namespace permlab {

namespace {

constexpr int kCollisionRetries = 100;
constexpr std::int64_t kChunk = 1 << 12;

// indices of points sharing an x or y coordinate with another point
std::vector<std::size_t> collisions(const PointConfig& pts) {
  std::vector<std::size_t> bad;
  const std::size_t n = pts.size();
  std::vector<std::size_t> idx(n);
  for (int axis = 0; axis < 2; ++axis) {
    std::iota(idx.begin(), idx.end(), 0);
    auto key = [&](std::size_t i) { return axis == 0 ? pts[i].x : pts[i].y; };
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return key(a) < key(b); });
    for (std::size_t r = 1; r < n; ++r)
      if (key(idx[r]) == key(idx[r - 1])) bad.push_back(idx[r]);
  }
  return bad;
}

PointConfig draw_config(const PointSampler& sampler, int n, Rng& rng) {
  PointConfig pts(static_cast<std::size_t>(n));
  for (auto& p : pts) p = sampler(rng);
  for (int attempt = 0; attempt < kCollisionRetries; ++attempt) {
    const auto bad = collisions(pts);
    if (bad.empty()) return pts;
    for (std::size_t i : bad) pts[i] = sampler(rng);
  }
  throw NumericalError("could not draw points with distinct coordinates");
}

bool is_lebesgue(const Permuton& mu) {
  const FlatMeasure f = flatten(mu);
  if (!f.segments.empty() || f.m == 0) return false;
  const double target = 1.0 / (static_cast<double>(f.m) * f.m);
  return ((f.cell_mass.array() - target).abs() <= 1e-12).all();
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// Number of (k-1)-subsets of `others` that together with q induce sigma.
std::int64_t occurrences_with(const Pattern& sigma, const PointConfig& pts,
                              std::size_t skip, Point q) {
  const int k = sigma.size();
  const std::size_t n = pts.size();
  if (sigma.size() == 2) {
    std::int64_t inv = 0, total = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == skip) continue;
      const Point& p = pts[j];
      ++total;
      if ((p.x < q.x && p.y > q.y) || (p.x > q.x && p.y < q.y)) ++inv;
    }
    return sigma.is_inversion() ? inv : total - inv;
  }
  std::vector<Point> tuple(static_cast<std::size_t>(k));
  tuple[0] = q;
  std::int64_t count = 0;
  auto rec = [&](auto&& self, int depth, std::size_t start) -> void {
    if (depth == k) {
      count += h_sigma(sigma, tuple);
      return;
    }
    for (std::size_t j = start; j < n; ++j) {
      if (j == skip) continue;
      tuple[static_cast<std::size_t>(depth)] = pts[j];
      self(self, depth + 1, j + 1);
    }
  };
  rec(rec, 1, 0);
  return count;
}

// Occurrences of sigma using both positions i and i+1 of pi.
std::int64_t occurrences_with_pair(const Pattern& sigma, const std::vector<int>& pi, int i) {
  const int k = sigma.size();
  const int n = static_cast<int>(pi.size());
  const auto& s = sigma.perm();
  std::vector<int> pos;
  std::int64_t count = 0;
  auto check = [&]() {
    std::vector<int> sorted = pos;
    std::sort(sorted.begin(), sorted.end());
    for (int a = 0; a < k; ++a)
      for (int b = a + 1; b < k; ++b)
        if ((pi[static_cast<std::size_t>(sorted[static_cast<std::size_t>(a)])] <
             pi[static_cast<std::size_t>(sorted[static_cast<std::size_t>(b)])]) != (s[a] < s[b]))
          return 0;
    return 1;
  };
  auto rec = [&](auto&& self, int need, int start) -> void {
    if (need == 0) {
      count += check();
      return;
    }
    for (int j = start; j < n; ++j) {
      if (j == i || j == i + 1) continue;
      pos.push_back(j);
      self(self, need - 1, j + 1);
      pos.pop_back();
    }
  };
  pos = {i, i + 1};
  rec(rec, k - 2, 0);
  return count;
}

bool accept(double delta_energy, Rng& rng) {
  const double u = rng.uniform();
  return delta_energy >= 0.0 || u < std::exp(delta_energy);
}

template <typename Fn>
void run_tasks(std::int64_t tasks, int jobs, Fn fn) {
  jobs = std::max(1, static_cast<int>(std::min<std::int64_t>(jobs, tasks)));
  if (jobs == 1) {
    for (std::int64_t t = 0; t < tasks; ++t) fn(t);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&, w] {
      for (std::int64_t t = w; t < tasks; t += jobs) fn(t);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

ChainConfig ChainConfig::defaults(int n, std::int64_t samples, std::uint64_t seed) {
  ChainConfig c;
  c.burn_in = 100LL * n;
  c.thinning = std::max(1, n);
  c.steps = c.burn_in + samples * c.thinning;
  c.seed = seed;
  return c;
}

double PmfTable::operator()(const Permutation& p) const {
  const auto it = probability.find(p);
  return it == probability.end() ? 0.0 : it->second;
}

PointConfig sample_points(const Permuton& mu, int n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("n must be at least 1");
  const PointSampler sampler(mu);
  Rng rng(seed);
  return draw_config(sampler, n, rng);
}

Permutation sample_mu_random_perm(const Permuton& mu, int n, std::uint64_t seed) {
  return induced_permutation(sample_points(mu, n, seed));
}

ChainResult gibbs_mcmc(const GibbsParams& p, const ChainConfig& c) {
  const int n = p.n;
  const int k = p.sigma.size();
  if (n < 1 || k > n) throw ValidationError("need n >= 1 and pattern size <= n");
  if (c.burn_in < 0 || c.steps < c.burn_in || c.thinning < 1)
    throw ValidationError("chain config needs steps >= burn-in >= 0 and thinning >= 1");

  // energy n*theta*t_sigma = scale * occurrences
  const double scale = n * p.theta * factorial(k) / std::pow(static_cast<double>(n), k);
  Rng rng(c.seed);
  ChainResult out;
  auto record = [&](std::int64_t s, auto&& current) {
    if (s > c.burn_in && (s - c.burn_in) % c.thinning == 0) out.samples.push_back(current());
  };

  if (c.proposal == Proposal::AdjacentTransposition) {
    if (!is_lebesgue(p.mu))
      throw ValidationError("adjacent-transposition proposal requires the Lebesgue base");
    std::vector<int> pi(static_cast<std::size_t>(n));
    std::iota(pi.begin(), pi.end(), 1);
    for (int i = n - 1; i > 0; --i)
      std::swap(pi[static_cast<std::size_t>(i)],
                pi[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i) + 1))]);
    for (std::int64_t s = 1; s <= c.steps; ++s) {
      if (n >= 2) {
        const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)));
        std::int64_t delta;
        const auto a = static_cast<std::size_t>(i), b = a + 1;
        if (k == 2) {
          const int sign = pi[a] < pi[b] ? 1 : -1;
          delta = p.sigma.is_inversion() ? sign : -sign;
        } else {
          const std::int64_t before = occurrences_with_pair(p.sigma, pi, i);
          std::swap(pi[a], pi[b]);
          delta = occurrences_with_pair(p.sigma, pi, i) - before;
          std::swap(pi[a], pi[b]);
        }
        ++out.proposals;
        if (accept(scale * static_cast<double>(delta), rng)) {
          std::swap(pi[a], pi[b]);
          ++out.accepted;
        }
      }
      record(s, [&] { return Permutation(pi); });
    }
    return out;
  }

  const PointSampler sampler(p.mu);
  PointConfig pts = draw_config(sampler, n, rng);
  for (std::int64_t s = 1; s <= c.steps; ++s) {
    const auto i = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n)));
    const Point q = sampler(rng);
    bool tied = false;
    for (std::size_t j = 0; j < pts.size() && !tied; ++j)
      tied = j != i && (pts[j].x == q.x || pts[j].y == q.y);
    ++out.proposals;
    if (!tied) {
      const std::int64_t delta =
          occurrences_with(p.sigma, pts, i, q) - occurrences_with(p.sigma, pts, i, pts[i]);
      if (accept(scale * static_cast<double>(delta), rng)) {
        pts[i] = q;
        ++out.accepted;
      }
    } else {
      rng.uniform();  // keep the stream aligned with the untied case
    }
    record(s, [&] { return induced_permutation(pts); });
  }
  return out;
}

std::vector<ChainResult> gibbs_mcmc_chains(const GibbsParams& p, const ChainConfig& c,
                                           int chains, int jobs) {
  if (chains < 1) throw ValidationError("chain count must be positive");
  std::vector<ChainResult> out(static_cast<std::size_t>(chains));
  run_tasks(chains, jobs, [&](std::int64_t t) {
    ChainConfig ct = c;
    ct.seed = derive_seed(c.seed, static_cast<std::uint64_t>(t));
    out[static_cast<std::size_t>(t)] = gibbs_mcmc(p, ct);
  });
  return out;
}

PmfTable exact_gibbs_pmf(const Pattern& sigma, double theta, int n) {
  if (n < 1 || n > kMaxExactPmfSize)
    throw ValidationError("exact enumeration supports 1 <= n <= 8");
  std::vector<int> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 1);
  std::vector<std::pair<Permutation, double>> energies;
  double top = -INFINITY;
  do {
    Permutation tau(v);
    const double e = n * theta * t_sigma_perm(sigma, tau);
    top = std::max(top, e);
    energies.emplace_back(std::move(tau), e);
  } while (std::next_permutation(v.begin(), v.end()));
  double sum = 0.0;
  for (const auto& [tau, e] : energies) sum += std::exp(e - top);
  PmfTable t;
  t.n = n;
  t.log_partition = top + std::log(sum);
  for (auto& [tau, e] : energies) t.probability.emplace(tau, std::exp(e - t.log_partition));
  return t;
}

McEstimate estimate_Fn(const GibbsParams& p, std::int64_t n_samples, std::uint64_t seed,
                       int jobs) {
  if (n_samples < 1) throw ValidationError("sample count must be positive");
  const int n = p.n;
  const std::int64_t chunks = (n_samples + kChunk - 1) / kChunk;
  const PointSampler sampler(p.mu);
  std::vector<double> a(static_cast<std::size_t>(n_samples));
  run_tasks(chunks, jobs, [&](std::int64_t c) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    const std::int64_t end = std::min(n_samples, (c + 1) * kChunk);
    for (std::int64_t s = c * kChunk; s < end; ++s) {
      const Permutation pi = induced_permutation(draw_config(sampler, n, rng));
      a[static_cast<std::size_t>(s)] = n * p.theta * t_sigma_perm(p.sigma, pi);
    }
  });
  const double top = *std::max_element(a.begin(), a.end());
  std::vector<double> e(a.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += e[i] = std::exp(a[i] - top);
  const double nn = static_cast<double>(n_samples);
  McEstimate out;
  out.samples = n_samples;
  out.seed = seed;
  out.value = (top + std::log(sum / nn)) / n;
  if (n_samples > 1) {
    // jackknife over leave-one-out log-mean-exp values
    std::vector<double> loo(a.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      loo[i] = top + std::log(std::max(sum - e[i], 0.0) / (nn - 1.0));
      mean += loo[i];
    }
    mean /= nn;
    double ss = 0.0;
    for (double v : loo) ss += (v - mean) * (v - mean);
    out.std_error = std::sqrt((nn - 1.0) / nn * ss) / n;
  }
  return out;
}

std::map<Permutation, double> empirical_pmf(const std::vector<Permutation>& samples) {
  std::map<Permutation, double> out;
  if (samples.empty()) return out;
  const double w = 1.0 / static_cast<double>(samples.size());
  for (const auto& s : samples) out[s] += w;
  return out;
}

double tv_distance(const std::map<Permutation, double>& p,
                   const std::map<Permutation, double>& q) {
  double l1 = 0.0;
  for (const auto& [k, v] : p) {
    const auto it = q.find(k);
    l1 += std::abs(v - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto& [k, v] : q)
    if (!p.count(k)) l1 += v;
  return 0.5 * l1;
}

}  // namespace permlab
