#include "permlab/patterns.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "permlab/error.hpp"
#include "permlab/kernels.hpp"
#include "permlab/rng.hpp"
#include "permlab/sampler.hpp"

namespace permlab {

namespace {

class Fenwick {
 public:
  explicit Fenwick(int n) : t_(static_cast<std::size_t>(n) + 1, 0) {}
  void add(int i) {
    for (++i; i < static_cast<int>(t_.size()); i += i & -i) ++t_[static_cast<std::size_t>(i)];
  }
  // count of inserted indices < i
  std::int64_t prefix(int i) const {
    std::int64_t s = 0;
    for (; i > 0; i -= i & -i) s += t_[static_cast<std::size_t>(i)];
    return s;
  }

 private:
  std::vector<std::int64_t> t_;
};

// less[b] = #{a < b : v_a < v_b}
std::vector<std::int64_t> smaller_before(const Permutation& pi) {
  Fenwick f(pi.size());
  std::vector<std::int64_t> out(static_cast<std::size_t>(pi.size()));
  for (int b = 0; b < pi.size(); ++b) {
    out[static_cast<std::size_t>(b)] = f.prefix(pi[b] - 1);
    f.add(pi[b] - 1);
  }
  return out;
}

std::int64_t choose2(std::int64_t x) { return x * (x - 1) / 2; }

std::int64_t occurrences_k3(const Permutation& sigma, const Permutation& pi) {
  const int n = pi.size();
  const auto lless = smaller_before(pi);
  std::int64_t c123 = 0, c321 = 0, sum_llrl = 0, sum_lgrg = 0, first = 0, last = 0;
  for (int b = 0; b < n; ++b) {
    const std::int64_t ll = lless[static_cast<std::size_t>(b)];
    const std::int64_t lg = b - ll;
    const std::int64_t rl = (pi[b] - 1) - ll;
    const std::int64_t rg = (n - 1 - b) - rl;
    c123 += ll * rg;
    c321 += lg * rl;
    sum_llrl += ll * rl;
    sum_lgrg += lg * rg;
    first += choose2(rg);
    last += choose2(ll);
  }
  const std::int64_t c132 = first - c123;
  const std::int64_t c231 = sum_llrl - c132;
  const std::int64_t c213 = last - c123;
  const std::int64_t c312 = sum_lgrg - c213;
  const std::string s = sigma.str();
  if (s == "1,2,3") return c123;
  if (s == "1,3,2") return c132;
  if (s == "2,1,3") return c213;
  if (s == "2,3,1") return c231;
  if (s == "3,1,2") return c312;
  return c321;
}

double chain_weight(int a, int b, int c) {
  if (a < b && b < c) return 1.0;
  if (a == b && b == c) return 1.0 / 6.0;
  if ((a == b && b < c) || (a < b && b == c)) return 0.5;
  return 0.0;
}

}  // namespace

Permutation::Permutation(std::vector<int> values) : v_(std::move(values)) {
  std::vector<char> seen(v_.size() + 1, 0);
  for (int x : v_) {
    if (x < 1 || x > static_cast<int>(v_.size()) || seen[static_cast<std::size_t>(x)])
      throw ValidationError("not a permutation in one-line notation");
    seen[static_cast<std::size_t>(x)] = 1;
  }
}

Permutation Permutation::identity(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 1);
  return Permutation(std::move(v));
}

Permutation Permutation::reversed(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = n - i;
  return Permutation(std::move(v));
}

Permutation Permutation::inverse() const {
  std::vector<int> w(v_.size());
  for (std::size_t i = 0; i < v_.size(); ++i)
    w[static_cast<std::size_t>(v_[i] - 1)] = static_cast<int>(i) + 1;
  return Permutation(std::move(w));
}

std::string Permutation::str() const {
  std::string out;
  for (std::size_t i = 0; i < v_.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v_[i]);
  }
  return out;
}

Permutation parse_permutation(std::string_view text) {
  std::vector<int> v;
  std::string digits;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) digits += c;
  if (digits.empty()) throw ValidationError("empty permutation");
  if (digits.find(',') == std::string::npos) {
    for (char c : digits) {
      if (c < '1' || c > '9') throw ValidationError("bad permutation '" + digits + "'");
      v.push_back(c - '0');
    }
  } else {
    std::stringstream ss(digits);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos)
        throw ValidationError("bad permutation '" + digits + "'");
      v.push_back(std::stoi(item));
    }
  }
  return Permutation(std::move(v));
}

Pattern::Pattern(Permutation p, int max_size) : p_(std::move(p)) {
  if (p_.size() < 1 || p_.size() > max_size)
    throw ValidationError("pattern size must be between 1 and " + std::to_string(max_size));
}

Pattern parse_pattern(std::string_view text, int max_size) {
  return Pattern(parse_permutation(text), max_size);
}

Permutation induced_permutation(std::span<const Point> pts) {
  const std::size_t n = pts.size();
  std::vector<std::size_t> by_x(n), by_y(n);
  std::iota(by_x.begin(), by_x.end(), 0);
  std::iota(by_y.begin(), by_y.end(), 0);
  std::sort(by_x.begin(), by_x.end(), [&](auto a, auto b) { return pts[a].x < pts[b].x; });
  std::sort(by_y.begin(), by_y.end(), [&](auto a, auto b) { return pts[a].y < pts[b].y; });
  std::vector<int> rank(n);
  for (std::size_t r = 0; r < n; ++r) {
    if (r > 0 && pts[by_x[r]].x == pts[by_x[r - 1]].x)
      throw ValidationError("tied x coordinates");
    if (r > 0 && pts[by_y[r]].y == pts[by_y[r - 1]].y)
      throw ValidationError("tied y coordinates");
    rank[by_y[r]] = static_cast<int>(r) + 1;
  }
  std::vector<int> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = rank[by_x[i]];
  return Permutation(std::move(v));
}

int h_sigma(const Pattern& sigma, std::span<const Point> pts) {
  const int k = sigma.size();
  if (static_cast<int>(pts.size()) != k)
    throw ValidationError("h_sigma needs exactly k points");
  if (k > 16) throw ValidationError("h_sigma supports patterns of size at most 16");
  // the tuple induces sigma iff every pair is ordered as in sigma
  const auto& s = sigma.perm();
  std::array<int, 16> order{};
  for (int i = 0; i < k; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.begin() + k, [&](int a, int b) {
    return pts[static_cast<std::size_t>(a)].x < pts[static_cast<std::size_t>(b)].x;
  });
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) {
      const Point& p = pts[static_cast<std::size_t>(order[static_cast<std::size_t>(a)])];
      const Point& q = pts[static_cast<std::size_t>(order[static_cast<std::size_t>(b)])];
      if (!(p.x < q.x) || p.y == q.y) return 0;
      if ((p.y < q.y) != (s[a] < s[b])) return 0;
    }
  return 1;
}

std::int64_t inversion_count(const Permutation& pi) {
  const auto lless = smaller_before(pi);
  std::int64_t inv = 0;
  for (int b = 0; b < pi.size(); ++b) inv += b - lless[static_cast<std::size_t>(b)];
  return inv;
}

std::int64_t occurrences_brute(const Pattern& sigma, const Permutation& pi) {
  const int k = sigma.size();
  const int n = pi.size();
  if (k > n) return 0;
  const auto& s = sigma.perm();
  std::vector<int> pos(static_cast<std::size_t>(k));
  std::int64_t count = 0;
  // depth-first over increasing positions, pruning on pairwise order
  auto rec = [&](auto&& self, int depth, int start) -> void {
    if (depth == k) {
      ++count;
      return;
    }
    for (int p = start; p <= n - (k - depth); ++p) {
      bool ok = true;
      for (int a = 0; a < depth && ok; ++a)
        ok = (pi[pos[static_cast<std::size_t>(a)]] < pi[p]) == (s[a] < s[depth]);
      if (!ok) continue;
      pos[static_cast<std::size_t>(depth)] = p;
      self(self, depth + 1, p + 1);
    }
  };
  rec(rec, 0, 0);
  return count;
}

std::int64_t occurrences(const Pattern& sigma, const Permutation& pi) {
  const int k = sigma.size();
  const std::int64_t n = pi.size();
  if (k > n) return 0;
  if (k == 1) return n;
  if (k == 2) {
    const std::int64_t inv = inversion_count(pi);
    return sigma.is_inversion() ? inv : n * (n - 1) / 2 - inv;
  }
  if (k == 3) return occurrences_k3(sigma.perm(), pi);
  return occurrences_brute(sigma, pi);
}

double t_sigma_perm(const Pattern& sigma, const Permutation& pi) {
  const int k = sigma.size();
  const int n = pi.size();
  if (n == 0) return 0.0;
  long double f = 1.0L;
  for (int i = 2; i <= k; ++i) f *= i;
  return static_cast<double>(f * static_cast<long double>(occurrences(sigma, pi)) /
                             std::pow(static_cast<long double>(n), k));
}

double t21_exact(const FlatMeasure& nu) {
  double t = 0.0;
  if (nu.m > 0) t += nu.cell_mass.cwiseProduct(kernels::inversion_weight(nu.cell_mass)).sum();
  const double h = nu.m > 0 ? 1.0 / nu.m : 0.0;
  for (const auto& s : nu.segments) {
    for (int j = 0; j < nu.m; ++j)
      for (int i = 0; i < nu.m; ++i) {
        const double mc = nu.cell_mass(i, j);
        if (mc <= 0.0) continue;
        const Rect cell{i * h, (i + 1) * h, j * h, (j + 1) * h};
        t += 2.0 * mc * s.weight * kernels::inversion_cell_segment(cell, s);
      }
    for (const auto& u : nu.segments)
      t += s.weight * u.weight * kernels::inversion_segment_segment(s, u);
  }
  return std::clamp(t, 0.0, 1.0);
}

double t3_grid_exact(const Pattern& sigma, const Eigen::MatrixXd& mass) {
  const Eigen::Index m = mass.rows();
  // left/right sums along x with half weight for the same column
  Eigen::MatrixXd left(m, m), right(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      left(i, j) = acc + 0.5 * mass(i, j);
      acc += mass(i, j);
    }
    acc = 0.0;
    for (Eigen::Index i = m - 1; i >= 0; --i) {
      right(i, j) = acc + 0.5 * mass(i, j);
      acc += mass(i, j);
    }
  }
  const Permutation tau = sigma.perm().inverse();
  std::array<int, 3> t{tau[0] - 1, tau[1] - 1, tau[2] - 1};
  double total = 0.0;
  Eigen::MatrixXd a(m, m);
  for (Eigen::Index j2 = 0; j2 < m; ++j2) {
    const auto d = mass.col(j2).asDiagonal();
    a.noalias() = left.transpose() * d * right;
    a.noalias() -= (1.0 / 12.0) * (mass.transpose() * d * mass);
    for (Eigen::Index j3 = 0; j3 < m; ++j3)
      for (Eigen::Index j1 = 0; j1 < m; ++j1) {
        const std::array<int, 3> j{static_cast<int>(j1), static_cast<int>(j2),
                                   static_cast<int>(j3)};
        const double w = chain_weight(j[static_cast<std::size_t>(t[0])],
                                      j[static_cast<std::size_t>(t[1])],
                                      j[static_cast<std::size_t>(t[2])]);
        if (w != 0.0) total += w * a(j1, j3);
      }
  }
  return std::clamp(6.0 * total, 0.0, 1.0);
}

double t_sigma_measure_exact(const Pattern& sigma, const Permuton& nu) {
  const int k = sigma.size();
  if (k == 1) return 1.0;
  const FlatMeasure f = flatten(nu);
  if (k == 2) {
    const double t = t21_exact(f);
    return sigma.is_inversion() ? t : 1.0 - t;
  }
  if (k == 3 && f.segments.empty() && f.m <= kMaxExactGrid3)
    return t3_grid_exact(sigma, f.cell_mass);
  throw UnsupportedError("no exact evaluation for pattern " + sigma.str() +
                         " on this permuton; use the Monte Carlo estimator");
}

McEstimate t_sigma_measure_mc(const Pattern& sigma, const Permuton& nu,
                              std::int64_t n_samples, std::uint64_t seed, int jobs) {
  if (n_samples < 1) throw ValidationError("sample count must be positive");
  constexpr std::int64_t kChunk = 1 << 16;
  const std::int64_t chunks = (n_samples + kChunk - 1) / kChunk;
  const PointSampler sampler(nu);
  const int k = sigma.size();
  std::vector<std::int64_t> hits(static_cast<std::size_t>(chunks), 0);
  auto work = [&](std::int64_t c) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    const std::int64_t count = std::min(kChunk, n_samples - c * kChunk);
    std::vector<Point> pts(static_cast<std::size_t>(k));
    std::int64_t h = 0;
    for (std::int64_t s = 0; s < count; ++s) {
      for (auto& p : pts) p = sampler(rng);
      h += h_sigma(sigma, pts);
    }
    hits[static_cast<std::size_t>(c)] = h;
  };
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(chunks)));
  if (jobs == 1) {
    for (std::int64_t c = 0; c < chunks; ++c) work(c);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w)
      pool.emplace_back([&, w] {
        for (std::int64_t c = w; c < chunks; c += jobs) work(c);
      });
    for (auto& th : pool) th.join();
  }
  const std::int64_t total = std::accumulate(hits.begin(), hits.end(), std::int64_t{0});
  McEstimate e;
  e.samples = n_samples;
  e.seed = seed;
  e.value = static_cast<double>(total) / static_cast<double>(n_samples);
  if (n_samples > 1) {
    const double var = e.value * (1.0 - e.value) * static_cast<double>(n_samples) /
                       static_cast<double>(n_samples - 1);
    e.std_error = std::sqrt(var / static_cast<double>(n_samples));
  }
  return e;
}

double pair_weight_21(const FlatMeasure& nu, Point p) {
  return nu.box_mass({0.0, p.x, p.y, 1.0}) + nu.box_mass({p.x, 1.0, 0.0, p.y});
}

double pair_weight_21(const Permuton& nu, Point p) {
  return box_mass(nu, {0.0, p.x, p.y, 1.0}) + box_mass(nu, {p.x, 1.0, 0.0, p.y});
}

}  // namespace permlab
