// Acceptance suite: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "permlab/error.hpp"
#include "permlab/models.hpp"
#include "permlab/patterns.hpp"
#include "permlab/sampling.hpp"
#include "permlab/variational.hpp"

using namespace permlab;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

int failures = 0;

void criterion(int id, double budget_s, const std::function<void(Outcome&)>& body) {
  Outcome o;
  o.detail.precision(10);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << "[exception: " << e.what() << "] ";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_s) {
    o.pass = false;
    o.detail << "[over time budget " << budget_s << " s] ";
  }
  if (!o.pass) ++failures;
  std::printf("%s criterion %d: %s(%.2f s)\n", o.pass ? "PASS" : "FAIL", id, o.detail.str().c_str(), secs);
  std::fflush(stdout);
}

const Pattern p21 = parse_pattern("21");

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

double tanh_root(double theta) {
  double x = 1.0;
  for (int k = 0; k < 1000000; ++k) {
    const double next = std::tanh(theta * x);
    if (next == x) break;
    x = next;
  }
  return x;
}

}  // namespace

int main() {
  criterion(1, 1.0, [](Outcome& o) {
    double worst = 0.0;
    auto check = [&](const Permuton& mu, double expect) {
      worst = std::max(worst, std::abs(t_sigma_measure_exact(p21, mu) - expect));
    };
    check(lebesgue(), 0.5);
    for (double ell : {0.0, 0.25, 0.5, 0.75, 1.0}) check(mu_ell(ell), (2.0 - ell) / 4.0);
    check(xi(), 0.5);
    o.detail << "max |t21 - closed form| = " << worst << " ";
    o.require(worst <= 1e-12, "tolerance 1e-12");
  });

  criterion(2, 10.0, [](Outcome& o) {
    std::mt19937_64 gen(2024);
    int mismatches = 0;
    for (int k = 0; k < 1000; ++k) {
      const int n = 1 + static_cast<int>(gen() % 200);
      const auto v = oracle::random_perm(n, gen);
      const double expect = 2.0 * static_cast<double>(oracle::inversions_brute(v)) / (double(n) * n);
      mismatches += t_sigma_perm(p21, Permutation(v)) != expect;
    }
    int brute = 0, cases = 0;
    const std::vector<std::string> pats{"1", "12", "21", "123", "132", "213", "231", "312", "321"};
    for (int n = 1; n <= 10; ++n)
      for (int k = 0; k < 30; ++k) {
        const Permutation pi(oracle::random_perm(n, gen));
        for (const auto& s : pats) {
          const Pattern sigma = parse_pattern(s);
          brute += occurrences(sigma, pi) != occurrences_brute(sigma, pi);
          ++cases;
        }
      }
    o.detail << "identity mismatches " << mismatches << "/1000, fast vs brute mismatches " << brute
             << "/" << cases << " ";
    o.require(mismatches == 0 && brute == 0, "exact agreement");
  });

  criterion(3, 120.0, [](Outcome& o) {
    const int n = 6;
    for (double theta : {0.5, 1.0}) {
      const PmfTable exact = exact_gibbs_pmf(p21, theta, n);
      // the enumeration itself against the product formula
      const double z = oracle::mallows_partition(n, std::exp(2.0 * theta / n));
      o.require(std::abs(exact.log_partition - std::log(z)) < 1e-12, "enumeration partition");
      GibbsParams p{p21, lebesgue(), theta, n};
      const ChainConfig c = ChainConfig::defaults(n, 1000000, 31 + static_cast<std::uint64_t>(theta * 10));
      const ChainResult r = gibbs_mcmc(p, c);
      const double tv = tv_distance(empirical_pmf(r.samples), exact.probability);
      o.detail << "theta=" << theta << " TV=" << tv << " (" << r.samples.size() << " samples, acc "
               << r.acceptance_rate() << ") ";
      o.require(tv <= 0.02, "TV <= 0.02");
    }
  });

  criterion(4, 30.0, [](Outcome& o) {
    const double c2 = contraction_constant(2);
    const double tc = theta_c(2);
    auto base = discretize(lebesgue(), 16, 16);
    double worst_ratio = 0.0, worst_slack = -INFINITY;
    const double thetas[] = {tc, -tc, 0.5 * tc, -0.25 * tc};
    for (int k = 0; k < 100; ++k) {
      const double theta = thetas[k % 4];
      const DensityField u = random_field(base, 1000 + 2 * static_cast<std::uint64_t>(k));
      const DensityField v = random_field(base, 1001 + 2 * static_cast<std::uint64_t>(k));
      const double ratio =
          l1_distance(el_operator(p21, theta, u), el_operator(p21, theta, v)) / l1_distance(u, v);
      worst_ratio = std::max(worst_ratio, ratio);
      worst_slack = std::max(worst_slack, ratio - c2 * std::abs(theta));
    }
    o.detail << "theta_c(2)=" << tc << " C=" << c2 << " max ratio=" << worst_ratio
             << " max(ratio - C|theta|)=" << worst_slack << " ";
    o.require(worst_slack <= 1e-12 && c2 * tc <= 1.0 + 1e-12, "ratio <= C|theta| <= 1");
  });

  criterion(5, 30.0, [](Outcome& o) {
    SolveConfig c;
    c.bins_per_segment = 64;
    auto base = discretize(xi(), 1, 64);
    const DensityField init = biased_field(base, blocks::D11, 2.0);
    const double m2 = tanh_root(2.0);
    const auto [f2, r2] = solve_el(p21, init, 2.0, c);
    const BlockMasses b2 = block_masses(f2.to_permuton());
    const double err2 = std::max(std::abs(b2.d11 - (1 + m2) / 2), std::abs(b2.d22 - (1 - m2) / 2));
    const auto [f05, r05] = solve_el(p21, init, 0.5, c);
    const BlockMasses b05 = block_masses(f05.to_permuton());
    const double err05 = std::max(std::abs(b05.d11 - 0.5), std::abs(b05.d22 - 0.5));
    o.detail << "theta=2: d11=" << b2.d11 << " vs (1+m2)/2=" << (1 + m2) / 2 << " err=" << err2
             << "; theta=0.5: d11=" << b05.d11 << " err=" << err05 << " ";
    o.require(r2.converged && r05.converged, "converged");
    o.require(err2 <= 1e-6 && err05 <= 1e-6, "block masses within 1e-6");
  });

  criterion(6, 30.0, [](Outcome& o) {
    SolveConfig c;
    auto base = discretize(xi(), 1, 64);
    const DensityField biased = biased_field(base, blocks::D11, 2.0);
    double worst = 0.0;
    for (double delta : {0.55, 0.625, 0.8}) {
      const double p = (1 + std::sqrt(2 * delta - 1)) / 2, q = 1 - p;
      const double g = p * std::log(p) + q * std::log(q) + std::log(2.0);
      const ConditionalResult plus = conditional_optimizer(p21, biased, delta, c, 1e-10);
      const ConditionalResult minus = conditional_optimizer(p21, reflect_field(biased), delta, c, 1e-10);
      const double d_plus = block_masses(plus.field.to_permuton()).d11;
      const double d_minus = block_masses(minus.field.to_permuton()).d11;
      const double err = std::max({std::abs(d_plus - p), std::abs(d_minus - q), std::abs(plus.G - g),
                                   std::abs(minus.G - g)});
      worst = std::max(worst, err);
      o.detail << "delta=" << delta << " p+=" << d_plus << " p-=" << d_minus << " G=" << plus.G << " ";
    }
    o.detail << "max err=" << worst << " ";
    o.require(worst <= 1e-6, "within 1e-6");
  });

  criterion(7, 120.0, [](Outcome& o) {
    const int m = 256;
    double norm_err = 0.0, marg_err = 0.0;
    for (double theta : {-2.0, -1.0, 1.0, 2.0}) {
      Eigen::MatrixXd d(m, m);
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) d(i, j) = mallows_density(theta, (i + 0.5) / m, (j + 0.5) / m);
      norm_err = std::max(norm_err, std::abs(d.sum() / (double(m) * m) - 1.0));
      marg_err = std::max(marg_err, ((d.rowwise().sum() / m).array() - 1.0).abs().maxCoeff());
      marg_err = std::max(marg_err, ((d.colwise().sum() / m).array() - 1.0).abs().maxCoeff());
    }
    o.detail << "m=256 normalization err=" << norm_err << " marginal err=" << marg_err << " ";
    o.require(norm_err <= 1e-3 && marg_err <= 1e-3, "normalization and marginals within 1e-3");
    double rel = 0.0, literal = 0.0;
    for (double theta : {-2.0, -1.0, 1.0, 2.0}) {
      const MallowsResidual r = mallows_el_residual(theta, 64, 1e-3);
      rel = std::max(rel, r.relative);
      literal = std::max(literal, r.literal_relative);
    }
    o.detail << "EL relative residual=" << rel << " (against +4 theta f: " << literal << ") ";
    o.require(rel <= 1e-4, "EL residual <= 1e-4");
    const int mg = 64;
    auto base = discretize(lebesgue(), mg, 1);
    double fp = 0.0;
    for (double theta : {-2.0, -1.0, 1.0, 2.0}) {
      const Eigen::MatrixXd dens = mallows_grid(theta, mg).as_grid().density;
      const DensityField g{base, Eigen::Map<const Eigen::VectorXd>(dens.data(), dens.size())};
      fp = std::max(fp, l1_distance(el_operator(p21, theta, g), g));
    }
    o.detail << "fixed-point L1 residual at m=64: " << fp << " (bound " << 5.0 / mg << ") ";
    o.require(fp <= 5.0 / mg, "L1 residual <= 5/m");
  });

  criterion(8, 120.0, [](Outcome& o) {
    SolveConfig c;
    c.grid_m = 32;
    c.bins_per_segment = 64;
    double worst = 0.0;
    for (const Permuton& mu : {lebesgue(), xi()})
      for (double theta : {0.25, 0.5}) {
        const DerivativeCheck d = free_energy_derivative_check(p21, mu, theta, 1e-3, c);
        worst = std::max(worst, d.gap);
      }
    o.detail << "max |centered difference - t21| = " << worst << " ";
    o.require(worst <= 1e-3, "within 1e-3");
  });

  criterion(9, 120.0, [](Outcome& o) {
    SolveConfig c;
    auto base = discretize(lebesgue(), c.grid_m, c.bins_per_segment);
    const DensityField init = uniform_field(base);
    double prev = -INFINITY;
    bool monotone = true;
    double worst = 0.0;
    for (double delta : {0.52, 0.55, 0.6}) {
      const ThetaHat h = theta_hat(p21, init, delta, 1e-9, c);
      worst = std::max(worst, std::abs(h.t_sigma - delta));
      monotone = monotone && h.theta > prev;
      prev = h.theta;
      o.detail << "theta_hat(" << delta << ")=" << h.theta << " ";
    }
    o.detail << "max |t21 - delta|=" << worst << " ";
    o.require(worst <= 1e-6, "t21 within 1e-6");
    o.require(monotone, "monotone");
  });

  criterion(10, 60.0, [](Outcome& o) {
    double worst_rect = 0.0, worst_sstar = 0.0;
    bool all_cc = true;
    for (int k = 1; k <= 9; ++k) {
      const double z = k / 10.0;
      const CcReport r = cc_test_21(rect_permuton(z));
      all_cc = all_cc && r.cc;
      worst_rect = std::max(worst_rect, std::abs(r.constant - z));
      const CcReport s = cc_test_21(sstar_inflate(parse_permutation("2143"), z));
      all_cc = all_cc && s.cc;
      worst_sstar = std::max(worst_sstar, std::abs(s.constant - (1.0 + z) / 4.0));
    }
    o.detail << "CC constants: rect err=" << worst_rect << " sstar(2143) err=" << worst_sstar << " ";
    o.require(all_cc && worst_rect <= 1e-9 && worst_sstar <= 1e-9, "CC with the right constant");
    bool cnc = !cc_test_21(lebesgue()).cc && !cc_test_21(mallows_grid(1.0, 64)).cc;
    for (double ell : {0.0, 0.25, 0.5, 0.75, 1.0}) cnc = cnc && !cc_test_21(mu_ell(ell)).cc;
    o.detail << "CNC cases " << (cnc ? "ok" : "wrong") << " ";
    o.require(cnc, "CNC for lambda, mu_ell, Mallows");
    const SupportDiagnostics x = support_diagnostics_21(xi());
    double worst_b = std::abs(x.b - 0.5), worst_mass = x.triangle_mass;
    for (int k = 1; k <= 9; ++k) {
      const SupportDiagnostics d = support_diagnostics_21(rect_permuton(k / 10.0));
      worst_b = std::max(worst_b, std::abs(d.b - k / 10.0));
      worst_mass = std::max(worst_mass, d.triangle_mass);
    }
    o.detail << "support b err=" << worst_b << " triangle mass=" << worst_mass << " ";
    o.require(worst_b <= 1e-9 && worst_mass == 0.0, "support diagnostics");
  });

  criterion(11, 600.0, [](Outcome& o) {
    PhaseScanConfig c;
    c.solve.grid_m = 32;
    const auto low = phase_scan({0.0}, {0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9}, c);
    bool single = true;
    for (const auto& r : low) single = single && r.attainable && r.clusters == 1;
    o.detail << "ell=0 clusters:";
    for (const auto& r : low) o.detail << " " << r.clusters;
    o.detail << " ";
    o.require(single, "exactly one cluster at ell=0");
    const auto high = phase_scan({0.99}, {0.99}, c);
    const PhaseScanRow& h = high.front();
    bool bounds = h.clusters >= 2;
    for (const auto& s : h.all)
      if (s.near_optimal) bounds = bounds && s.separated && s.off_bound_ok && s.minor_block_bound_ok;
    o.detail << "ell=0.99 delta=0.99: attainable=" << h.attainable << " clusters=" << h.clusters;
    if (!h.note.empty()) o.detail << " (" << h.note << ")";
    o.detail << " ";
    o.require(bounds, ">= 2 separated clusters within the bounds at ell=0.99, delta=0.99");
  });

  criterion(12, 300.0, [](Outcome& o) {
    GibbsParams p{p21, lebesgue(), 0.5, 200};
    const McEstimate e = estimate_Fn(p, 100000, 12);
    SolveConfig c;
    const double f = free_energy(p21, lebesgue(), 0.5, c);
    const double gap = std::abs(e.value - f);
    o.detail << "F_n=" << e.value << " +- " << e.std_error << " vs F=" << f << " ";
    o.require(gap <= 3 * e.std_error + 0.01, "F_n within 3 SE + 0.01");
    int outside = 0;
    double worst_z = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      const Permuton mu = Permuton::grid(oracle::random_doubly_stochastic(2 + static_cast<int>(s % 4), 500 + s));
      const Pattern sigma = parse_pattern(s % 2 == 0 ? "21" : "132");
      const McEstimate mc = t_sigma_measure_mc(sigma, mu, 100000, 900 + s);
      const double z = std::abs(mc.value - t_sigma_measure_exact(sigma, mu)) / mc.std_error;
      worst_z = std::max(worst_z, z);
      outside += z > 3.0;
    }
    o.detail << "MC vs exact: max |z|=" << worst_z << " ";
    o.require(outside == 0, "all within 3 SE");
  });

  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
