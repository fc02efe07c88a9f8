#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "permlab/measures.hpp"
#include "permlab/patterns.hpp"

namespace permlab {

struct GibbsParams {
  Pattern sigma;
  Permuton mu;
  double theta = 0.0;
  int n = 1;
};

enum class Proposal { PointResample, AdjacentTransposition };

struct ChainConfig {
  std::int64_t steps = 0;
  std::int64_t burn_in = 0;
  std::int64_t thinning = 1;
  std::uint64_t seed = 0;
  Proposal proposal = Proposal::PointResample;

  // burn-in 100 n, thinning n, enough steps for `samples` recorded states
  static ChainConfig defaults(int n, std::int64_t samples, std::uint64_t seed);
};

struct ChainResult {
  std::vector<Permutation> samples;
  std::int64_t proposals = 0;
  std::int64_t accepted = 0;
  double acceptance_rate() const {
    return proposals > 0 ? static_cast<double>(accepted) / static_cast<double>(proposals) : 0.0;
  }
};

struct PmfTable {
  int n = 0;
  std::map<Permutation, double> probability;
  double log_partition = 0.0;  // log of the sum of exp(n theta t_sigma(pi)) over S_n

  double operator()(const Permutation& p) const;
};

PointConfig sample_points(const Permuton& mu, int n, std::uint64_t seed);

Permutation sample_mu_random_perm(const Permuton& mu, int n, std::uint64_t seed);

ChainResult gibbs_mcmc(const GibbsParams& p, const ChainConfig& c);

// Independent chains with seeds derived from c.seed; the result does not
// depend on `jobs`.
std::vector<ChainResult> gibbs_mcmc_chains(const GibbsParams& p, const ChainConfig& c,
                                           int chains, int jobs = 1);

inline constexpr int kMaxExactPmfSize = 8;

PmfTable exact_gibbs_pmf(const Pattern& sigma, double theta, int n);

McEstimate estimate_Fn(const GibbsParams& p, std::int64_t n_samples, std::uint64_t seed,
                       int jobs = 1);

// Empirical pmf of a list of permutations of a common size.
std::map<Permutation, double> empirical_pmf(const std::vector<Permutation>& samples);

double tv_distance(const std::map<Permutation, double>& p,
                   const std::map<Permutation, double>& q);

}  // namespace permlab
