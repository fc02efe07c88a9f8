#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "permlab/measures.hpp"
#include "permlab/patterns.hpp"

namespace permlab {

// A base permuton cut into pieces: grid cells (refined to a common
// resolution) followed by equal-length bins along each segment. Pairwise
// inversion probabilities between pieces are precomputed.
struct DiscreteBase {
  Permuton source;
  int m = 0;                  // grid resolution of the absolutely continuous part
  Eigen::MatrixXd cell_mass;  // m x m base masses
  int bins_per_segment = 0;
  std::vector<Segment> bins;  // weight = base mass of the bin
  Eigen::VectorXd bin_mass;
  Eigen::MatrixXd bin_bin;   // bins x bins
  Eigen::MatrixXd cell_bin;  // (m*m) x bins, cell index i + m*j

  Eigen::Index cells() const { return static_cast<Eigen::Index>(m) * m; }
  Eigen::Index size() const { return cells() + bin_mass.size(); }
  // Base mass of every piece, cells first.
  Eigen::VectorXd masses() const;
};

// grid_m is rounded up to a multiple of the base grid resolution.
std::shared_ptr<const DiscreteBase> discretize(const Permuton& mu, int grid_m = 64,
                                               int bins_per_segment = 64);

// g = d nu / d mu, piecewise constant on the pieces of `base`.
struct DensityField {
  std::shared_ptr<const DiscreteBase> base;
  Eigen::VectorXd g;

  Eigen::VectorXd masses() const;  // nu mass per piece
  double integral() const;
  Permuton to_permuton() const;
  // Grid view of the cell part (m x m), zero-size when there are no cells.
  Eigen::MatrixXd cell_values() const;
};

DensityField uniform_field(std::shared_ptr<const DiscreteBase> base);
DensityField random_field(std::shared_ptr<const DiscreteBase> base, std::uint64_t seed);
// g proportional to `factor` on pieces whose centre lies in r, 1 elsewhere.
DensityField biased_field(std::shared_ptr<const DiscreteBase> base, const Rect& r,
                          double factor);
DensityField reflect_field(const DensityField& f);
DensityField normalized(DensityField f);

// L1(mu) distance sum_a w_a |u_a - v_a|.
double l1_distance(const DensityField& u, const DensityField& v);

// Cell- and bin-averaged W for sigma in {12, 21}: the probability that a
// uniform point of piece a and a nu-distributed point induce sigma.
Eigen::VectorXd pattern_weight(const Pattern& sigma, const DensityField& f);

double pattern_density(const Pattern& sigma, const DensityField& f);
// D(nu_g | mu)
double relative_entropy(const DensityField& f);

double theta_c(int k);
// sup_{|x| <= 4k^2} |(e^x - 1)/x|
double contraction_constant(int k);

DensityField el_operator(const Pattern& sigma, double theta, const DensityField& g);

enum class InitKind { Uniform, Custom, Random };

struct SolveConfig {
  double tolerance = 1e-10;
  std::int64_t max_iterations = 100000;
  double damping = 1.0;
  bool adaptive_damping = true;
  InitKind init = InitKind::Uniform;
  std::optional<DensityField> custom_init;
  std::uint64_t seed = 0;
  int grid_m = 64;
  int bins_per_segment = 64;
  double theta_max = 64.0;
  bool record_objective = false;
};

struct SolveReport {
  double theta = 0.0;
  std::int64_t iterations = 0;
  double residual = 0.0;
  double free_energy = 0.0;
  double t_sigma = 0.0;
  double kl = 0.0;
  bool converged = false;
  bool certified_unique = false;
  double damping = 1.0;
  std::vector<double> objective;  // F of each iterate when recorded
};

std::pair<DensityField, SolveReport> solve_el(const Pattern& sigma, const DensityField& init,
                                              double theta, const SolveConfig& cfg);
std::pair<DensityField, SolveReport> solve_el(const Pattern& sigma, const Permuton& mu,
                                              double theta, const SolveConfig& cfg);

DensityField initial_field(std::shared_ptr<const DiscreteBase> base, const SolveConfig& cfg);

double free_energy(const Pattern& sigma, const Permuton& mu, double theta,
                   const SolveConfig& cfg);
// Maximum of F over fixed points reached from each start.
double free_energy(const Pattern& sigma, const std::vector<DensityField>& inits,
                   double theta, const SolveConfig& cfg);

struct DerivativeCheck {
  double centered = 0.0;
  double t_sigma = 0.0;
  double gap = 0.0;
};

DerivativeCheck free_energy_derivative_check(const Pattern& sigma, const Permuton& mu,
                                             double theta, double h, const SolveConfig& cfg);

struct ThetaHat {
  double theta = 0.0;
  double t_sigma = 0.0;
  DensityField field;
  SolveReport report;
  int probes = 0;
};

// Bisection on theta; cold start from `init` at every probe.
ThetaHat theta_hat(const Pattern& sigma, const DensityField& init, double delta, double tol,
                   const SolveConfig& cfg);
double theta_hat(const Pattern& sigma, const Permuton& mu, double delta, double tol,
                 const SolveConfig& cfg);

struct ConditionalResult {
  double theta = 0.0;
  double G = 0.0;  // D(nu | mu)
  double t_sigma = 0.0;
  double el_residual = 0.0;
  DensityField field;
  SolveReport report;
};

ConditionalResult conditional_optimizer(const Pattern& sigma, const DensityField& init,
                                        double delta, const SolveConfig& cfg,
                                        double tol = 1e-9);
ConditionalResult conditional_optimizer(const Pattern& sigma, const Permuton& mu,
                                        double delta, const SolveConfig& cfg,
                                        double tol = 1e-9);

struct Target {
  enum class Kind { Theta, Delta } kind = Kind::Theta;
  double value = 0.0;
  static Target theta(double v) { return {Kind::Theta, v}; }
  static Target delta(double v) { return {Kind::Delta, v}; }
};

struct Optimum {
  DensityField field;
  double theta = 0.0;
  double objective = 0.0;  // F for a theta target, G for a delta target
  double t_sigma = 0.0;
  double kl = 0.0;
  bool converged = false;
  int starts = 0;          // how many inits landed in this cluster
  bool near_optimal = false;
  std::optional<bool> separated;  // block-mass separation test, sigma = 21 only
};

struct MultiStartResult {
  std::vector<Optimum> optima;  // best first
  int optimal_clusters() const;
};

inline constexpr double kDeltaClusterRadius = 1e-4;
inline constexpr double kNearOptimalGap = 1e-6;

MultiStartResult multi_start_optimize(const Pattern& sigma, Target target,
                                      const std::vector<DensityField>& inits,
                                      const SolveConfig& cfg, int jobs = 1,
                                      double delta_tol = 1e-9);

}  // namespace permlab
