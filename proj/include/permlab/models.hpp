#pragma once

#include <string>
#include <vector>

#include "permlab/measures.hpp"
#include "permlab/patterns.hpp"
#include "permlab/variational.hpp"

namespace permlab {

// Reference permutons.
Permuton mu_ell(double ell);
Permuton xi11();
Permuton xi22();
Permuton xi();
Permuton rect_permuton(double z);

// Positive root of x = tanh(theta x); 0 for theta <= 1.
double curie_weiss_root(double theta);

struct XiMixture {
  double w11 = 0.5;  // weight of xi11
  double w22 = 0.5;
  Permuton measure;
};

XiMixture xi_mixture(double w11);
std::vector<XiMixture> xi_gibbs_optimizers(double theta);
// F(21, xi, theta) from the one-parameter reduction.
double xi_free_energy(double theta);

struct XiConditional {
  std::vector<XiMixture> optimizers;
  double G = 0.0;
};
XiConditional xi_conditional_optimizers(double delta);

// The closed-form density with its own parameter beta.
double mallows_phi(double beta, double x, double y);
// Optimizer density of the inversion-tilted problem at theta (= phi with beta = 2 theta).
double mallows_density(double theta, double x, double y);
Permuton mallows_grid(double theta, int m);

struct MallowsResidual {
  double max_abs = 0.0;
  double relative = 0.0;          // against d2 log f / dx dy = -4 theta f
  double literal_relative = 0.0;  // against d2 log f / dx dy = +4 theta f
};
MallowsResidual mallows_el_residual(double theta, int m, double h);

bool sstar_check(const Permutation& eta);
Permuton sstar_inflate(const Permutation& eta, double z);
Permutation substitution_square(const Permutation& eta);

struct CcReport {
  bool cc = false;
  double constant = 0.0;  // mean pair weight over support samples
  double max_deviation = 0.0;
  std::vector<Point> witnesses;  // points with the smallest and largest pair weight
  int resolution = 0;
  double tolerance = 0.0;
  int samples = 0;
};
CcReport cc_test_21(const Permuton& mu, double tol = 1e-9, int resolution = 64);

struct SupportDiagnostics {
  bool interior = false;
  int frontier_points = 0;
  double b = 0.0;
  double residual = 0.0;  // RMS orthogonal distance to the fitted line
  Point normal;           // unit normal of the total-least-squares line
  double triangle_mass = 0.0;
};
SupportDiagnostics support_diagnostics_21(const Permuton& mu, int resolution = 64,
                                          double eps = 1e-6);

// Pushforward under (x, y) -> (x/2, y/2).
Permuton compress_d11(const Permuton& nu);

struct ReflectIdentity {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
  double t21 = 0.0;
  double t21_compressed = 0.0;
};
ReflectIdentity reflect_identity_check(const Permuton& nu, double ell);

struct BlockMasses {
  double d11 = 0.0, d12 = 0.0, d21 = 0.0, d22 = 0.0;
  double off() const { return d12 + d21; }
};
BlockMasses block_masses(const Permuton& nu);

struct DmatReport {
  BlockMasses blocks;
  double band_mass = 0.0;
  double band_bound = 0.0;
  bool band_ok = false;
  bool separated = false;
  int m_out = 0;
};
DmatReport dmat_check(const Permuton& nu, int m_out = 256);

struct PhaseScanConfig {
  SolveConfig solve;
  double delta_tol = 1e-7;
  double bias = 3.0;
  int jobs = 1;
};

struct ClusterSummary {
  BlockMasses blocks;
  double G = 0.0;
  double theta = 0.0;
  double t_sigma = 0.0;
  int starts = 0;
  bool near_optimal = false;
  bool separated = false;
  bool off_bound_ok = false;
  bool minor_block_bound_ok = false;
};

struct PhaseScanRow {
  double ell = 0.0;
  double delta = 0.0;
  bool attainable = true;
  std::string note;
  int clusters = 0;  // near-optimal clusters
  double G = 0.0;
  bool separated = false;
  double d11 = 0.0, d22 = 0.0, offdiag = 0.0;
  std::vector<ClusterSummary> all;
};

double off_diagonal_bound(double ell);
double minor_block_bound(double delta);

std::vector<PhaseScanRow> phase_scan(const std::vector<double>& ells,
                                     const std::vector<double>& deltas,
                                     const PhaseScanConfig& cfg);

}  // namespace permlab
