#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "permlab/error.hpp"
#include "permlab/io.hpp"
#include "permlab/models.hpp"
#include "permlab/patterns.hpp"
#include "permlab/rng.hpp"
#include "permlab/sampling.hpp"
#include "permlab/variational.hpp"
#include "permlab/version.hpp"

namespace permlab::cli {

namespace {

using ojson = nlohmann::ordered_json;

struct RunConfig {
  std::string mu = "builtin:lebesgue";
  BuiltinParams params;
  std::string sigma = "21";
  std::string perm;
  double theta = 0.0;
  double delta = 0.0;
  int n = 0;
  std::int64_t samples = 100000;
  std::int64_t steps = 0;
  std::int64_t burn_in = -1;
  std::int64_t thinning = 0;
  int chains = 1;
  std::string proposal = "point";
  std::uint64_t seed = 0;
  int m = 64;
  int bins = 64;
  int resolution = 64;
  double tol = 1e-10;
  double delta_tol = 1e-9;
  double eps = 1e-6;
  double h = 1e-3;
  double damping = 1.0;
  std::int64_t max_iter = 100000;
  double theta_max = 64.0;
  std::string init = "uniform";
  std::vector<double> ells;
  std::vector<double> deltas;
  double bias = 3.0;
  bool exact = false;
  bool mc = false;
  bool grid = false;
  std::string output;
  std::string format = "csv";
  int jobs = 1;
  bool strict = false;
};

struct Result {
  ojson summary = ojson::object();
  std::vector<ojson> rows;
  bool converged = true;
};

struct Loaded {
  Permuton measure;
  std::string spec;  // canonical JSON
};

Loaded load_mu(const RunConfig& c) {
  const std::string& s = c.mu;
  if (s.rfind("builtin:", 0) == 0) {
    const std::string name = s.substr(8);
    return {builtin_permuton(name, c.params), builtin_spec(name, c.params)};
  }
  std::string text;
  if (!s.empty() && s.front() == '{') {
    text = s;
  } else {
    std::ifstream in(s);
    if (!in) throw ValidationError("cannot read permuton spec " + s);
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }
  return {parse_permuton_json(text), canonical_spec(text)};
}

SolveConfig solve_config(const RunConfig& c) {
  SolveConfig s;
  s.tolerance = c.tol;
  s.max_iterations = c.max_iter;
  s.damping = c.damping;
  s.grid_m = c.m;
  s.bins_per_segment = c.bins;
  s.theta_max = c.theta_max;
  s.seed = c.seed;
  s.init = c.init == "random" ? InitKind::Random : InitKind::Uniform;
  return s;
}

ojson report_json(const SolveReport& r) {
  ojson j;
  j["theta"] = r.theta;
  j["iterations"] = r.iterations;
  j["residual"] = r.residual;
  j["free_energy"] = r.free_energy;
  j["t_sigma"] = r.t_sigma;
  j["kl"] = r.kl;
  j["converged"] = r.converged;
  j["certified_unique"] = r.certified_unique;
  j["damping"] = r.damping;
  return j;
}

ojson blocks_json(const BlockMasses& b) {
  return ojson{{"d11", b.d11}, {"d12", b.d12}, {"d21", b.d21}, {"d22", b.d22}};
}

Result cmd_sample(const RunConfig& c, const Permuton& mu) {
  Result r;
  for (std::int64_t k = 0; k < c.samples; ++k) {
    const Permutation p = sample_mu_random_perm(mu, c.n, derive_seed(c.seed, static_cast<std::uint64_t>(k)));
    r.rows.push_back(ojson{{"index", k}, {"n", c.n}, {"permutation", p.str()}});
  }
  return r;
}

Result cmd_tsigma(const RunConfig& c, const Permuton* mu) {
  const Pattern sigma = parse_pattern(c.sigma);
  ojson row{{"sigma", sigma.str()}};
  if (!c.perm.empty()) {
    const Permutation pi = parse_permutation(c.perm);
    row["method"] = "permutation";
    row["value"] = t_sigma_perm(sigma, pi);
    row["occurrences"] = occurrences(sigma, pi);
  } else if (c.mc) {
    const McEstimate e = t_sigma_measure_mc(sigma, *mu, c.samples, c.seed, c.jobs);
    row["method"] = "mc";
    row["value"] = e.value;
    row["std_error"] = e.std_error;
    row["samples"] = e.samples;
    row["seed"] = e.seed;
  } else {
    row["method"] = "exact";
    row["value"] = t_sigma_measure_exact(sigma, *mu);
  }
  Result r;
  r.rows.push_back(std::move(row));
  return r;
}

Proposal proposal_of(const std::string& s) {
  return s == "transposition" ? Proposal::AdjacentTransposition : Proposal::PointResample;
}

Result cmd_gibbs(const RunConfig& c, const Permuton& mu) {
  GibbsParams p{parse_pattern(c.sigma), mu, c.theta, c.n};
  ChainConfig cc = ChainConfig::defaults(c.n, c.samples, c.seed);
  if (c.burn_in >= 0) cc.burn_in = c.burn_in;
  if (c.thinning > 0) cc.thinning = c.thinning;
  cc.steps = c.steps > 0 ? c.steps : cc.burn_in + c.samples * cc.thinning;
  cc.proposal = proposal_of(c.proposal);
  const auto chains = gibbs_mcmc_chains(p, cc, c.chains, c.jobs);
  Result r;
  for (std::size_t k = 0; k < chains.size(); ++k) {
    const ChainResult& ch = chains[k];
    double s1 = 0.0, s2 = 0.0;
    for (const Permutation& pi : ch.samples) {
      const double t = t_sigma_perm(p.sigma, pi);
      s1 += t;
      s2 += t * t;
    }
    const double cnt = static_cast<double>(ch.samples.size());
    const double mean = cnt > 0 ? s1 / cnt : 0.0;
    const double var = cnt > 1 ? std::max(0.0, (s2 - cnt * mean * mean) / (cnt - 1)) : 0.0;
    r.rows.push_back(ojson{{"chain", k},
                           {"samples", ch.samples.size()},
                           {"proposals", ch.proposals},
                           {"acceptance_rate", ch.acceptance_rate()},
                           {"mean_t_sigma", mean},
                           {"sd_t_sigma", std::sqrt(var)}});
  }
  r.summary = ojson{{"sigma", p.sigma.str()}, {"theta", c.theta}, {"n", c.n},
                    {"steps", cc.steps}, {"burn_in", cc.burn_in}, {"thinning", cc.thinning}};
  return r;
}

Result cmd_pmf(const RunConfig& c) {
  const Pattern sigma = parse_pattern(c.sigma);
  const PmfTable t = exact_gibbs_pmf(sigma, c.theta, c.n);
  Result r;
  for (const auto& [pi, prob] : t.probability)
    r.rows.push_back(ojson{{"permutation", pi.str()},
                           {"t_sigma", t_sigma_perm(sigma, pi)},
                           {"probability", prob}});
  r.summary = ojson{{"sigma", sigma.str()}, {"theta", c.theta}, {"n", c.n},
                    {"log_partition", t.log_partition}};
  return r;
}

Result cmd_solve(const RunConfig& c, const Permuton& mu) {
  const auto [field, rep] = solve_el(parse_pattern(c.sigma), mu, c.theta, solve_config(c));
  Result r;
  r.summary = report_json(rep);
  r.converged = rep.converged;
  if (c.grid && field.base->m > 0) {
    const Eigen::MatrixXd g = field.cell_values();
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      for (Eigen::Index i = 0; i < g.rows(); ++i)
        r.rows.push_back(ojson{{"i", i}, {"j", j}, {"g", g(i, j)}});
  }
  return r;
}

Result cmd_free_energy(const RunConfig& c, const Permuton& mu) {
  const auto rep = solve_el(parse_pattern(c.sigma), mu, c.theta, solve_config(c)).second;
  Result r;
  r.summary = ojson{{"theta", c.theta},
                    {"free_energy", rep.free_energy},
                    {"t_sigma", rep.t_sigma},
                    {"kl", rep.kl},
                    {"converged", rep.converged}};
  r.converged = rep.converged;
  return r;
}

Result cmd_condition(const RunConfig& c, const Permuton& mu) {
  const ConditionalResult cr =
      conditional_optimizer(parse_pattern(c.sigma), mu, c.delta, solve_config(c), c.delta_tol);
  Result r;
  r.summary = ojson{{"delta", c.delta},
                    {"theta_hat", cr.theta},
                    {"G", cr.G},
                    {"t_sigma", cr.t_sigma},
                    {"el_residual", cr.el_residual},
                    {"iterations", cr.report.iterations},
                    {"converged", cr.report.converged}};
  r.converged = cr.report.converged && std::abs(cr.t_sigma - c.delta) <= c.delta_tol;
  return r;
}

Result cmd_phase_scan(const RunConfig& c) {
  PhaseScanConfig pc;
  pc.solve = solve_config(c);
  pc.delta_tol = c.delta_tol;
  pc.bias = c.bias;
  pc.jobs = c.jobs;
  const auto rows = phase_scan(c.ells, c.deltas, pc);
  Result r;
  for (const PhaseScanRow& row : rows) {
    ojson j{{"ell", row.ell},   {"delta", row.delta},     {"clusters", row.clusters},
            {"G", row.G},       {"separated", row.separated}, {"d11", row.d11},
            {"d22", row.d22},   {"offdiag", row.offdiag}};
    r.rows.push_back(std::move(j));
    if (!row.attainable) r.converged = false;
  }
  // extra detail for the JSON view
  ojson detail = ojson::array();
  for (const PhaseScanRow& row : rows) {
    ojson cl = ojson::array();
    for (const ClusterSummary& s : row.all)
      cl.push_back(ojson{{"blocks", blocks_json(s.blocks)},
                         {"G", s.G},
                         {"theta", s.theta},
                         {"t_sigma", s.t_sigma},
                         {"starts", s.starts},
                         {"near_optimal", s.near_optimal},
                         {"separated", s.separated},
                         {"off_bound_ok", s.off_bound_ok},
                         {"minor_block_bound_ok", s.minor_block_bound_ok}});
    detail.push_back(ojson{{"ell", row.ell},
                           {"delta", row.delta},
                           {"attainable", row.attainable},
                           {"note", row.note},
                           {"clusters", std::move(cl)}});
  }
  r.summary["detail"] = std::move(detail);
  return r;
}

Result cmd_cc_check(const RunConfig& c, const Permuton& mu) {
  const CcReport rep = cc_test_21(mu, c.tol, c.resolution);
  Result r;
  r.summary = ojson{{"cc", rep.cc},
                    {"constant", rep.constant},
                    {"max_deviation", rep.max_deviation},
                    {"samples", rep.samples},
                    {"resolution", rep.resolution},
                    {"tolerance", rep.tolerance}};
  for (const Point& p : rep.witnesses)
    r.rows.push_back(ojson{{"x", p.x}, {"y", p.y}, {"pair_weight", pair_weight_21(mu, p)}});
  return r;
}

Result cmd_support_diag(const RunConfig& c, const Permuton& mu) {
  const SupportDiagnostics d = support_diagnostics_21(mu, c.resolution, c.eps);
  Result r;
  r.summary = ojson{{"interior", d.interior},
                    {"frontier_points", d.frontier_points},
                    {"b", d.b},
                    {"residual", d.residual},
                    {"normal_x", d.normal.x},
                    {"normal_y", d.normal.y},
                    {"triangle_mass", d.triangle_mass}};
  return r;
}

Result cmd_mallows(const RunConfig& c) {
  const MallowsResidual res = mallows_el_residual(c.theta, c.m, c.h);
  const Permuton grid = mallows_grid(c.theta, c.m);
  auto base = discretize(lebesgue(), c.m, c.bins);
  const Eigen::MatrixXd& dens = grid.as_grid().density;
  const DensityField g{base, Eigen::Map<const Eigen::VectorXd>(dens.data(), dens.size())};
  const double fixed_point = l1_distance(el_operator(parse_pattern("21"), c.theta, g), g);
  Result r;
  r.summary = ojson{{"theta", c.theta},
                    {"m", c.m},
                    {"h", c.h},
                    {"max_abs", res.max_abs},
                    {"relative", res.relative},
                    {"literal_relative", res.literal_relative},
                    {"fixed_point_l1", fixed_point}};
  if (c.grid)
    for (Eigen::Index j = 0; j < dens.cols(); ++j)
      for (Eigen::Index i = 0; i < dens.rows(); ++i)
        r.rows.push_back(ojson{{"i", i}, {"j", j}, {"density", dens(i, j)}});
  return r;
}

Result cmd_xi(const RunConfig& c, bool by_delta) {
  Result r;
  if (by_delta) {
    const XiConditional xc = xi_conditional_optimizers(c.delta);
    r.summary = ojson{{"delta", c.delta}, {"G", xc.G}};
    for (const XiMixture& x : xc.optimizers)
      r.rows.push_back(ojson{{"w11", x.w11}, {"w22", x.w22}});
  } else {
    r.summary = ojson{{"theta", c.theta},
                      {"m2", curie_weiss_root(c.theta)},
                      {"free_energy", xi_free_energy(c.theta)}};
    for (const XiMixture& x : xi_gibbs_optimizers(c.theta))
      r.rows.push_back(ojson{{"w11", x.w11}, {"w22", x.w22}});
  }
  return r;
}

std::string csv_cell(const ojson& v) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
      if (ch == '"') q += '"';
      q += ch;
    }
    return q + "\"";
  }
  if (v.is_number_float()) {
    std::ostringstream os;
    os.precision(17);
    os << v.get<double>();
    return os.str();
  }
  if (v.is_null()) return "";
  return v.dump();
}

std::string render(const RunConfig& c, const std::string& command, const std::string& spec,
                   const Result& r) {
  if (c.format == "json") {
    ojson doc;
    doc["tool"] = "permlab";
    doc["version"] = kVersion;
    doc["command"] = command;
    if (spec.empty())
      doc["spec_hash"] = nullptr;
    else
      doc["spec_hash"] = hex64(fnv1a(spec));
    doc["seed"] = c.seed;
    doc["summary"] = r.summary;
    doc["rows"] = r.rows;
    return doc.dump(2) + "\n";
  }
  std::vector<ojson> rows = r.rows;
  if (rows.empty()) {
    ojson flat = ojson::object();
    for (const auto& [k, v] : r.summary.items())
      if (!v.is_structured()) flat[k] = v;
    rows.push_back(std::move(flat));
  }
  std::ostringstream os;
  bool first = true;
  for (const auto& [k, v] : rows.front().items()) {
    os << (first ? "" : ",") << k;
    first = false;
  }
  os << "\n";
  for (const ojson& row : rows) {
    first = true;
    for (const auto& [k, v] : row.items()) {
      os << (first ? "" : ",") << csv_cell(v);
      first = false;
    }
    os << "\n";
  }
  return os.str();
}

std::uint64_t default_seed() {
  if (const char* s = std::getenv("PERMLAB_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (end != s && *end == '\0') return v;
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  c.seed = default_seed();

  CLI::App app{"permlab: permutons, pattern densities and Gibbs permutation models", "permlab"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  auto common = [&](CLI::App* s) {
    s->add_option("--format", c.format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    s->add_option("-o,--output", c.output, "Write data here instead of standard output");
    s->add_option("--seed", c.seed, "Random seed (default: PERMLAB_SEED or 0)");
    s->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
    s->add_flag("--strict", c.strict, "Exit 3 when a solve does not converge");
  };
  auto measure = [&](CLI::App* s, bool required) {
    auto* o = s->add_option("--mu", c.mu,
                            "Permuton: builtin:NAME (lebesgue, xi, xi11, xi22, mu_ell, rect_z, "
                            "sstar), a JSON file, or inline JSON");
    if (required) o->required();
    s->add_option("--ell", c.params.ell, "Parameter of builtin:mu_ell")->capture_default_str();
    s->add_option("--z", c.params.z, "Parameter of builtin:rect_z and builtin:sstar")
        ->capture_default_str();
    s->add_option("--eta", c.params.eta, "Permutation inflated by builtin:sstar")
        ->capture_default_str();
  };
  auto solver = [&](CLI::App* s) {
    s->add_option("--m", c.m, "Grid resolution")->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--bins", c.bins, "Bins per segment")->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--tol", c.tol, "Fixed-point tolerance (L1)")->capture_default_str();
    s->add_option("--max-iter", c.max_iter, "Iteration cap")->capture_default_str();
    s->add_option("--damping", c.damping, "Initial damping in (0, 1]")->capture_default_str();
    s->add_option("--theta-max", c.theta_max, "Bracket limit for theta")->capture_default_str();
    s->add_option("--init", c.init, "Initial density")
        ->check(CLI::IsMember({"uniform", "random"}))
        ->capture_default_str();
  };

  std::string command;
  auto sub = [&](const char* name, const char* help) {
    CLI::App* s = app.add_subcommand(name, help);
    s->callback([&command, name] { command = name; });
    common(s);
    return s;
  };

  auto* sample = sub("sample", "Sample mu-random permutations.\nCSV columns: index,n,permutation");
  measure(sample, true);
  sample->add_option("--n", c.n, "Permutation size")->required()->check(CLI::PositiveNumber);
  sample->add_option("--N,--count", c.samples, "Number of permutations")->capture_default_str();

  auto* tsigma = sub("tsigma",
                     "Pattern density of a permuton (exact or Monte Carlo) or of a permutation.\n"
                     "CSV columns: sigma,method,value[,std_error,samples,seed | ,occurrences]");
  measure(tsigma, false);
  tsigma->add_option("--sigma", c.sigma, "Pattern")->required();
  tsigma->add_option("--perm", c.perm, "Evaluate on this permutation instead of --mu");
  auto* ex = tsigma->add_flag("--exact", c.exact, "Exact evaluation (default)");
  tsigma->add_flag("--mc", c.mc, "Monte Carlo estimate")->excludes(ex);
  tsigma->add_option("--N,--samples", c.samples, "Monte Carlo samples")->capture_default_str();

  auto* gibbs = sub("gibbs",
                    "Metropolis chains for the Gibbs permutation model.\n"
                    "CSV columns: chain,samples,proposals,acceptance_rate,mean_t_sigma,sd_t_sigma");
  measure(gibbs, false);
  gibbs->add_option("--sigma", c.sigma, "Pattern")->required();
  gibbs->add_option("--theta", c.theta, "Tilt")->required();
  gibbs->add_option("--n", c.n, "Permutation size")->required()->check(CLI::PositiveNumber);
  gibbs->add_option("--N,--samples", c.samples, "Recorded samples per chain")->capture_default_str();
  gibbs->add_option("--steps", c.steps, "Total steps (default: burn-in + samples * thinning)");
  gibbs->add_option("--burn-in", c.burn_in, "Burn-in steps (default 100 n)");
  gibbs->add_option("--thinning", c.thinning, "Thinning (default n)");
  gibbs->add_option("--chains", c.chains, "Independent chains")->check(CLI::PositiveNumber);
  gibbs->add_option("--proposal", c.proposal, "Proposal kernel")
      ->check(CLI::IsMember({"point", "transposition"}))
      ->capture_default_str();

  auto* pmf = sub("pmf", "Exact Gibbs pmf for small n.\nCSV columns: permutation,t_sigma,probability");
  pmf->add_option("--sigma", c.sigma, "Pattern")->required();
  pmf->add_option("--theta", c.theta, "Tilt")->required();
  pmf->add_option("--n", c.n, "Permutation size (at most 8)")->required()->check(CLI::PositiveNumber);

  auto* solve = sub("solve",
                    "Solve the Euler-Lagrange fixed point.\n"
                    "CSV columns: theta,iterations,residual,free_energy,t_sigma,kl,converged,"
                    "certified_unique,damping (or i,j,g with --grid)");
  measure(solve, false);
  solver(solve);
  solve->add_option("--sigma", c.sigma, "Pattern (12 or 21)")->required();
  solve->add_option("--theta", c.theta, "Tilt")->required();
  solve->add_flag("--grid", c.grid, "Emit the optimizer density on the grid");

  auto* fe = sub("free-energy", "Free energy at theta.\nCSV columns: theta,free_energy,t_sigma,kl,converged");
  measure(fe, false);
  solver(fe);
  fe->add_option("--sigma", c.sigma, "Pattern (12 or 21)")->required();
  fe->add_option("--theta", c.theta, "Tilt")->required();

  auto* cond = sub("condition",
                   "Tilt matching a target pattern density and its optimizer.\n"
                   "CSV columns: delta,theta_hat,G,t_sigma,el_residual,iterations,converged");
  measure(cond, false);
  solver(cond);
  cond->add_option("--sigma", c.sigma, "Pattern (12 or 21)")->required();
  cond->add_option("--delta", c.delta, "Target density")->required();
  cond->add_option("--delta-tol", c.delta_tol, "Tolerance on the density")->capture_default_str();

  auto* scan = sub("phase-scan",
                   "Multi-start scan over mu_ell and target densities.\n"
                   "CSV columns: ell,delta,clusters,G,separated,d11,d22,offdiag");
  solver(scan);
  scan->add_option("--ells", c.ells, "Values of ell")->required()->delimiter(',');
  scan->add_option("--deltas", c.deltas, "Target densities")->required()->delimiter(',');
  scan->add_option("--delta-tol", c.delta_tol, "Tolerance on the density")->capture_default_str();
  scan->add_option("--bias", c.bias, "Factor of the biased starts")->capture_default_str();

  auto* cc = sub("cc-check",
                 "Test whether the inversion pair weight is constant on the support.\n"
                 "CSV columns: cc,constant,max_deviation,samples,resolution,tolerance "
                 "(or x,y,pair_weight witnesses when not constant)");
  measure(cc, true);
  cc->add_option("--tol", c.tol, "Tolerance")->capture_default_str();
  cc->add_option("--resolution", c.resolution, "Sampling resolution")->check(CLI::PositiveNumber);

  auto* sd = sub("support-diag",
                 "Support diagnostics for inversion-conditioned optimizers.\n"
                 "CSV columns: interior,frontier_points,b,residual,normal_x,normal_y,triangle_mass");
  measure(sd, true);
  sd->add_option("--resolution", c.resolution, "Raster resolution")->check(CLI::PositiveNumber);
  sd->add_option("--eps", c.eps, "Mass threshold of the frontier")->capture_default_str();

  auto* mallows = sub("mallows",
                      "Closed-form optimizer density for the inversion tilt of the uniform permuton.\n"
                      "CSV columns: theta,m,h,max_abs,relative,literal_relative,fixed_point_l1 "
                      "(or i,j,density with --grid)");
  mallows->add_option("--theta", c.theta, "Tilt")->required();
  mallows->add_option("--m", c.m, "Grid resolution")->check(CLI::PositiveNumber)->capture_default_str();
  mallows->add_option("--step", c.h, "Finite-difference step")->capture_default_str();
  mallows->add_option("--bins", c.bins, "Unused for grids")->capture_default_str();
  mallows->add_flag("--grid", c.grid, "Emit the density grid");

  auto* xi = sub("xi",
                 "Closed forms for the two-segment permuton.\n"
                 "CSV columns: w11,w22 per optimizer");
  auto* xt = xi->add_option("--theta", c.theta, "Tilt");
  auto* xd = xi->add_option("--delta", c.delta, "Conditioned density");
  xt->excludes(xd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    err << app.help();
    return kInvalid;
  }

  try {
    std::string spec;
    std::optional<Loaded> loaded;
    const bool uses_mu = command != "pmf" && command != "phase-scan" && command != "mallows" &&
                         command != "xi" && !(command == "tsigma" && !c.perm.empty());
    if (uses_mu) {
      loaded = load_mu(c);
      spec = loaded->spec;
    }
    const Permuton* mu = loaded ? &loaded->measure : nullptr;

    Result r;
    if (command == "sample") r = cmd_sample(c, *mu);
    else if (command == "tsigma") r = cmd_tsigma(c, mu);
    else if (command == "gibbs") r = cmd_gibbs(c, *mu);
    else if (command == "pmf") r = cmd_pmf(c);
    else if (command == "solve") r = cmd_solve(c, *mu);
    else if (command == "free-energy") r = cmd_free_energy(c, *mu);
    else if (command == "condition") r = cmd_condition(c, *mu);
    else if (command == "phase-scan") r = cmd_phase_scan(c);
    else if (command == "cc-check") r = cmd_cc_check(c, *mu);
    else if (command == "support-diag") r = cmd_support_diag(c, *mu);
    else if (command == "mallows") r = cmd_mallows(c);
    else if (command == "xi") {
      if (xt->count() + xd->count() != 1) throw ValidationError("xi needs exactly one of --theta, --delta");
      r = cmd_xi(c, xd->count() > 0);
    }

    const std::string text = render(c, command, spec, r);
    if (c.output.empty()) {
      out << text;
    } else {
      std::ofstream f(c.output, std::ios::binary);
      if (!f) throw ValidationError("cannot write " + c.output);
      f << text;
    }
    if (!r.converged) {
      err << "permlab: " << command << ": solver did not converge\n";
      if (c.strict) return kNotConverged;
    }
    return kOk;
  } catch (const NumericalError& e) {
    err << "permlab: " << e.what() << "\n";
    return kNotConverged;
  } catch (const std::exception& e) {
    err << "permlab: " << e.what() << "\n";
    return kInvalid;
  }
}

}  // namespace permlab::cli
