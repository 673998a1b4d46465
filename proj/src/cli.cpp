#include "bpf/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "bpf/bundle.hpp"
#include "bpf/kernels.hpp"
#include "bpf/network.hpp"
#include "bpf/oracle.hpp"
#include "bpf/report.hpp"

namespace bpf::cli {

using nlohmann::json;

namespace {

struct SolverFlags {
  std::string config_path;
  double rho = 0, eta = 0, eps = 0, beta = 0, alpha = 0;
  int max_iters = 0;
  std::uint64_t seed = 0;
  CLI::Option* o_rho = nullptr;
  CLI::Option* o_eta = nullptr;
  CLI::Option* o_eps = nullptr;
  CLI::Option* o_beta = nullptr;
  CLI::Option* o_alpha = nullptr;
  CLI::Option* o_iters = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_config = nullptr;

  void attach(CLI::App* app) {
    o_config = app->add_option("--config", config_path, "JSON config with flat SolverConfig keys")
                   ->check(CLI::ExistingFile);
    o_rho = app->add_option("--rho", rho, "proximal parameter (default 4)");
    o_eta = app->add_option("--eta", eta, "descent fraction (default 0.1)");
    o_eps = app->add_option("--eps", eps, "stopping tolerance on Delta (default 1e-5)");
    o_beta = app->add_option("--beta", beta, "box bound on y (default 0.1)");
    o_alpha = app->add_option("--alpha", alpha, "explicit penalty weight (default 2 sum(v_upper))");
    o_iters = app->add_option("--max-iters", max_iters, "iteration cap");
    o_seed = app->add_option("--seed", seed, "seed for all randomness (default 0)");
  }

  SolverConfig resolve(SolverConfig base = {}) const {
    SolverConfig c = base;
    if (o_config->count()) c = load_config(config_path, c);
    if (o_rho->count()) c.rho = rho;
    if (o_eta->count()) c.eta = eta;
    if (o_eps->count()) c.eps = eps;
    if (o_beta->count()) c.beta = beta;
    if (o_alpha->count()) {
      c.alpha_rule = AlphaRule::explicit_value;
      c.alpha = alpha;
    }
    if (o_iters->count()) c.max_iters = max_iters;
    if (o_seed->count()) c.seed = seed;
    c.eig.seed = c.seed;
    c.validate();
    return c;
  }
};

RealVector expand_inline_u(const std::vector<double>& values, int dim) {
  if (values.size() == 1) return RealVector::Constant(dim, values[0]);
  if (static_cast<int>(values.size()) != dim) {
    std::ostringstream os;
    os << "--u has " << values.size() << " values; expected 1 or " << dim;
    throw ValidationError(os.str());
  }
  RealVector u(dim);
  for (int i = 0; i < dim; ++i) u[i] = values[i];
  if (!u.allFinite()) throw ValidationError("--u contains non-finite values");
  return u;
}

RealVector resolve_injection(const RunManifest& m, int dim) {
  if (m.injection_path) {
    RealVector u = load_injection(*m.injection_path);
    if (u.size() != dim) {
      std::ostringstream os;
      os << "injection '" << *m.injection_path << "' has " << u.size() << " entries; network needs "
         << dim;
      throw ValidationError(os.str());
    }
    return u;
  }
  return expand_inline_u(*m.inline_u, dim);
}

json oracle_check(const PenaltyObjective& problem, const SolveReport& rep,
                  const SolverConfig& config) {
  json j;
  const int n = problem.dim();
  if (n > oracle::kMaxDenseDim) {
    j["skipped"] = "dimension exceeds the dense oracle limit";
    j["pass"] = true;
    return j;
  }
  const DualPoint& x = rep.state.center;
  Eigen::MatrixXcd H;
  if (n <= 90) {
    const oracle::DenseProblem dense(problem);
    H = dense.H(x);
    j["dense_assembly"] = "definition";
  } else {
    H = problem.assemble_H(x).to_dense();
    j["dense_assembly"] = "sparse";
  }
  const oracle::DensePair top = oracle::dense_lambda_max(-H);
  const EigenResult eig = lambda_max_neg(problem.assemble_H(x), config.eig);
  const double f_dense = problem.linear_part(x) + problem.alpha() * std::max(top.value, 0.0);
  j["lambda_solver"] = eig.value;
  j["lambda_dense"] = top.value;
  j["f_solver"] = rep.f_star;
  j["f_dense"] = f_dense;

  const ProxProblem pp{rep.state.center, rep.state.cuts, config.rho, config.beta};
  const ProxSolution sol = solve_prox(pp, config.prox);
  const oracle::QpResult qp = oracle::qp_support_enumeration(pp);
  j["prox_objective"] = sol.objective;
  j["prox_oracle_objective"] = qp.objective;

  const bool ok_lambda = std::abs(eig.value - top.value) <= 1e-8 * (1.0 + std::abs(top.value));
  const bool ok_f = std::abs(rep.f_star - f_dense) <= 1e-8 * (1.0 + std::abs(f_dense));
  const bool ok_prox = sol.objective <= qp.objective + 1e-8;
  j["pass"] = ok_lambda && ok_f && ok_prox;
  return j;
}

int exit_code_for(const SolveReport& rep) {
  if (!rep.converged) return kError;
  return rep.certificate.verdict == Verdict::feasible ? kFeasible : kInfeasibleOrUndecided;
}

int do_assess(RunManifest manifest, const std::string& report_path, bool check,
              std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  NetworkData data = load_network(manifest.network_path);
  RealVector u = resolve_injection(manifest, data.network.dim());
  const PenaltyObjective problem = make_problem(std::move(data), std::move(u), manifest.config);
  const SolveReport rep = solve(problem, manifest.config);

  manifest.threads = kernels::max_threads();
  manifest.memory_estimate_bytes = estimate_memory_bytes(problem, manifest.config);
  manifest.peak_rss_bytes = peak_rss_bytes();
  manifest.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json doc = report_to_json(rep, manifest);

  int code = exit_code_for(rep);
  if (check) {
    json oc = oracle_check(problem, rep, manifest.config);
    doc["oracle_check"] = oc;
    out << "oracle check: " << (oc["pass"].get<bool>() ? "pass" : "FAIL") << '\n';
    if (!oc["pass"].get<bool>()) code = kError;
  }
  if (!report_path.empty()) write_report(report_path, doc);

  const PrimalCertificate& c = rep.certificate;
  out << std::setprecision(12);
  out << "verdict: " << to_string(c.verdict) << (rep.converged ? "" : " (not converged)") << '\n';
  out << "f*: " << rep.f_star << '\n';
  out << "iterations: " << rep.iterations << " (serious " << rep.serious_steps << ", null "
      << rep.null_steps << ")\n";
  out << "slack_total: " << c.slack_total << '\n';
  out << "complementarity_residual: " << c.complementarity_residual << '\n';
  for (const auto& d : c.diagnostics) err << "note: " << d << '\n';
  for (const auto& w : rep.warnings) err << "warning: " << w << '\n';
  return code;
}

// -- bench ---------------------------------------------------------------

struct BenchOptions {
  std::vector<int> sizes{1};
  int repeats = 1;
  int base_buses = 124;
  std::uint64_t base_seed = 0;
  std::string csv_path;
};

void run_bench(const BenchOptions& opt, const SolverConfig& config, std::ostream& csv,
               std::ostream& err) {
  const auto& cols = bench_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) csv << (i ? "," : "") << cols[i];
  csv << '\n';
  const NetworkData base = synth_radial(opt.base_buses, opt.base_seed);
  for (int k : opt.sizes) {
    for (int r = 0; r < opt.repeats; ++r) {
      try {
        NetworkData data = replicate_feeder(base, k);
        const int n_buses = data.network.n_buses;
        const int dim = data.network.dim();
        SolverConfig c = config;
        c.seed = config.seed + static_cast<std::uint64_t>(r);
        c.eig.seed = c.seed;
        const PenaltyObjective problem = make_problem(std::move(data), RealVector::Zero(dim), c);
        const SolveReport rep = solve(problem, c);
        double eig_total = 0.0;
        for (const auto& h : rep.state.history) eig_total += h.eig_seconds;
        const int evals = std::max(1, rep.serious_steps + rep.null_steps);
        csv << std::setprecision(9) << k << ',' << r << ',' << n_buses << ',' << dim << ','
            << problem.admittance().pattern->nnz() << ',' << rep.iterations << ','
            << (rep.converged ? 1 : 0) << ',' << rep.solve_seconds << ','
            << rep.mean_prox_seconds << ',' << eig_total / evals << ',' << rep.matvecs << ','
            << estimate_memory_bytes(problem, c) << ',' << to_string(rep.certificate.verdict)
            << '\n';
        csv.flush();
      } catch (const std::exception& e) {
        err << "bench: k=" << k << " repeat=" << r << " skipped: " << e.what() << '\n';
      }
    }
  }
}

}  // namespace

const std::vector<std::string>& bench_columns() {
  static const std::vector<std::string> cols = {
      "k", "repeat", "n_buses", "dim", "nnz", "iterations", "converged", "solve_seconds",
      "mean_prox_seconds", "mean_eig_seconds", "matvecs", "memory_estimate_bytes", "verdict"};
  return cols;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Feasibility assessment of three-phase injections by a proximal bundle method"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());

  // assess
  CLI::App* assess = app.add_subcommand("assess", "solve one feasibility problem and write a report");
  std::string network_path, injection_path, report_path, from_report;
  std::vector<double> inline_u;
  bool oracle_flag = false;
  SolverFlags flags;
  auto* o_net = assess->add_option("--network", network_path, "network JSON file");
  auto* o_inj = assess->add_option("--injection", injection_path, "injection JSON file {\"u\": [...]}");
  auto* o_u = assess->add_option("--u", inline_u, "inline injection: one value or 3N values")
                  ->delimiter(',');
  assess->add_option("--report", report_path, "report output path");
  auto* o_from = assess->add_option("--from-report", from_report, "rerun the manifest of a report");
  assess->add_flag("--oracle-check", oracle_flag)->group("");
  flags.attach(assess);
  o_inj->excludes(o_u);
  o_from->excludes(o_net)->excludes(o_inj)->excludes(o_u);

  // generate
  CLI::App* generate = app.add_subcommand("generate", "write a synthetic or replicated network");
  generate->require_subcommand(1);
  std::string gen_out;
  CLI::App* radial = generate->add_subcommand("radial", "random radial feeder");
  int radial_buses = 0;
  std::uint64_t radial_seed = 0;
  radial->add_option("--buses", radial_buses, "number of buses (>= 2)")->required();
  radial->add_option("--seed", radial_seed, "generator seed (default 0)");
  radial->add_option("--out", gen_out, "output path")->required();
  CLI::App* replicate = generate->add_subcommand("replicate", "k copies of a base feeder");
  std::string base_path;
  int copies = 0;
  std::vector<double> tie;
  replicate->add_option("--base", base_path, "base network JSON")->required()->check(CLI::ExistingFile);
  replicate->add_option("--k", copies, "number of copies (>= 1)")->required();
  replicate->add_option("--tie", tie, "tie line self impedance r,x; adds a new slack bus")
      ->delimiter(',')
      ->expected(2);
  replicate->add_option("--out", gen_out, "output path")->required();

  // bench
  CLI::App* bench = app.add_subcommand("bench", "solve replicated feeders and emit a CSV");
  BenchOptions bopt;
  SolverFlags bflags;
  bench->add_option("--sizes", bopt.sizes, "comma separated k values")->delimiter(',');
  bench->add_option("--repeats", bopt.repeats, "repeats per size")->check(CLI::PositiveNumber);
  bench->add_option("--base-buses", bopt.base_buses, "buses of the synthetic base feeder")
      ->check(CLI::Range(2, 100000));
  bench->add_option("--base-seed", bopt.base_seed, "seed of the base feeder");
  bench->add_option("--csv", bopt.csv_path, "CSV output path (default stdout)");
  bflags.attach(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kError;
  }

  try {
    if (assess->parsed()) {
      RunManifest m;
      if (!from_report.empty()) {
        const json doc = read_report(from_report);
        if (!doc.contains("manifest")) throw ValidationError("report has no manifest");
        m = manifest_from_json(doc["manifest"]);
      } else {
        if (network_path.empty()) throw ValidationError("assess needs --network or --from-report");
        if (!o_inj->count() && !o_u->count()) throw ValidationError("assess needs --injection or --u");
        m.command = "assess";
        m.network_path = network_path;
        if (o_inj->count()) m.injection_path = injection_path;
        if (o_u->count()) m.inline_u = inline_u;
        if (flags.o_config->count()) m.config_path = flags.config_path;
        m.config = flags.resolve();
      }
      return do_assess(std::move(m), report_path, oracle_flag, out, err);
    }
    if (radial->parsed()) {
      save_network(gen_out, synth_radial(radial_buses, radial_seed));
      out << "wrote " << gen_out << '\n';
      return 0;
    }
    if (replicate->parsed()) {
      ReplicateOptions ro;
      if (!tie.empty()) {
        if (!(tie[0] > 0.0) || !std::isfinite(tie[1])) throw ValidationError("--tie needs r > 0");
        Eigen::Matrix3cd z = Eigen::Matrix3cd::Zero();
        z.diagonal().setConstant(cplx(tie[0], tie[1]));
        ro.tie_admittance = line_admittance(z);
      }
      const NetworkData base = load_network(base_path);
      save_network(gen_out, replicate_feeder(base, copies, ro));
      out << "wrote " << gen_out << '\n';
      return 0;
    }
    if (bench->parsed()) {
      SolverConfig base;
      base.max_iters = 50;
      const SolverConfig c = bflags.resolve(base);
      if (bopt.sizes.empty()) throw ValidationError("--sizes is empty");
      for (int k : bopt.sizes) {
        if (k < 1) throw ValidationError("--sizes entries must be >= 1");
      }
      if (bopt.csv_path.empty()) {
        run_bench(bopt, c, out, err);
      } else {
        std::ofstream f(bopt.csv_path);
        if (!f) throw Error("cannot write '" + bopt.csv_path + "'");
        run_bench(bopt, c, f, err);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kError;
  }
  return kError;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("bpf");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace bpf::cli
