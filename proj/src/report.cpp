#include "bpf/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bpf/kernels.hpp"

#ifndef BPF_VERSION
#define BPF_VERSION "0.0.0"
#endif

namespace bpf {

using nlohmann::json;

std::string version_string() { return BPF_VERSION; }

json config_to_json(const SolverConfig& c) {
  json j;
  j["rho"] = c.rho;
  j["eta"] = c.eta;
  j["eps"] = c.eps;
  j["alpha_rule"] = to_string(c.alpha_rule);
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["max_iters"] = c.max_iters;
  j["seed"] = c.seed;
  j["eig_tol"] = c.eig.tol;
  j["eig_krylov_dim"] = c.eig.krylov_dim;
  j["eig_max_restarts"] = c.eig.max_restarts;
  j["eig_dense_threshold"] = c.eig.dense_threshold;
  j["prox_accept_tol"] = c.prox.accept_tol;
  j["newton_max_iters"] = c.prox.newton_max_iters;
  j["newton_tol_factor"] = c.prox.newton_tol_factor;
  j["newton_damping_start"] = c.prox.damping_start;
  j["newton_damping_max"] = c.prox.damping_max;
  j["feas_tol"] = c.feas_tol;
  j["comp_tol"] = c.comp_tol;
  j["gap_tol"] = c.gap_tol;
  return j;
}

namespace {

template <class T>
void read_key(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("config: key '") + key + "' has the wrong type");
  }
}

}  // namespace

SolverConfig config_from_json(const json& j, SolverConfig c) {
  if (!j.is_object()) throw ValidationError("config: expected a JSON object");
  static const std::vector<std::string> known = [] {
    std::vector<std::string> k;
    const json defaults = config_to_json(SolverConfig{});
    for (const auto& [key, v] : defaults.items()) k.push_back(key);
    return k;
  }();
  for (const auto& [key, v] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ValidationError("config: unknown key '" + key + "'");
    }
  }
  read_key(j, "rho", c.rho);
  read_key(j, "eta", c.eta);
  read_key(j, "eps", c.eps);
  if (j.contains("alpha_rule")) {
    std::string r;
    read_key(j, "alpha_rule", r);
    c.alpha_rule = alpha_rule_from_string(r);
  }
  read_key(j, "alpha", c.alpha);
  read_key(j, "beta", c.beta);
  read_key(j, "max_iters", c.max_iters);
  read_key(j, "seed", c.seed);
  read_key(j, "eig_tol", c.eig.tol);
  read_key(j, "eig_krylov_dim", c.eig.krylov_dim);
  read_key(j, "eig_max_restarts", c.eig.max_restarts);
  read_key(j, "eig_dense_threshold", c.eig.dense_threshold);
  read_key(j, "prox_accept_tol", c.prox.accept_tol);
  read_key(j, "newton_max_iters", c.prox.newton_max_iters);
  read_key(j, "newton_tol_factor", c.prox.newton_tol_factor);
  read_key(j, "newton_damping_start", c.prox.damping_start);
  read_key(j, "newton_damping_max", c.prox.damping_max);
  read_key(j, "feas_tol", c.feas_tol);
  read_key(j, "comp_tol", c.comp_tol);
  read_key(j, "gap_tol", c.gap_tol);
  c.eig.seed = c.seed;
  c.validate();
  return c;
}

SolverConfig load_config(const std::string& path, SolverConfig base) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("config file '" + path + "': " + e.what());
  }
  return config_from_json(j, base);
}

json manifest_to_json(const RunManifest& m) {
  json j;
  j["command"] = m.command;
  j["network_path"] = m.network_path;
  j["injection_path"] = m.injection_path ? json(*m.injection_path) : json(nullptr);
  j["inline_u"] = m.inline_u ? json(*m.inline_u) : json(nullptr);
  j["config_path"] = m.config_path ? json(*m.config_path) : json(nullptr);
  j["config"] = config_to_json(m.config);
  j["seed"] = m.config.seed;
  j["version"] = m.version;
  j["threads"] = m.threads;
  j["wall_seconds"] = m.wall_seconds;
  j["memory_estimate_bytes"] = m.memory_estimate_bytes;
  j["peak_rss_bytes"] = m.peak_rss_bytes;
  return j;
}

RunManifest manifest_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("manifest: expected a JSON object");
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.network_path = j.at("network_path").get<std::string>();
    if (j.contains("injection_path") && !j["injection_path"].is_null()) {
      m.injection_path = j["injection_path"].get<std::string>();
    }
    if (j.contains("inline_u") && !j["inline_u"].is_null()) {
      m.inline_u = j["inline_u"].get<std::vector<double>>();
    }
    if (j.contains("config_path") && !j["config_path"].is_null()) {
      m.config_path = j["config_path"].get<std::string>();
    }
    m.config = config_from_json(j.at("config"));
    if (j.contains("version")) m.version = j["version"].get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("manifest: ") + e.what());
  }
  if (!m.injection_path && !m.inline_u) throw ValidationError("manifest: no injection recorded");
  return m;
}

std::size_t estimate_memory_bytes(const PenaltyObjective& problem, const SolverConfig& config) {
  const std::size_t n = static_cast<std::size_t>(problem.dim());
  const std::size_t nnz = problem.admittance().pattern->nnz();
  const std::size_t ny = static_cast<std::size_t>(problem.y_dim());
  const std::size_t k = static_cast<std::size_t>(std::min<int>(config.eig.krylov_dim, problem.dim()));
  std::size_t bytes = 0;
  bytes += nnz * (3 * sizeof(int));               // pattern
  bytes += 3 * nnz * sizeof(cplx);                // Y, C, H
  bytes += (k + 1) * n * sizeof(cplx);            // Krylov basis
  bytes += k * k * sizeof(cplx) * 2;              // projected matrix and its eigenvectors
  bytes += 8 * ny * sizeof(double);               // center, trial, three slopes, subgradient, work
  bytes += static_cast<std::size_t>(config.max_iters) * sizeof(IterationRecord);
  return bytes;
}

std::size_t peak_rss_bytes() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      std::istringstream is(line.substr(6));
      std::size_t kb = 0;
      is >> kb;
      return kb * 1024;
    }
  }
  return 0;
}

const std::vector<std::string>& iteration_columns() {
  static const std::vector<std::string> cols = {
      "k", "delta", "step", "f_center", "f_trial", "phi", "lambda_max",
      "case", "newton_fallback", "matvecs", "prox_seconds", "eig_seconds"};
  return cols;
}

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json complex_vector_json(const ComplexVector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back({v[i].real(), v[i].imag()});
  return a;
}

}  // namespace

json report_to_json(const SolveReport& r, const RunManifest& manifest) {
  json j;
  j["manifest"] = manifest_to_json(manifest);

  const PrimalCertificate& c = r.certificate;
  json res;
  res["verdict"] = to_string(c.verdict);
  res["converged"] = r.converged;
  res["f_star"] = r.f_star;
  res["alpha"] = r.alpha;
  res["iterations"] = r.iterations;
  res["serious_steps"] = r.serious_steps;
  res["null_steps"] = r.null_steps;
  res["case_counts"] = {{"vertex", r.case_counts[0]},
                        {"edge", r.case_counts[1]},
                        {"interior", r.case_counts[2]}};
  res["newton_fallbacks"] = r.newton_fallbacks;
  res["matvecs"] = r.matvecs;
  res["solve_seconds"] = r.solve_seconds;
  res["mean_prox_seconds"] = r.mean_prox_seconds;
  res["final_delta"] = r.state.history.empty() ? json(nullptr) : json(r.state.history.back().delta);
  res["warnings"] = r.warnings;
  j["result"] = res;

  json cert;
  cert["slack_total"] = c.slack_total;
  cert["complementarity_residual"] = c.complementarity_residual;
  cert["h_frobenius_norm"] = c.h_norm;
  cert["slack_block_residual"] = c.slack_block_residual;
  cert["lambda1"] = c.lambda1;
  cert["lambda2"] = c.lambda2 ? json(*c.lambda2) : json(nullptr);
  cert["primal_value"] = c.primal_value;
  cert["duality_gap"] = r.f_star + c.primal_value;
  cert["trace_W"] = c.trace_W;
  cert["w_weight"] = c.w_weight;
  cert["recovery_failed"] = c.recovery_failed;
  cert["diagnostics"] = c.diagnostics;
  cert["voltage"] = complex_vector_json(c.voltage);
  j["certificate"] = cert;

  json table;
  table["columns"] = iteration_columns();
  json rows = json::array();
  for (const IterationRecord& h : r.state.history) {
    rows.push_back({h.k, h.delta, to_string(h.kind), h.f_center, finite_or_null(h.f_trial), h.phi,
                    h.lambda_max, to_string(h.case_used), h.newton_fallback, h.matvecs,
                    h.prox_seconds, h.eig_seconds});
  }
  table["rows"] = std::move(rows);
  j["iterations"] = std::move(table);
  return j;
}

void write_report(const std::string& path, const json& report) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write report '" + path + "'");
  out << report.dump(1) << '\n';
}

json read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open report '" + path + "'");
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ValidationError("report '" + path + "': " + e.what());
  }
}

}  // namespace bpf
