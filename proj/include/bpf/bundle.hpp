#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bpf/operators.hpp"
#include "bpf/prox.hpp"

namespace bpf {

enum class AlphaRule { two_vbar_sum, explicit_value };
std::string to_string(AlphaRule r);
AlphaRule alpha_rule_from_string(const std::string& s);

struct SolverConfig {
  double rho = 4.0;
  double eta = 0.1;
  double eps = 1e-5;
  AlphaRule alpha_rule = AlphaRule::two_vbar_sum;
  double alpha = 0.0;  // used when alpha_rule == explicit_value
  double beta = 0.1;
  int max_iters = 20000;
  EigenOptions eig;
  ProxOptions prox;
  std::uint64_t seed = 0;

  // certificate tolerances
  double feas_tol = 1e-6;
  double comp_tol = 1e-6;  // relative to ||H||_F
  double gap_tol = 1e-8;

  void validate() const;
  double resolve_alpha(const OperatingLimits& limits) const;
};

/// Builds the penalty objective with alpha and beta taken from the config.
PenaltyObjective make_problem(NetworkData data, RealVector u, const SolverConfig& config);

enum class StepKind { serious, null_step, stop };
const char* to_string(StepKind k);

struct IterationRecord {
  int k = 0;
  double delta = 0.0;
  StepKind kind = StepKind::stop;
  double f_center = 0.0;  // f(x^k) before the step
  double f_trial = 0.0;   // f(z^{k+1}); NaN on the stopping iteration
  double phi = 0.0;       // [lambda_max(-H(z))]_+
  double lambda_max = 0.0;
  ProxCase case_used = ProxCase::vertex;
  bool newton_fallback = false;
  int matvecs = 0;
  double prox_seconds = 0.0;
  double eig_seconds = 0.0;
};

struct BundleState {
  DualPoint center;
  CutTriple cuts;
  int iteration = 0;
  double f_center = 0.0;
  std::vector<IterationRecord> history;
};

BundleState init_state(const PenaltyObjective& problem, const SolverConfig& config);

/// One pass of the method. On Delta <= eps the state is left unchanged and a
/// record of kind `stop` is returned. Any exception leaves the state intact.
IterationRecord step(const PenaltyObjective& problem, const SolverConfig& config,
                     BundleState& state);

enum class Verdict { feasible, infeasible_or_undecided };
const char* to_string(Verdict v);

struct PrimalCertificate {
  ComplexVector voltage;
  double w_weight = 0.0;  // W = w_weight * w_unit w_unit^H
  ComplexVector w_unit;
  RealVector slack;       // z = [A(W) + m(u)]_+
  double slack_total = 0.0;
  double complementarity_residual = 0.0;  // ||H W||_F
  double h_norm = 0.0;                    // ||H||_F
  double slack_block_residual = 0.0;      // ||[W]_11 - M1||_F
  double lambda1 = 0.0;                   // two largest eigenvalues of -H
  std::optional<double> lambda2;
  double primal_value = 0.0;              // beta 1'z + tr(C W)
  double trace_W = 0.0;
  bool recovery_failed = false;
  Verdict verdict = Verdict::infeasible_or_undecided;
  std::vector<std::string> diagnostics;
};

PrimalCertificate recover_primal(const PenaltyObjective& problem, const DualPoint& x,
                                 const SolverConfig& config);

struct SolveReport {
  BundleState state;
  PrimalCertificate certificate;
  bool converged = false;
  double f_star = 0.0;
  double alpha = 0.0;
  int iterations = 0;
  int serious_steps = 0;
  int null_steps = 0;
  std::array<int, 3> case_counts{};  // vertex, edge, interior
  int newton_fallbacks = 0;
  long long matvecs = 0;
  double solve_seconds = 0.0;
  double mean_prox_seconds = 0.0;
  std::vector<std::string> warnings;
};

SolveReport solve(const PenaltyObjective& problem, const SolverConfig& config);

}  // namespace bpf
