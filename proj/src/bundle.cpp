#include "bpf/bundle.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace bpf {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::string to_string(AlphaRule r) {
  return r == AlphaRule::two_vbar_sum ? "two_vbar_sum" : "explicit";
}

AlphaRule alpha_rule_from_string(const std::string& s) {
  if (s == "two_vbar_sum") return AlphaRule::two_vbar_sum;
  if (s == "explicit") return AlphaRule::explicit_value;
  throw ValidationError("unknown alpha_rule '" + s + "' (expected two_vbar_sum or explicit)");
}

void SolverConfig::validate() const {
  auto fail = [](const std::string& m) { throw ValidationError("config: " + m); };
  if (!(rho > 0.0)) fail("rho must be positive");
  if (!(eta > 0.0 && eta < 1.0)) fail("eta must lie in (0, 1)");
  if (!(eps > 0.0)) fail("eps must be positive");
  if (!(beta > 0.0)) fail("beta must be positive");
  if (max_iters <= 0) fail("max_iters must be positive");
  if (alpha_rule == AlphaRule::explicit_value && !(alpha > 0.0)) fail("explicit alpha must be positive");
  if (!(eig.tol > 0.0) || eig.krylov_dim < 2 || eig.max_restarts < 0) fail("bad eigen settings");
  if (prox.newton_max_iters <= 0) fail("newton_max_iters must be positive");
  if (!(feas_tol >= 0.0 && comp_tol >= 0.0 && gap_tol >= 0.0)) fail("tolerances must be nonnegative");
}

double SolverConfig::resolve_alpha(const OperatingLimits& limits) const {
  if (alpha_rule == AlphaRule::explicit_value) return alpha;
  const double a = 2.0 * limits.v_upper.sum();
  if (!(a > 0.0)) throw ValidationError("alpha = 2 sum(v_upper) is not positive; give alpha explicitly");
  return a;
}

PenaltyObjective make_problem(NetworkData data, RealVector u, const SolverConfig& config) {
  config.validate();
  const double alpha = config.resolve_alpha(data.limits);
  return PenaltyObjective(std::move(data), std::move(u), alpha, config.beta);
}

const char* to_string(StepKind k) {
  switch (k) {
    case StepKind::serious: return "serious";
    case StepKind::null_step: return "null";
    case StepKind::stop: return "stop";
  }
  return "?";
}

const char* to_string(Verdict v) {
  return v == Verdict::feasible ? "feasible" : "infeasible_or_undecided";
}

// ---------------------------------------------------------------------------

BundleState init_state(const PenaltyObjective& problem, const SolverConfig& config) {
  BundleState s;
  s.center = DualPoint{RealVector::Constant(problem.y_dim(), 0.5 * config.beta), Herm3::Zero()};
  Cut c;
  c.intercept = 0.0;
  c.slope = problem.linear_slope();
  for (int i = 0; i < 3; ++i) {
    s.cuts[i] = c;
    s.cuts[i].kind = static_cast<CutKind>(i);
  }
  s.f_center = eval_f(problem, s.center, config.eig);
  return s;
}

IterationRecord step(const PenaltyObjective& problem, const SolverConfig& config,
                     BundleState& state) {
  IterationRecord rec;
  rec.k = state.iteration;
  rec.f_center = state.f_center;

  auto t0 = Clock::now();
  const ProxProblem pp{state.center, state.cuts, config.rho, config.beta};
  ProxSolution sol = solve_prox(pp, config.prox);
  rec.prox_seconds = seconds_since(t0);
  rec.case_used = sol.case_used;
  rec.newton_fallback = sol.diagnostics.newton_fallback;
  rec.delta = state.f_center - sol.model_value;

  if (rec.delta <= config.eps) {
    rec.kind = StepKind::stop;
    rec.f_trial = std::numeric_limits<double>::quiet_NaN();
    state.history.push_back(rec);
    return rec;
  }

  t0 = Clock::now();
  const Evaluation ev = evaluate(problem, sol.trial, config.eig);
  rec.eig_seconds = seconds_since(t0);
  rec.matvecs = ev.eig.matvecs;
  rec.f_trial = ev.f;
  rec.phi = ev.phi();
  rec.lambda_max = ev.eig.value;
  const double residual_tol = std::max(1e-6, 1e3 * config.eig.tol);
  DualPoint g = subgradient(problem, ev.eig, residual_tol);

  // New cuts, built before anything in the state changes.
  const auto& th = sol.weights.theta;
  Cut agg;
  agg.kind = CutKind::aggregate;
  agg.slope = weighted_slope(state.cuts, sol.weights);
  agg.intercept = th[0] * state.cuts[0].intercept + th[1] * state.cuts[1].intercept +
                  th[2] * state.cuts[2].intercept;
  Cut cur = Cut::through(sol.trial, ev.f_lambda, std::move(g), CutKind::current);

  rec.kind = ev.f <= state.f_center - config.eta * rec.delta ? StepKind::serious : StepKind::null_step;
  if (rec.kind == StepKind::serious) {
    state.center = std::move(sol.trial);
    state.f_center = ev.f;
  }
  state.cuts[1] = std::move(cur);
  state.cuts[2] = std::move(agg);
  ++state.iteration;
  state.history.push_back(rec);
  return rec;
}

// ---------------------------------------------------------------------------

PrimalCertificate recover_primal(const PenaltyObjective& problem, const DualPoint& x,
                                 const SolverConfig& config) {
  PrimalCertificate cert;
  const ComplexCsr H = problem.assemble_H(x);
  cert.h_norm = H.frobenius_norm();
  const EigenResult eig = lambda_max_neg(H, config.eig, 2);
  cert.lambda1 = eig.value;
  cert.lambda2 = eig.second_value;

  const ComplexVector& v0 = eig.vector;
  const Eigen::Vector3cd head = v0.head<3>();
  const Eigen::Vector3cd& V1 = problem.slack_voltage();
  const double head_sq = head.squaredNorm();
  if (std::sqrt(head_sq) < 1e-8) {
    cert.recovery_failed = true;
    cert.diagnostics.push_back("eigenvector has a near-zero slack block");
  }
  const cplx c = head_sq > 0.0 ? head.dot(V1) / head_sq : cplx(0.0, 0.0);
  cert.voltage = c * v0;
  cert.w_weight = std::norm(c) * v0.squaredNorm();
  cert.w_unit = v0 / v0.norm();
  cert.trace_W = cert.voltage.squaredNorm();

  RealVector a = apply_A_rank1(problem.admittance(), cert.voltage) + problem.m_vector();
  cert.slack = a.cwiseMax(0.0);
  cert.slack_total = cert.slack.sum();

  const ComplexVector HV = H * cert.voltage;
  cert.complementarity_residual = HV.norm() * cert.voltage.norm();
  const Eigen::Vector3cd vh = cert.voltage.head<3>();
  const Herm3 block = vh * vh.adjoint();
  cert.slack_block_residual = (block - problem.M1()).norm();
  const ComplexVector CV = problem.cost() * cert.voltage;
  cert.primal_value = config.beta * cert.slack_total + cert.voltage.dot(CV).real();

  bool simple = true;
  if (!cert.lambda2) {
    simple = problem.dim() == 1;
  } else if (cert.lambda1 - *cert.lambda2 < config.gap_tol) {
    simple = false;
    std::ostringstream os;
    os << "extremal eigenvalue of -H is not simple (gap " << cert.lambda1 - *cert.lambda2 << ")";
    cert.diagnostics.push_back(os.str());
  }
  const double comp_tol = config.comp_tol * cert.h_norm;
  if (cert.slack_total > config.feas_tol) {
    std::ostringstream os;
    os << "slack total " << cert.slack_total << " exceeds " << config.feas_tol;
    cert.diagnostics.push_back(os.str());
  }
  if (cert.complementarity_residual > comp_tol) {
    std::ostringstream os;
    os << "complementarity residual " << cert.complementarity_residual << " exceeds " << comp_tol;
    cert.diagnostics.push_back(os.str());
  }
  const bool ok = !cert.recovery_failed && simple && cert.slack_total <= config.feas_tol &&
                  cert.complementarity_residual <= comp_tol;
  cert.verdict = ok ? Verdict::feasible : Verdict::infeasible_or_undecided;
  return cert;
}

SolveReport solve(const PenaltyObjective& problem, const SolverConfig& config) {
  config.validate();
  const auto t0 = Clock::now();
  SolveReport rep;
  rep.alpha = problem.alpha();
  rep.state = init_state(problem, config);

  double prox_total = 0.0;
  for (int it = 0; it < config.max_iters; ++it) {
    const IterationRecord rec = step(problem, config, rep.state);
    prox_total += rec.prox_seconds;
    rep.case_counts[static_cast<int>(rec.case_used)]++;
    if (rec.newton_fallback) ++rep.newton_fallbacks;
    rep.matvecs += rec.matvecs;
    if (rec.kind == StepKind::stop) {
      rep.converged = true;
      break;
    }
    if (rec.kind == StepKind::serious) ++rep.serious_steps;
    else ++rep.null_steps;
  }
  const int passes = static_cast<int>(rep.state.history.size());
  rep.iterations = rep.state.iteration;
  rep.mean_prox_seconds = passes > 0 ? prox_total / passes : 0.0;
  rep.f_star = rep.state.f_center;
  if (!rep.converged) {
    std::ostringstream os;
    os << "max_iters (" << config.max_iters << ") reached before Delta <= eps";
    rep.warnings.push_back(os.str());
  }

  rep.certificate = recover_primal(problem, rep.state.center, config);
  if (!(rep.alpha > rep.certificate.trace_W)) {
    std::ostringstream os;
    os << "alpha " << rep.alpha << " does not exceed tr(W) " << rep.certificate.trace_W
       << "; the penalty may not be exact";
    rep.warnings.push_back(os.str());
  }
  rep.solve_seconds = seconds_since(t0);
  return rep;
}

}  // namespace bpf
