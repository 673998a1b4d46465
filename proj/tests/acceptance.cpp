// Acceptance checks, one PASS/FAIL line per criterion. Exit status is
// nonzero when any hard criterion fails; criterion 9 is reported only.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "bpf/bundle.hpp"
#include "bpf/cli.hpp"
#include "bpf/lanczos.hpp"
#include "bpf/oracle.hpp"
#include "bpf/report.hpp"
#include "support/instances.hpp"

using namespace bpf;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kAdjointTol = 1e-10;
constexpr double kAdjointBTol = 1e-14;  // rounding only: both sides sum the same products
constexpr double kAdjointTimeLimit = 10.0;
constexpr double kProxObjTol = 1e-8;
constexpr double kProxKktTol = 1e-8;
constexpr double kProxTimeLimit = 60.0;
constexpr double kMonotoneTol = 1e-12;
constexpr double kLanczosTol = 1e-9;
constexpr double kEpsStop = 1e-5;
constexpr double kSlackTol = 1e-6;
constexpr double kBlockTol = 1e-6;
constexpr double kCompTol = 1e-6;
constexpr double kGapTol = 1e-4;
constexpr double kEndToEndTimeLimit = 30.0;
constexpr double kInfeasibleSlack = 1e-3;
constexpr double kDeltaFloor = 1e-12;
constexpr double kCutTol = 1e-9;
constexpr double kCrossTol = 1e-3;
constexpr double kScalingFactor = 8.0;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int hard_failures = 0;

void report(int id, const std::string& name, const Outcome& o, bool soft = false) {
  std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << (soft ? " (soft)" : "")
            << "  " << name << " | " << o.detail << std::endl;
  if (!o.pass && !soft) ++hard_failures;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// -- 1 --------------------------------------------------------------------

Outcome adjoint_suite() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> size(2, 30);
  double worst_a = 0.0, worst_b = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int n = size(rng);
    const NetworkData d = synth_radial(n, 1000 + t);
    const ComplexCsr Y = assemble_admittance(d.network, CsrPattern::from_network(d.network));
    const DualPoint x = testing::random_dual_point(n, 1.0, rng);
    const ComplexVector v = testing::random_complex(3 * n, rng);
    const double lhs = x.y.dot(apply_A_rank1(Y, v));
    const double rhs = v.dot(apply_A_star(Y, x.y) * v).real();
    worst_a = std::max(worst_a, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));
    const Eigen::Vector3cd vh = v.head<3>();
    const double lb = trace_product(x.gamma, vh * vh.adjoint());
    const double rb = v.dot(apply_B_star(Y.pattern, x.gamma) * v).real();
    worst_b = std::max(worst_b, std::abs(lb - rb) / (1.0 + std::abs(lb)));
  }
  const double secs = since(t0);
  return {worst_a <= kAdjointTol && worst_b <= kAdjointBTol && secs < kAdjointTimeLimit,
          "max scaled A error " + fmt(worst_a) + ", B error " + fmt(worst_b) + ", " + fmt(secs) + " s"};
}

// -- 2, 3 -------------------------------------------------------------------

Outcome prox_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  double worst_obj = 0.0, worst_kkt = 0.0;
  int counts[3] = {0, 0, 0};
  for (int t = 0; t < 1000; ++t) {
    testing::RandomProx rp = testing::random_prox(1 + t % 3, rng);
    if (t % 2 == 0) {
      for (int k = 1; k < 3; ++k) rp.cuts[k].slope = rp.cuts[0].slope + 0.05 * rp.cuts[k].slope;
    }
    const ProxProblem p = rp.problem();
    const ProxSolution s = solve_prox(p);
    const oracle::QpResult q = oracle::qp_support_enumeration(p);
    worst_obj = std::max(worst_obj, std::abs(s.objective - q.objective));
    worst_kkt = std::max(worst_kkt, kkt_residual(p, s.trial, s.weights));
    counts[static_cast<int>(s.case_used)]++;
  }
  const double secs = since(t0);
  return {worst_obj <= kProxObjTol && worst_kkt <= kProxKktTol && secs < kProxTimeLimit,
          "max |obj - oracle| " + fmt(worst_obj) + ", max KKT " + fmt(worst_kkt) + ", cases v/e/i " +
              std::to_string(counts[0]) + "/" + std::to_string(counts[1]) + "/" +
              std::to_string(counts[2]) + ", " + fmt(secs) + " s"};
}

Outcome edge_monotonicity() {
  std::mt19937_64 rng(303);
  const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  double worst = 0.0;
  for (int e = 0; e < 500; ++e) {
    const testing::RandomProx rp = testing::random_prox(1 + e % 4, rng);
    const ProxProblem p = rp.problem();
    const int i = pairs[e % 3][0], j = pairs[e % 3][1];
    std::vector<double> phi(1001);
    for (int k = 0; k <= 1000; ++k) phi[k] = edge_phi(p, i, j, k / 1000.0);
    const double scale = 1.0 + std::max(std::abs(phi.front()), std::abs(phi.back()));
    for (int k = 1; k <= 1000; ++k) worst = std::max(worst, (phi[k] - phi[k - 1]) / scale);
  }
  return {worst <= kMonotoneTol, "largest scaled increase " + fmt(worst) + " over 500 edges"};
}

// -- 4 --------------------------------------------------------------------

Outcome lanczos_vs_dense() {
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<int> size(1, 300);
  double worst_val = 0.0, worst_res = 0.0;
  int unconverged = 0;
  for (int t = 0; t < 200; ++t) {
    const int n = size(rng);
    const Eigen::MatrixXcd a = testing::random_hermitian(n, rng);
    HermitianOperator op = [&a](std::span<const cplx> x, std::span<cplx> y) {
      Eigen::Map<const ComplexVector> xv(x.data(), static_cast<Eigen::Index>(x.size()));
      Eigen::Map<ComplexVector> yv(y.data(), static_cast<Eigen::Index>(y.size()));
      yv.noalias() = a * xv;
    };
    LanczosOptions opt;
    opt.seed = static_cast<std::uint64_t>(t);
    const LanczosResult r = lanczos_largest(n, op, opt);
    if (!r.converged) ++unconverged;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a, Eigen::EigenvaluesOnly);
    worst_val = std::max(worst_val, std::abs(r.values[0] - es.eigenvalues()[n - 1]));
    worst_res = std::max(worst_res, (a * r.vectors[0] - r.values[0] * r.vectors[0]).norm());
  }
  return {worst_val <= kLanczosTol && worst_res <= kLanczosTol && unconverged == 0,
          "max value error " + fmt(worst_val) + ", max residual " + fmt(worst_res) + ", unconverged " +
              std::to_string(unconverged)};
}

// -- 5 --------------------------------------------------------------------

Outcome end_to_end_feasible() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::ostringstream os;
  for (int n : {2, 10}) {
    const testing::PlantedInstance inst = testing::planted_feasible(n, 1);
    SolverConfig cfg;
    const PenaltyObjective p = make_problem(inst.data, inst.u, cfg);
    const SolveReport r = solve(p, cfg);
    const PrimalCertificate& c = r.certificate;
    const double delta = r.state.history.empty() ? INFINITY : r.state.history.back().delta;
    const double gap = std::abs(r.f_star + c.primal_value) / (1.0 + std::abs(r.f_star));
    const bool pass = r.converged && delta <= kEpsStop && c.verdict == Verdict::feasible &&
                      c.slack_total <= kSlackTol && c.slack_block_residual <= kBlockTol &&
                      c.complementarity_residual <= kCompTol * c.h_norm && gap <= kGapTol;
    ok = ok && pass;
    os << n << "-bus: " << to_string(c.verdict) << ", delta " << fmt(delta) << ", slack "
       << fmt(c.slack_total) << ", block " << fmt(c.slack_block_residual) << ", comp/|H| "
       << fmt(c.complementarity_residual / c.h_norm) << ", gap " << fmt(gap) << "; ";
  }
  const double secs = since(t0);
  os << fmt(secs) << " s";
  return {ok && secs < kEndToEndTimeLimit, os.str()};
}

// -- 6 --------------------------------------------------------------------

fs::path tmp_dir() {
  const char* env = std::getenv("BPF_TEST_TMP");
  fs::path d = env ? fs::path(env) : fs::temp_directory_path() / "bpf_acceptance";
  fs::create_directories(d);
  return d;
}

Outcome end_to_end_infeasible() {
  const testing::PlantedInstance inst = testing::planted_infeasible(2, 1);
  const fs::path dir = tmp_dir();
  save_network(dir / "shrunk.json", inst.data);
  save_injection(dir / "shrunk_u.json", inst.u);
  std::ostringstream out, err;
  const int code = cli::run({"assess", "--network", (dir / "shrunk.json").string(), "--injection",
                             (dir / "shrunk_u.json").string(), "--report",
                             (dir / "shrunk_report.json").string()},
                            out, err);
  double slack = 0.0;
  if (fs::exists(dir / "shrunk_report.json")) {
    slack = read_report((dir / "shrunk_report.json").string())["certificate"]["slack_total"].get<double>();
  }
  return {code == cli::kInfeasibleOrUndecided && slack > kInfeasibleSlack,
          "exit " + std::to_string(code) + ", slack_total " + fmt(slack)};
}

// -- 7 --------------------------------------------------------------------

struct InvariantStats {
  double worst_delta = 0.0;   // most negative scaled Delta
  int bad_serious = 0;
  double worst_cut = -INFINITY;  // largest scaled l_i(x) - f(x)
  int runs = 0;
};

void check_run(const PenaltyObjective& p, const SolverConfig& cfg, std::uint64_t seed,
               InvariantStats& st) {
  std::mt19937_64 rng(seed);
  BundleState s = init_state(p, cfg);
  auto sample_cuts = [&] {
    for (int t = 0; t < 100; ++t) {
      DualPoint x = testing::random_dual_point(p.n_buses(), cfg.beta, rng);
      x.gamma *= 0.1;
      const double f = eval_f(p, x, cfg.eig);
      for (const Cut& c : s.cuts) st.worst_cut = std::max(st.worst_cut, (c(x) - f) / (1.0 + std::abs(f)));
    }
  };
  for (int k = 0; k < cfg.max_iters; ++k) {
    const double f_before = s.f_center;
    const IterationRecord r = step(p, cfg, s);
    st.worst_delta = std::min(st.worst_delta, r.delta / (1.0 + std::abs(f_before)));
    if (r.kind == StepKind::stop) break;
    if (r.kind == StepKind::serious && !(s.f_center <= f_before - cfg.eta * r.delta && s.f_center < f_before)) {
      ++st.bad_serious;
    }
    for (const Cut& c : s.cuts) {
      st.worst_cut = std::max(st.worst_cut, (c(s.center) - s.f_center) / (1.0 + std::abs(s.f_center)));
    }
    if (k % 50 == 0) sample_cuts();
  }
  sample_cuts();
  ++st.runs;
}

Outcome bundle_invariants() {
  InvariantStats st;
  SolverConfig cfg;
  const std::vector<testing::PlantedInstance> insts = {
      testing::planted_feasible(2, 1), testing::planted_feasible(10, 1), testing::planted_infeasible(2, 1),
      testing::planted_feasible(5, 7, 0.3), testing::planted_infeasible(6, 3)};
  std::uint64_t seed = 700;
  for (const auto& inst : insts) check_run(make_problem(inst.data, inst.u, cfg), cfg, seed++, st);
  NetworkData flat = synth_radial(12, 8);
  check_run(make_problem(std::move(flat), RealVector::Zero(36), cfg), cfg, seed++, st);
  return {st.worst_delta >= -kDeltaFloor && st.bad_serious == 0 && st.worst_cut <= kCutTol,
          std::to_string(st.runs) + " runs, min scaled delta " + fmt(st.worst_delta) +
              ", bad serious steps " + std::to_string(st.bad_serious) + ", max scaled cut excess " +
              fmt(st.worst_cut)};
}

// -- 8 --------------------------------------------------------------------

Outcome cross_method() {
  bool ok = true;
  std::ostringstream os;
  const std::vector<std::pair<std::string, testing::PlantedInstance>> insts = {
      {"2-bus", testing::planted_feasible(2, 1)},
      {"4-bus", testing::planted_feasible(4, 2)},
      {"2-bus infeasible", testing::planted_infeasible(2, 1)}};
  for (const auto& [name, inst] : insts) {
    SolverConfig cfg;
    const PenaltyObjective p = make_problem(inst.data, inst.u, cfg);
    const SolveReport r = solve(p, cfg);
    const oracle::SubgradientRun ref = oracle::projected_subgradient_reference(p, 100000, 0.01);
    const bool pass = r.f_star <= ref.best_f + kCrossTol;
    ok = ok && pass;
    os << name << ": bundle " << fmt(r.f_star) << " vs subgradient " << fmt(ref.best_f) << "; ";
  }
  return {ok, os.str()};
}

// -- 9 --------------------------------------------------------------------

Outcome scaling() {
  const NetworkData base = synth_radial(124, 0);
  SolverConfig cfg;
  cfg.max_iters = 50;
  auto mean_prox = [&](int k) {
    NetworkData d = replicate_feeder(base, k);
    const int dim = d.network.dim();
    return solve(make_problem(std::move(d), RealVector::Zero(dim), cfg), cfg).mean_prox_seconds;
  };
  const double t1 = mean_prox(1), t10 = mean_prox(10);
  const double ratio = t10 / t1;
  return {ratio <= kScalingFactor, "mean prox time k=1 " + fmt(t1) + " s, k=10 " + fmt(t10) +
                                       " s, ratio " + fmt(ratio)};
}

}  // namespace

int main() {
  std::cout << "threads: " << kernels::max_threads() << std::endl;
  report(1, "adjoint identities", adjoint_suite());
  report(2, "prox subproblem vs support enumeration", prox_equivalence());
  report(3, "edge function monotone", edge_monotonicity());
  report(4, "Lanczos vs dense eigendecomposition", lanczos_vs_dense());
  report(5, "end-to-end feasible instances", end_to_end_feasible());
  report(6, "end-to-end infeasible instance", end_to_end_infeasible());
  report(7, "bundle invariants", bundle_invariants());
  report(8, "bundle vs projected subgradient", cross_method());
  report(9, "prox time scaling k=1 to k=10", scaling(), true);
  std::cout << (hard_failures == 0 ? "all hard criteria pass" : std::to_string(hard_failures) + " hard criteria fail")
            << std::endl;
  return hard_failures == 0 ? 0 : 1;
}
