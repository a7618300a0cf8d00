// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ctstl/app/commands.hpp"
#include "ctstl/app/io.hpp"
#include "ctstl/app/problem_file.hpp"
#include "ctstl/classic/semantics.hpp"
#include "ctstl/gmsr/operators.hpp"
#include "ctstl/gmsr/robustness.hpp"
#include "ctstl/qp/qp.hpp"
#include "ctstl/stl/parser.hpp"
#include "ctstl/transcription/transcription.hpp"
#include "json.hpp"
#include "support/qp_oracle.hpp"
#include "support/random_formula.hpp"

using namespace ctstl;
namespace fs = std::filesystem;
using Json = nlohmann::json;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const fs::path kProblem = fs::path(CTSTL_SOURCE_DIR) / "problems" / "quadrotor_charging.json";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

Json read_json(const fs::path& p) {
  std::ifstream in(p);
  return Json::parse(in);
}

// Shared output of criterion 1, reused by 2 and 8.
struct SolveRun {
  fs::path dir;
  int exit_code = -1;
  double seconds = 0.0;
};

SolveRun& solve_run() {
  static SolveRun run = [] {
    SolveRun r;
    std::random_device rd;
    r.dir = fs::temp_directory_path() / ("ctstl_acceptance_" + std::to_string(rd()));
    fs::create_directories(r.dir);
    app::SolveOptions opts;
    opts.problem_file = kProblem;
    opts.out_dir = r.dir;
    std::ostringstream out, err;
    const auto t0 = std::chrono::steady_clock::now();
    r.exit_code = app::run_solve(opts, out, err);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  }();
  return run;
}

Outcome quadrotor_solve() {
  const auto& run = solve_run();
  if (run.exit_code != app::kExitOk) return {false, fmt("solve exited with %d", run.exit_code)};
  const auto report = read_json(run.dir / "report.json");
  const int iters = report["iterations"].get<int>();
  const double dmax = report["defect_max"].get<double>();
  const double gamma = report["robustness"].get<double>();
  const bool pass = report["status"] == "converged" && iters <= 50 && dmax <= 1e-6 && gamma >= 0.0 &&
                    run.seconds <= 30.0;
  return {pass, fmt("iterations=%d defect_max=%.3g gamma=%.6g time=%.3fs", iters, dmax, gamma, run.seconds)};
}

// Re-checks the mission requirements directly on the exported samples.
Outcome semantic_post_check() {
  const auto& run = solve_run();
  if (!fs::exists(run.dir / "trajectory.csv")) return {false, "no trajectory"};
  const auto spec = app::load_problem(kProblem);
  std::ifstream in(run.dir / "trajectory.csv");
  const auto sig = app::read_signal_csv(in);
  const auto& k = spec.constants;
  const auto& ch = sig.channels();
  auto at = [&](std::size_t m, const char* name) { return sig.sample(m)[ch.index_of(name)]; };
  auto sq = [](double a, double b, double c) { return a * a + b * b + c * c; };

  std::optional<std::size_t> witness;
  for (std::size_t m = 0; m < sig.size() && !witness; ++m) {
    bool slow = true;
    for (std::size_t q = 0; q <= m && slow; ++q) slow = sq(at(q, "vx"), at(q, "vy"), at(q, "vz")) <= k.at("vsafe2");
    if (!slow) break;
    const double d = sq(at(m, "rx") - k.at("rcx"), at(m, "ry") - k.at("rcy"), at(m, "rz") - k.at("rcz"));
    if (d <= k.at("dc2")) witness = m;
  }
  double worst_speed = 0.0, worst_thrust = 0.0, worst_tilt = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < sig.size(); ++m) {
    worst_speed = std::max(worst_speed, std::sqrt(sq(at(m, "vx"), at(m, "vy"), at(m, "vz"))));
    worst_thrust = std::max(worst_thrust, std::sqrt(sq(at(m, "ux"), at(m, "uy"), at(m, "uz"))));
    worst_tilt = std::min(worst_tilt, k.at("cos2_tilt") * at(m, "uz") * at(m, "uz") -
                                          at(m, "ux") * at(m, "ux") - at(m, "uy") * at(m, "uy"));
  }
  const double tmax = k.at("Tmax");
  const bool pass = sig.size() == 41 && witness && worst_speed <= std::sqrt(k.at("vmax2")) &&
                    worst_thrust <= tmax && worst_tilt >= 0.0;
  return {pass, fmt("samples=%zu witness=%d max|v|=%.4f max|u|=%.4f (Tmax=%.4f) min tilt margin=%.4g",
                    sig.size(), witness ? static_cast<int>(*witness) : -1, worst_speed, worst_thrust, tmax,
                    worst_tilt)};
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

Outcome sign_exactness() {
  testing::FormulaGenerator gen(2024);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto samples = static_cast<std::size_t>(2 + gen.pick(19));
    const auto f = gen.formula(1 + gen.pick(3), static_cast<int>(samples) - 1);
    const auto sig = gen.signal(samples);
    const double smooth = gmsr::eval_robustness(f, sig, 0, gmsr::GmsrConfig{}).value;
    const double classical = classic::classical_robustness(f, sig, 0);
    if (sign(smooth) != sign(classical)) ++mismatches;
  }
  return {mismatches == 0, fmt("pairs=1000 mismatches=%d", mismatches)};
}

Outcome gradient_checks() {
  const auto spec = app::load_problem(kProblem);
  double worst = 0.0;
  for (int point = 0; point < 10; ++point) {
    const auto z = app::random_decision(spec, static_cast<std::uint64_t>(100 + point), false);
    worst = std::max(worst, app::check_gradients(spec, z, point).max_relative_error);
  }
  return {worst <= 1e-5, fmt("points=10 max relative error=%.3g", worst)};
}

// xdot = -x^2 with x(0) = 1, so x(1) = 1/2.
class Riccati final : public transcription::DynamicsModel {
 public:
  std::string_view id() const override { return "riccati"; }
  std::size_t state_dim() const override { return 1; }
  std::size_t control_dim() const override { return 1; }
  std::vector<std::string> state_names() const override { return {"x"}; }
  std::vector<std::string> control_names() const override { return {"u"}; }
  VectorXd rhs(double, const VectorXd& x, const VectorXd&) const override {
    return VectorXd::Constant(1, -x(0) * x(0));
  }
  void jacobians(double, const VectorXd& x, const VectorXd&, MatrixXd& fx, MatrixXd& fu) const override {
    fx = MatrixXd::Constant(1, 1, -2.0 * x(0));
    fu = MatrixXd::Zero(1, 1);
  }
};

Outcome rk4_order() {
  Riccati model;
  std::vector<double> errors;
  for (std::size_t n : {10u, 20u, 40u}) {
    const transcription::GridSpec grid{2, n, 1.0};
    const auto flow = transcription::flow_map(model, VectorXd::Ones(1), VectorXd::Zero(1), VectorXd::Zero(1), 0, grid);
    errors.push_back(std::abs(flow.state(0) - 0.5));
  }
  const double p1 = std::log2(errors[0] / errors[1]);
  const double p2 = std::log2(errors[1] / errors[2]);
  return {p1 >= 3.8 && p2 >= 3.8, fmt("observed orders %.3f %.3f", p1, p2)};
}

Outcome qp_against_oracle() {
  std::mt19937_64 rng(606);
  double worst_z = 0.0, worst_kkt = 0.0;
  int not_optimal = 0;
  for (int i = 0; i < 50; ++i) {
    const auto qp = testing::random_strictly_convex_qp(rng, 8, 5);
    const auto oracle = testing::enumerate_active_sets(qp);
    const auto sol = qp::solve_qp(qp);
    if (!oracle || sol.status != qp::QpStatus::Optimal) {
      ++not_optimal;
      continue;
    }
    worst_z = std::max(worst_z, (sol.z - oracle->z).lpNorm<Eigen::Infinity>() /
                                    (1.0 + oracle->z.lpNorm<Eigen::Infinity>()));
    worst_kkt = std::max(worst_kkt, sol.residuals.max());
  }
  return {not_optimal == 0 && worst_z <= 1e-6 && worst_kkt <= 1e-8,
          fmt("instances=50 non-optimal=%d max solution error=%.3g max KKT residual=%.3g", not_optimal,
              worst_z, worst_kkt)};
}

// True when |g| strictly decreases (inverse) or increases with |y|.
bool ordered(const std::vector<double>& y, const std::vector<double>& g, bool inverse) {
  std::vector<std::size_t> idx(y.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return std::abs(y[a]) < std::abs(y[b]); });
  for (std::size_t k = 1; k < idx.size(); ++k) {
    const double prev = std::abs(g[idx[k - 1]]), cur = std::abs(g[idx[k]]);
    if (inverse ? !(prev > cur) : !(prev < cur)) return false;
  }
  return std::all_of(g.begin(), g.end(), [](double v) { return v > 0.0; });
}

Outcome gradient_ordering() {
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> mag(0.01, 5.0);
  int failures = 0;
  for (int i = 0; i < 100; ++i) {
    const auto n = static_cast<std::size_t>(2 + rng() % 11);
    std::vector<double> pos(n), neg(n);
    for (auto& v : pos) v = mag(rng);
    for (auto& v : neg) v = -mag(rng);
    // Conjunction favours the weakest satisfied and the most violated entry;
    // disjunction the strongest satisfied and the least violated one.
    if (!ordered(pos, gmsr::gmsr_and(pos, 0.005).gradient, true)) ++failures;
    if (!ordered(neg, gmsr::gmsr_and(neg, 0.005).gradient, false)) ++failures;
    if (!ordered(pos, gmsr::gmsr_or(pos, 0.005).gradient, false)) ++failures;
    if (!ordered(neg, gmsr::gmsr_or(neg, 0.005).gradient, true)) ++failures;
  }
  return {failures == 0, fmt("vectors=100 positive + 100 negative, failures=%d", failures)};
}

Outcome monitor_round_trip() {
  const auto& run = solve_run();
  if (!fs::exists(run.dir / "robustness.json")) return {false, "no solve output"};
  const auto rob = read_json(run.dir / "robustness.json");
  app::MonitorOptions opts;
  opts.signal_file = run.dir / "trajectory.csv";
  opts.problem_file = kProblem;
  opts.out_file = run.dir / "monitor.json";
  std::ostringstream out, err;
  const int code = app::run_monitor(opts, out, err);
  if (code != app::kExitOk) return {false, fmt("monitor exited with %d", code)};
  const auto mon = read_json(*opts.out_file);
  const double g_solve = rob["gamma"].get<double>();
  const double g_mon = mon["gamma"].get<double>();
  const bool pass = sign(g_solve) == sign(g_mon) && rob["satisfied"] == mon["verdict"] &&
                    sign(rob["classical"].get<double>()) == sign(mon["classical"].get<double>());
  return {pass, fmt("solve gamma=%.17g monitor gamma=%.17g", g_solve, g_mon)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"quadrotor solve converges with a satisfying trajectory", quadrotor_solve},
      {"mission requirements hold on every dense sample", semantic_post_check},
      {"smooth and classical robustness agree in sign", sign_exactness},
      {"analytic gradients match central differences", gradient_checks},
      {"RK4 converges with fourth order", rk4_order},
      {"QP solutions match active-set enumeration", qp_against_oracle},
      {"aggregator gradients are ordered", gradient_ordering},
      {"monitor reproduces the solve robustness sign", monitor_round_trip},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("criterion %zu %s: %s (%s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str());
  }
  std::error_code ec;
  fs::remove_all(solve_run().dir, ec);
  return failed == 0 ? 0 : 1;
}
