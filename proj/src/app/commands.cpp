#include "ctstl/app/commands.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>

#include "ctstl/app/io.hpp"
#include "ctstl/classic/semantics.hpp"
#include "ctstl/gmsr/robustness.hpp"
#include "ctstl/stl/parser.hpp"
#include "json.hpp"

namespace ctstl::app {

namespace {

using Json = nlohmann::ordered_json;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("failed writing " + path.string());
}

Json nullable(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json iteration_json(const scp::IterationRecord& r) {
  Json j;
  j["iteration"] = r.iteration;
  j["penalty"] = r.penalty;
  j["defect_l1"] = r.defect_l1;
  j["robustness"] = r.robustness;
  j["step_norm"] = r.step_norm;
  j["w_ptr"] = r.w_ptr;
  j["ratio"] = r.ratio;
  j["accepted"] = r.accepted;
  j["qp_status"] = std::string(qp::to_string(r.qp_status));
  j["qp_iterations"] = r.qp_iterations;
  j["subproblem_ms"] = r.subproblem_ms;
  j["discretization_ms"] = r.discretization_ms;
  return j;
}

std::vector<double> column(const transcription::DenseTrajectory& traj,
                           const stl::ChannelSet& channels, const std::string& name) {
  const std::size_t idx = channels.index_of(name);
  const auto n = static_cast<std::size_t>(traj.states.cols());
  std::vector<double> out(traj.size());
  for (std::size_t s = 0; s < traj.size(); ++s) {
    const auto row = static_cast<Eigen::Index>(s);
    out[s] = idx < n ? traj.states(row, static_cast<Eigen::Index>(idx))
                     : traj.controls(row, static_cast<Eigen::Index>(idx - n));
  }
  return out;
}

void write_plots(const ProblemSpec& spec, const transcription::DenseTrajectory& traj,
                 const std::filesystem::path& dir) {
  const auto channels = spec.problem.model->channels();
  if (spec.plots.path) {
    const auto& p = *spec.plots.path;
    Plot plot;
    plot.title = "Path";
    plot.x_label = p.x;
    plot.y_label = p.y;
    plot.equal_aspect = true;
    plot.markers = true;
    plot.series.push_back({column(traj, channels, p.x), column(traj, channels, p.y), "trajectory"});
    if (p.circle_center) {
      plot.circles.push_back({(*p.circle_center)[0], (*p.circle_center)[1], p.circle_radius,
                              "target region"});
    }
    write_text(dir / "path.svg", render_svg(plot));
  }
  if (spec.plots.speed) {
    const auto& p = *spec.plots.speed;
    std::vector<double> speed(traj.size(), 0.0);
    for (const auto& name : p.channels) {
      const auto v = column(traj, channels, name);
      for (std::size_t s = 0; s < speed.size(); ++s) speed[s] += v[s] * v[s];
    }
    for (double& v : speed) v = std::sqrt(v);
    Plot plot;
    plot.title = "Speed";
    plot.x_label = "t";
    plot.y_label = "speed";
    plot.markers = true;
    plot.series.push_back({traj.times, speed, "|v|"});
    const char* colors[] = {"#ff7f0e", "#d62728", "#9467bd"};
    for (std::size_t i = 0; i < p.limits.size(); ++i) {
      plot.lines.push_back({p.limits[i], "limit " + stl::format_number(p.limits[i]), colors[i % 3]});
    }
    write_text(dir / "speed.svg", render_svg(plot));
  }
  if (spec.plots.margin) {
    const auto& p = *spec.plots.margin;
    std::vector<double> dist2(traj.size(), 0.0);
    for (std::size_t c = 0; c < p.channels.size(); ++c) {
      const auto v = column(traj, channels, p.channels[c]);
      for (std::size_t s = 0; s < dist2.size(); ++s) {
        dist2[s] += (v[s] - p.center[c]) * (v[s] - p.center[c]);
      }
    }
    std::vector<double> margin(traj.size());
    for (std::size_t s = 0; s < margin.size(); ++s) margin[s] = p.radius - std::sqrt(dist2[s]);
    Plot plot;
    plot.title = "Signed margin to target region";
    plot.x_label = "t";
    plot.y_label = "radius - distance";
    plot.markers = true;
    plot.series.push_back({traj.times, margin, "margin"});
    plot.lines.push_back({0.0, "boundary", "#7f7f7f"});
    write_text(dir / "margin.svg", render_svg(plot));
  }
}

Json robustness_json(const stl::Formula& f, const stl::SampledSignal& signal,
                     const gmsr::GmsrConfig& cfg) {
  auto entry = [&](const stl::Formula& g) {
    Json j;
    j["formula"] = stl::format_formula(g);
    const double gamma = gmsr::eval_robustness(g, signal, 0, cfg).value;
    j["gamma"] = gamma;
    j["classical"] = classic::classical_robustness(g, signal, 0);
    j["satisfied"] = gamma >= 0.0;
    return j;
  };
  Json j = entry(f);
  j["sample"] = 0;
  j["time"] = signal.times()[0];
  j["c"] = {{"c", cfg.c}, {"until_pair_c", cfg.until_pair_c}, {"until_prefix_c", cfg.until_prefix_c}};
  Json subs = Json::array();
  for (const auto& child : f.operands()) subs.push_back(entry(child));
  j["subformulas"] = subs;
  return j;
}

void apply_c(gmsr::GmsrConfig& cfg, double c) { cfg = gmsr::GmsrConfig::uniform(c); }

}  // namespace

int run_solve(const SolveOptions& options, std::ostream& out, std::ostream& err) {
  ProblemSpec spec;
  try {
    spec = load_problem(options.problem_file);
    if (options.max_iterations) spec.prox.max_iterations = *options.max_iterations;
    if (options.w_dyn) spec.penalty.w_dyn = *options.w_dyn;
    if (options.w_stl) spec.penalty.w_stl = *options.w_stl;
    if (options.c) {
      apply_c(spec.gmsr, *options.c);
      spec.problem.gmsr = spec.gmsr;
    }
    spec.prox.validate();
    spec.penalty.validate();
    spec.problem.validate();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }

  try {
    std::filesystem::create_directories(options.out_dir);
    // Silent unless the caller registered a "ctstl" logger.
    const auto log = spdlog::get("ctstl");
    if (log) {
      log->info("solving '{}' (K={}, N={}, tf={})", spec.name, spec.grid.K, spec.grid.N, spec.grid.tf);
    }
    const auto result = scp::prox_convex_solve(spec.problem, spec.penalty, spec.prox);
    const auto& report = result.report;
    if (log) {
      for (const auto& r : report.iterations) {
        log->info("iter {:3d} J={:.6e} defect={:.3e} gamma={:.6e} step={:.3e} w={:.3e} {}", r.iteration,
                  r.penalty, r.defect_l1, r.robustness, r.step_norm, r.w_ptr,
                  r.accepted ? "accepted" : "rejected");
        log->debug("  ratio={:.4f} qp={} ({} it) subproblem={:.3f} ms discretization={:.3f} ms", r.ratio,
                   qp::to_string(r.qp_status), r.qp_iterations, r.subproblem_ms, r.discretization_ms);
      }
    }

    const auto channels = spec.problem.model->channels();
    {
      std::ofstream csv(options.out_dir / "trajectory.csv", std::ios::binary);
      if (!csv) throw Error("cannot write trajectory.csv");
      write_trajectory_csv(csv, result.trajectory, channels);
    }

    Json rep;
    rep["problem"] = spec.name;
    rep["status"] = std::string(scp::to_string(report.status));
    rep["iterations"] = report.iterations.size();
    rep["penalty"] = report.penalty;
    rep["defect_max"] = report.defect_max;
    rep["robustness"] = report.robustness;
    rep["settings"] = {{"w_dyn", spec.penalty.w_dyn},
                       {"w_stl", spec.penalty.w_stl},
                       {"robustness_margin", spec.penalty.robustness_margin},
                       {"c", spec.gmsr.c},
                       {"max_iterations", spec.prox.max_iterations},
                       {"eps_pen", spec.prox.eps_pen},
                       {"eps_stat", spec.prox.eps_stat}};
    Json records = Json::array();
    for (const auto& r : report.iterations) records.push_back(iteration_json(r));
    rep["records"] = records;
    write_text(options.out_dir / "report.json", rep.dump(2) + "\n");

    if (spec.problem.formula) {
      const auto signal = result.trajectory.signal(channels);
      write_text(options.out_dir / "robustness.json",
                 robustness_json(*spec.problem.formula, signal, spec.gmsr).dump(2) + "\n");
    }
    write_plots(spec, result.trajectory, options.out_dir);

    out << "status=" << scp::to_string(report.status) << " iterations=" << report.iterations.size()
        << " penalty=" << format_double(report.penalty)
        << " defect_max=" << format_double(report.defect_max)
        << " robustness=" << format_double(report.robustness) << '\n';
    return report.status == scp::SolveStatus::Converged ? kExitOk : kExitFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

namespace {

bool signs_disagree(double smooth, double classical) {
  return std::abs(classical) > 1e-9 && (smooth > 0.0) != (classical > 0.0);
}

Json trace_json(const stl::Formula& f, const stl::SampledSignal& signal,
                const gmsr::GmsrConfig& cfg, bool flip, bool& mismatch) {
  const auto smooth = gmsr::robustness_trace(f, signal, cfg);
  Json gm = Json::array();
  Json cl = Json::array();
  for (std::size_t ell = 0; ell < signal.size(); ++ell) {
    std::optional<double> classical;
    try {
      classical = classic::classical_robustness(f, signal, ell);
    } catch (const GridError&) {
    }
    std::optional<double> s = smooth[ell];
    if (s && flip) s = -*s;
    if (s && classical && signs_disagree(*s, *classical)) mismatch = true;
    gm.push_back(nullable(s));
    cl.push_back(nullable(classical));
  }
  Json j;
  j["formula"] = stl::format_formula(f);
  j["gmsr"] = gm;
  j["classical"] = cl;
  return j;
}

void collect_witnesses(const stl::Formula& f, const stl::SampledSignal& signal, Json& out) {
  using K = stl::Formula::Kind;
  if (f.kind() != K::Eventually && f.kind() != K::Until) return;
  Json j;
  j["formula"] = stl::format_formula(f);
  std::optional<std::size_t> w;
  try {
    w = classic::witness(f, signal, 0);
  } catch (const GridError&) {
  }
  if (w) {
    j["sample"] = *w;
    j["time"] = signal.times()[*w];
  } else {
    j["sample"] = nullptr;
    j["time"] = nullptr;
  }
  out.push_back(j);
}

}  // namespace

int run_monitor(const MonitorOptions& options, std::ostream& out, std::ostream& err) {
  try {
    stl::SampledSignal signal;
    {
      std::ifstream in(options.signal_file, std::ios::binary);
      if (!in) throw CsvError("cannot open " + options.signal_file.string());
      signal = read_signal_csv(in);
    }

    stl::ConstantTable constants;
    gmsr::GmsrConfig cfg;
    std::optional<std::string> formula_text = options.formula;
    if (options.problem_file) {
      const auto spec = load_problem(*options.problem_file);
      constants = spec.constants;
      cfg = spec.gmsr;
      if (!formula_text) {
        if (spec.formula_text.empty()) throw SchemaError("$.formula: problem has no formula");
        formula_text = spec.formula_text;
      }
    }
    for (const auto& def : options.constants) {
      const auto eq = def.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw SchemaError("constant '" + def + "' must have the form name=value");
      }
      const auto expr = stl::parse_expression(def.substr(eq + 1), {}, constants);
      constants[def.substr(0, eq)] = expr.evaluate(std::span<const double>{});
    }
    if (options.c) apply_c(cfg, *options.c);
    cfg.validate();
    if (!formula_text) throw SchemaError("no formula given (use --formula or --problem)");

    const auto formula = stl::parse_formula(*formula_text, signal.channels(), constants);

    double gamma = gmsr::eval_robustness(formula, signal, 0, cfg).value;
    if (options.flip_smooth_sign) gamma = -gamma;
    const double classical = classic::classical_robustness(formula, signal, 0);
    const bool verdict = classic::boolean_satisfaction(formula, signal, 0);

    bool mismatch = signs_disagree(gamma, classical);
    Json traces = Json::array();
    traces.push_back(trace_json(formula, signal, cfg, options.flip_smooth_sign, mismatch));
    for (const auto& child : formula.operands()) {
      traces.push_back(trace_json(child, signal, cfg, options.flip_smooth_sign, mismatch));
    }
    Json witnesses = Json::array();
    collect_witnesses(formula, signal, witnesses);
    for (const auto& child : formula.operands()) collect_witnesses(child, signal, witnesses);

    Json rep;
    rep["formula"] = stl::format_formula(formula);
    rep["samples"] = signal.size();
    rep["c"] = cfg.c;
    rep["gamma"] = gamma;
    rep["classical"] = classical;
    rep["verdict"] = verdict;
    rep["witnesses"] = witnesses;
    rep["traces"] = traces;
    const std::string text = rep.dump(2) + "\n";
    if (options.out_file) {
      write_text(*options.out_file, text);
      out << "gamma=" << format_double(gamma) << " classical=" << format_double(classical)
          << " verdict=" << (verdict ? "true" : "false") << '\n';
    } else {
      out << text;
    }
    if (mismatch) {
      err << "error: smooth and classical robustness disagree in sign\n";
      return kExitSignMismatch;
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
}

double relative_error(const MatrixXd& a, const MatrixXd& b) {
  const double scale = std::max(a.lpNorm<Eigen::Infinity>(), b.lpNorm<Eigen::Infinity>());
  if (scale == 0.0) return 0.0;
  return (a - b).lpNorm<Eigen::Infinity>() / scale;
}

namespace {

double step_for(double v) { return 1e-6 * (1.0 + std::abs(v)); }

double gamma_at(const ProblemSpec& spec, const VectorXd& z) {
  const auto traj = transcription::build_dense_trajectory(*spec.problem.model, z, spec.grid);
  const auto signal = traj.signal(spec.problem.model->channels());
  return gmsr::eval_robustness(*spec.problem.formula, signal, 0, spec.gmsr).value;
}

}  // namespace

GradientCheckReport check_gradients(const ProblemSpec& spec, const VectorXd& z, int point,
                                    const GradientCheckHooks& hooks) {
  GradientCheckReport report;
  auto record = [&](const char* suite, double e) {
    report.entries.push_back({suite, point, e});
    report.max_relative_error = std::max(report.max_relative_error, e);
  };
  const auto& model = *spec.problem.model;
  const auto layout = spec.problem.layout();
  const auto traj = transcription::build_dense_trajectory(model, z, spec.grid);

  if (spec.problem.formula) {
    const auto& f = *spec.problem.formula;
    const auto signal = traj.signal(model.channels());
    const auto res = gmsr::eval_robustness(f, signal, 0, spec.gmsr);

    // Derivative with respect to the samples themselves.
    std::vector<double> values(signal.values().begin(), signal.values().end());
    VectorXd fd(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double h = step_for(values[i]);
      auto shifted = [&](double delta) {
        auto v = values;
        v[i] += delta;
        const std::vector<double> t(signal.times().begin(), signal.times().end());
        return gmsr::eval_robustness(f, stl::SampledSignal(signal.channels(), t, std::move(v)), 0,
                                     spec.gmsr)
            .value;
      };
      fd(static_cast<Eigen::Index>(i)) = (shifted(h) - shifted(-h)) / (2.0 * h);
    }
    const Eigen::Map<const VectorXd> an(res.gradient.data(),
                                        static_cast<Eigen::Index>(res.gradient.size()));
    record("robustness/samples", relative_error(an, fd));

    // Through the dense trajectory to Z.
    const VectorXd gz = traj.pull_back(res.gradient, layout);
    VectorXd fdz(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double h = step_for(z(i));
      VectorXd zp = z, zm = z;
      zp(i) += h;
      zm(i) -= h;
      fdz(i) = (gamma_at(spec, zp) - gamma_at(spec, zm)) / (2.0 * h);
    }
    record("robustness/decision", relative_error(gz, fdz));
  }

  const auto n = static_cast<Eigen::Index>(model.state_dim());
  const auto m = static_cast<Eigen::Index>(model.control_dim());
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < spec.grid.K; ++k) {
    VectorXd arg(n + 2 * m);
    arg << layout.state(z, k), layout.control(z, k), layout.control(z, k + 1);
    auto flow = [&](const VectorXd& a) {
      return transcription::flow_map(model, a.head(n), a.segment(n, m), a.tail(m), k, spec.grid);
    };
    MatrixXd analytic = flow(arg).jacobian;
    if (hooks.corrupt_flow_jacobian) hooks.corrupt_flow_jacobian(analytic);
    MatrixXd fd(n, arg.size());
    for (Eigen::Index i = 0; i < arg.size(); ++i) {
      const double h = step_for(arg(i));
      VectorXd ap = arg, am = arg;
      ap(i) += h;
      am(i) -= h;
      fd.col(i) = (flow(ap).state - flow(am).state) / (2.0 * h);
    }
    worst = std::max(worst, relative_error(analytic, fd));
  }
  record("flow-map jacobian", worst);
  return report;
}

VectorXd random_decision(const ProblemSpec& spec, std::uint64_t seed, bool zero_controls) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto layout = spec.problem.layout();
  const VectorXd base = scp::initial_guess(spec.problem);
  const auto controls_begin = static_cast<Eigen::Index>(layout.control_offset(0));
  VectorXd z = base;
  for (int attempt = 0; attempt < 200; ++attempt) {
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      z(i) = base(i) + 0.2 * (1.0 + std::abs(base(i))) * normal(rng);
    }
    if (zero_controls) z.tail(z.size() - controls_begin).setZero();
    if (!spec.problem.formula || zero_controls) return z;
    const auto traj = transcription::build_dense_trajectory(*spec.problem.model, z, spec.grid);
    const auto signal = traj.signal(spec.problem.model->channels());
    if (gmsr::eval_robustness(*spec.problem.formula, signal, 0, spec.gmsr).kink_margin > 1e-3) {
      return z;
    }
  }
  throw Error("could not sample a decision vector away from kinks");
}

int run_check_grad(const CheckGradOptions& options, std::ostream& out, std::ostream& err) {
  ProblemSpec spec;
  try {
    spec = load_problem(options.problem_file);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  try {
    double worst = 0.0;
    for (int p = 0; p < options.points; ++p) {
      const auto z = random_decision(spec, options.seed + static_cast<std::uint64_t>(p),
                                     options.zero_controls);
      const auto report = check_gradients(spec, z, p, options.hooks);
      for (const auto& e : report.entries) {
        out << "point " << e.point << ' ' << e.suite << ": max relative error "
            << format_double(e.max_relative_error) << '\n';
      }
      worst = std::max(worst, report.max_relative_error);
    }
    const bool pass = worst <= options.tolerance;
    out << "max relative error " << format_double(worst) << " (tolerance "
        << format_double(options.tolerance) << "): " << (pass ? "pass" : "fail") << '\n';
    return pass ? kExitOk : kExitFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace ctstl::app
