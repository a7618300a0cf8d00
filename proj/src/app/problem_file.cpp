#include "ctstl/app/problem_file.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <span>
#include <sstream>

#include "json.hpp"

namespace ctstl::app {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw SchemaError(path + ": " + message);
}

void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

void reject_unknown(const Json& j, const std::string& path,
                    std::initializer_list<std::string_view> known) {
  for (const auto& [key, value] : j.items()) {
    bool found = false;
    for (auto k : known) found = found || k == key;
    if (!found) fail(path + "." + key, "unknown key");
  }
}

const Json& member(const Json& j, const std::string& path, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) fail(path + "." + key, "missing required key");
  return *it;
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "expected a finite number");
  return v;
}

std::size_t count(const Json& j, const std::string& path, std::size_t minimum) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  const auto v = j.get<long long>();
  if (v < static_cast<long long>(minimum)) fail(path, "must be at least " + std::to_string(minimum));
  return static_cast<std::size_t>(v);
}

std::string text(const Json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> numbers(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<std::string> strings(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(text(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

void optional_number(const Json& j, const std::string& path, const char* key, double& target) {
  if (auto it = j.find(key); it != j.end()) target = number(*it, path + "." + key);
}

Eigen::VectorXd state_vector(const Json& j, const std::string& path, std::size_t n) {
  const auto v = numbers(j, path);
  if (v.size() != n) {
    fail(path, "expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
  }
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void read_gmsr(const Json& j, gmsr::GmsrConfig& cfg) {
  const std::string path = "$.gmsr";
  require_object(j, path);
  reject_unknown(j, path, {"c", "until_pair_c", "until_prefix_c"});
  if (auto it = j.find("c"); it != j.end()) cfg = gmsr::GmsrConfig::uniform(number(*it, path + ".c"));
  optional_number(j, path, "until_pair_c", cfg.until_pair_c);
  optional_number(j, path, "until_prefix_c", cfg.until_prefix_c);
}

void read_penalty(const Json& j, scp::PenaltyConfig& cfg) {
  const std::string path = "$.penalty";
  require_object(j, path);
  reject_unknown(j, path, {"w_dyn", "w_stl", "robustness_margin"});
  optional_number(j, path, "w_dyn", cfg.w_dyn);
  optional_number(j, path, "w_stl", cfg.w_stl);
  optional_number(j, path, "robustness_margin", cfg.robustness_margin);
}

void read_prox(const Json& j, scp::ProxConfig& cfg) {
  const std::string path = "$.prox";
  require_object(j, path);
  reject_unknown(j, path,
                 {"w_initial", "w_min", "w_max", "grow", "shrink", "reject_ratio", "accept_ratio",
                  "max_iterations", "eps_pen", "eps_stat"});
  optional_number(j, path, "w_initial", cfg.w_initial);
  optional_number(j, path, "w_min", cfg.w_min);
  optional_number(j, path, "w_max", cfg.w_max);
  optional_number(j, path, "grow", cfg.grow);
  optional_number(j, path, "shrink", cfg.shrink);
  optional_number(j, path, "reject_ratio", cfg.reject_ratio);
  optional_number(j, path, "accept_ratio", cfg.accept_ratio);
  optional_number(j, path, "eps_pen", cfg.eps_pen);
  optional_number(j, path, "eps_stat", cfg.eps_stat);
  if (auto it = j.find("max_iterations"); it != j.end()) {
    cfg.max_iterations = static_cast<int>(count(*it, path + ".max_iterations", 1));
  }
}

void read_plots(const Json& j, PlotSpec& plots) {
  const std::string path = "$.plots";
  require_object(j, path);
  reject_unknown(j, path, {"path", "speed", "margin"});
  if (auto it = j.find("path"); it != j.end()) {
    const std::string p = path + ".path";
    require_object(*it, p);
    reject_unknown(*it, p, {"x", "y", "circle"});
    PathPlot plot;
    if (auto x = it->find("x"); x != it->end()) plot.x = text(*x, p + ".x");
    if (auto y = it->find("y"); y != it->end()) plot.y = text(*y, p + ".y");
    if (auto c = it->find("circle"); c != it->end()) {
      const std::string pc = p + ".circle";
      require_object(*c, pc);
      reject_unknown(*c, pc, {"center", "radius"});
      const auto center = numbers(member(*c, pc, "center"), pc + ".center");
      if (center.size() != 2) fail(pc + ".center", "expected 2 entries");
      plot.circle_center = std::array<double, 2>{center[0], center[1]};
      plot.circle_radius = number(member(*c, pc, "radius"), pc + ".radius");
    }
    plots.path = plot;
  }
  if (auto it = j.find("speed"); it != j.end()) {
    const std::string p = path + ".speed";
    require_object(*it, p);
    reject_unknown(*it, p, {"channels", "limits"});
    SpeedPlot plot;
    plot.channels = strings(member(*it, p, "channels"), p + ".channels");
    if (auto l = it->find("limits"); l != it->end()) plot.limits = numbers(*l, p + ".limits");
    plots.speed = plot;
  }
  if (auto it = j.find("margin"); it != j.end()) {
    const std::string p = path + ".margin";
    require_object(*it, p);
    reject_unknown(*it, p, {"channels", "center", "radius"});
    MarginPlot plot;
    plot.channels = strings(member(*it, p, "channels"), p + ".channels");
    plot.center = numbers(member(*it, p, "center"), p + ".center");
    plot.radius = number(member(*it, p, "radius"), p + ".radius");
    if (plot.center.size() != plot.channels.size()) {
      fail(p + ".center", "needs one entry per channel");
    }
    plots.margin = plot;
  }
}

void check_plot_channels(const PlotSpec& plots, const stl::ChannelSet& channels) {
  auto check = [&](const std::string& name, const std::string& path) {
    if (!channels.find(name)) fail(path, "unknown channel '" + name + "'");
  };
  if (plots.path) {
    check(plots.path->x, "$.plots.path.x");
    check(plots.path->y, "$.plots.path.y");
  }
  if (plots.speed) {
    for (const auto& c : plots.speed->channels) check(c, "$.plots.speed.channels");
  }
  if (plots.margin) {
    for (const auto& c : plots.margin->channels) check(c, "$.plots.margin.channels");
  }
}

}  // namespace

ProblemSpec parse_problem(std::string_view json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw SchemaError(std::string("$: invalid JSON: ") + e.what());
  }
  const std::string root = "$";
  require_object(doc, root);
  reject_unknown(doc, root,
                 {"name", "dynamics", "grid", "x_initial", "x_final", "constants", "formula", "gmsr",
                  "penalty", "prox", "plots"});

  ProblemSpec spec;
  if (auto it = doc.find("name"); it != doc.end()) spec.name = text(*it, "$.name");

  const Json& dyn = member(doc, root, "dynamics");
  require_object(dyn, "$.dynamics");
  reject_unknown(dyn, "$.dynamics", {"model", "parameters"});
  spec.model_id = text(member(dyn, "$.dynamics", "model"), "$.dynamics.model");
  if (auto it = dyn.find("parameters"); it != dyn.end()) {
    require_object(*it, "$.dynamics.parameters");
    for (const auto& [key, value] : it->items()) {
      spec.model_parameters[key] = number(value, "$.dynamics.parameters." + key);
    }
  }
  std::shared_ptr<const transcription::DynamicsModel> model;
  try {
    model = transcription::make_model(spec.model_id, spec.model_parameters);
  } catch (const Error& e) {
    fail("$.dynamics", e.what());
  }

  const Json& grid = member(doc, root, "grid");
  require_object(grid, "$.grid");
  reject_unknown(grid, "$.grid", {"K", "N", "tf"});
  spec.grid.K = count(member(grid, "$.grid", "K"), "$.grid.K", 2);
  spec.grid.N = count(member(grid, "$.grid", "N"), "$.grid.N", 1);
  spec.grid.tf = number(member(grid, "$.grid", "tf"), "$.grid.tf");
  if (!(spec.grid.tf > 0.0)) fail("$.grid.tf", "must be positive");

  spec.x_initial = state_vector(member(doc, root, "x_initial"), "$.x_initial", model->state_dim());
  spec.x_final = state_vector(member(doc, root, "x_final"), "$.x_final", model->state_dim());

  spec.constants["tf"] = spec.grid.tf;
  for (const auto& [key, value] : spec.model_parameters) spec.constants[key] = value;
  if (auto it = doc.find("constants"); it != doc.end()) {
    require_object(*it, "$.constants");
    for (const auto& [key, value] : it->items()) {
      const std::string path = "$.constants." + key;
      if (spec.constants.contains(key)) fail(path, "redefines an existing constant");
      if (value.is_string()) {
        try {
          const auto expr = stl::parse_expression(value.get<std::string>(), {}, spec.constants);
          spec.constants[key] = expr.evaluate(std::span<const double>{});
        } catch (const Error& e) {
          fail(path, e.what());
        }
      } else {
        spec.constants[key] = number(value, path);
      }
    }
  }

  if (auto it = doc.find("gmsr"); it != doc.end()) read_gmsr(*it, spec.gmsr);
  if (auto it = doc.find("penalty"); it != doc.end()) read_penalty(*it, spec.penalty);
  if (auto it = doc.find("prox"); it != doc.end()) read_prox(*it, spec.prox);
  if (auto it = doc.find("plots"); it != doc.end()) read_plots(*it, spec.plots);

  const auto channels = model->channels();
  check_plot_channels(spec.plots, channels);

  spec.problem.model = model;
  spec.problem.grid = spec.grid;
  spec.problem.x_initial = spec.x_initial;
  spec.problem.x_final = spec.x_final;
  spec.problem.gmsr = spec.gmsr;
  if (auto it = doc.find("formula"); it != doc.end()) {
    spec.formula_text = text(*it, "$.formula");
    try {
      spec.problem.formula = stl::parse_formula(spec.formula_text, channels, spec.constants);
    } catch (const Error& e) {
      fail("$.formula", e.what());
    }
  }

  try {
    spec.gmsr.validate();
    spec.penalty.validate();
    spec.prox.validate();
    spec.problem.validate();
  } catch (const Error& e) {
    fail(root, e.what());
  }
  return spec;
}

ProblemSpec load_problem(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("$: cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_problem(buffer.str());
}

const stl::Formula& problem_formula(const ProblemSpec& spec) {
  if (!spec.problem.formula) throw SchemaError("$.formula: problem has no formula");
  return *spec.problem.formula;
}

}  // namespace ctstl::app
