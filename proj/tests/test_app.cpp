#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ctstl/app/commands.hpp"
#include "ctstl/app/io.hpp"
#include "ctstl/app/problem_file.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace ctstl;
using namespace ctstl::app;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

const fs::path kQuadrotor = fs::path(CTSTL_SOURCE_DIR) / "problems" / "quadrotor_charging.json";

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("ctstl_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  fs::path write(const std::string& name, const std::string& text) const {
    const auto p = path_ / name;
    std::ofstream(p) << text;
    return p;
  }

 private:
  fs::path path_;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kHover = R"json({
  "name": "hover",
  "dynamics": { "model": "point_mass_3d", "parameters": { "m": 1.0, "g0": 9.806 } },
  "grid": { "K": 2, "N": 4, "tf": 1.0 },
  "x_initial": [0, 0, 5, 0, 0, 0],
  "x_final": [0, 0, 5, 0, 0, 0],
  "formula": "G[0, tf](rz >= 1)"
})json";

}  // namespace

TEST_CASE("problem file schema") {
  SUBCASE("bundled problem loads") {
    const auto spec = load_problem(kQuadrotor);
    CHECK(spec.name == "quadrotor_charging");
    CHECK(spec.grid.dense_size() == 41);
    CHECK(spec.constants.at("Tmax2") == doctest::Approx(1.75 * 9.806 * 1.75 * 9.806).epsilon(1e-15));
    CHECK(spec.constants.at("tf") == 10.7649);
    CHECK(spec.problem.formula.has_value());
    CHECK(spec.penalty.w_dyn == 1e4);
    CHECK(spec.plots.path.has_value());
  }
  SUBCASE("minimal problem uses defaults") {
    const auto spec = parse_problem(kHover);
    CHECK(spec.penalty.w_dyn == 100.0);
    CHECK(spec.penalty.w_stl == 100.0);
    CHECK(spec.prox.max_iterations == 50);
    CHECK_FALSE(spec.plots.path.has_value());
  }
  SUBCASE("errors carry a JSON path") {
    auto doc = Json::parse(kHover);
    doc["formla"] = "x";
    CHECK_THROWS_WITH_AS(parse_problem(doc.dump()), doctest::Contains("$.formla"), SchemaError);
    doc = Json::parse(kHover);
    doc["grid"]["K"] = 1;
    CHECK_THROWS_AS(parse_problem(doc.dump()), Error);
    doc = Json::parse(kHover);
    doc["x_final"] = Json::array({0, 0, 5});
    CHECK_THROWS_AS(parse_problem(doc.dump()), Error);
    doc = Json::parse(kHover);
    doc["formula"] = "G[0, tf](altitude >= 1)";
    CHECK_THROWS_WITH_AS(parse_problem(doc.dump()), doctest::Contains("$.formula"), SchemaError);
    doc = Json::parse(kHover);
    doc["constants"] = {{"tf", 2.0}};
    CHECK_THROWS_AS(parse_problem(doc.dump()), SchemaError);
    doc = Json::parse(kHover);
    doc["dynamics"]["model"] = "glider";
    CHECK_THROWS_AS(parse_problem(doc.dump()), Error);
    CHECK_THROWS_AS(parse_problem("{ not json"), SchemaError);
  }
}

TEST_CASE("trajectory CSV round-trips bit for bit") {
  const auto spec = load_problem(kQuadrotor);
  std::mt19937_64 rng(81);
  std::normal_distribution<double> normal(0.0, 3.0);
  const auto layout = spec.problem.layout();
  Eigen::VectorXd z(static_cast<Eigen::Index>(layout.size()));
  for (auto& v : z) v = normal(rng);
  const auto traj = transcription::build_dense_trajectory(*spec.problem.model, z, spec.grid);
  const auto channels = spec.problem.model->channels();
  std::stringstream csv;
  write_trajectory_csv(csv, traj, channels);
  const auto sig = read_signal_csv(csv);
  const auto ref = traj.signal(channels);
  REQUIRE(sig.size() == ref.size());
  CHECK(sig.channels().size() == 9);
  for (std::size_t m = 0; m < sig.size(); ++m) {
    CHECK(sig.times()[m] == ref.times()[m]);
    for (std::size_t c = 0; c < 9; ++c) CHECK(sig.sample(m)[c] == ref.sample(m)[c]);
  }
}

TEST_CASE("malformed CSV input") {
  auto parse = [](const std::string& text) {
    std::stringstream ss(text);
    return read_signal_csv(ss);
  };
  CHECK_THROWS_AS(parse("x,y\n1,2\n"), CsvError);
  CHECK_THROWS_AS(parse("t,x,x\n0,1,2\n"), CsvError);
  CHECK_THROWS_AS(parse("t,x\n0,1\n1\n"), CsvError);
  CHECK_THROWS_AS(parse("t,x\n0,abc\n"), CsvError);
  CHECK_THROWS_AS(parse("t,x\n1,0\n0,0\n"), GridError);
  CHECK(parse("t,x\n0,1\n0.5,-2\n").size() == 2);
}

TEST_CASE("SVG output is deterministic") {
  Plot plot;
  plot.title = "speed";
  plot.x_label = "t";
  plot.y_label = "|v|";
  plot.series.push_back({{0, 1, 2, 3}, {0, 2, 1, 4}, "|v|"});
  plot.lines.push_back({5.0, "limit"});
  const auto a = render_svg(plot);
  CHECK(a == render_svg(plot));
  CHECK(a.rfind("<svg", 0) == 0);
  CHECK(a.find("</svg>") != std::string::npos);
  CHECK(a.find("limit") != std::string::npos);
  plot.series[0].y[3] = 4.5;
  CHECK(render_svg(plot) != a);
}

TEST_CASE("solve command") {
  TempDir dir;
  std::ostringstream out, err;
  SUBCASE("hover problem writes one row per dense sample") {
    SolveOptions opts;
    opts.problem_file = dir.write("hover.json", kHover);
    opts.out_dir = dir.path() / "out";
    REQUIRE(run_solve(opts, out, err) == kExitOk);
    std::ifstream csv(opts.out_dir / "trajectory.csv");
    std::string line;
    int rows = 0;
    std::getline(csv, line);
    CHECK(line == "t,rx,ry,rz,vx,vy,vz,ux,uy,uz");
    while (std::getline(csv, line)) rows += line.empty() ? 0 : 1;
    CHECK(rows == 5);
    const auto report = Json::parse(read_file(opts.out_dir / "report.json"));
    CHECK(report["status"] == "converged");
    const auto rob = Json::parse(read_file(opts.out_dir / "robustness.json"));
    CHECK(rob["satisfied"] == true);
    CHECK(rob["gamma"].get<double>() > 0.0);
    CHECK(out.str().find("status=converged") != std::string::npos);
  }
  SUBCASE("input errors exit with 2") {
    SolveOptions opts;
    opts.problem_file = dir.write("bad.json", "{\"name\": 3}");
    opts.out_dir = dir.path() / "out";
    CHECK(run_solve(opts, out, err) == kExitInputError);
    opts.problem_file = dir.path() / "missing.json";
    CHECK(run_solve(opts, out, err) == kExitInputError);
    CHECK_FALSE(err.str().empty());
  }
  SUBCASE("an iteration cap that is too small reports failure") {
    SolveOptions opts;
    opts.problem_file = kQuadrotor;
    opts.out_dir = dir.path() / "out";
    opts.max_iterations = 1;
    CHECK(run_solve(opts, out, err) == kExitFailure);
    CHECK(fs::exists(opts.out_dir / "trajectory.csv"));
  }
}

TEST_CASE("monitor command") {
  TempDir dir;
  std::ostringstream out, err;
  SUBCASE("constant satisfied signal") {
    MonitorOptions opts;
    opts.signal_file = dir.write("s.csv", "t,x\n0,2\n1,2\n2,2\n");
    opts.formula = "G[0,2](x >= k)";
    opts.constants = {"k=1"};
    opts.out_file = dir.path() / "m.json";
    REQUIRE(run_monitor(opts, out, err) == kExitOk);
    const auto rep = Json::parse(read_file(*opts.out_file));
    CHECK(rep["classical"].get<double>() == 1.0);
    CHECK(rep["verdict"] == true);
    CHECK(rep["gamma"].get<double>() > 0.0);
    CHECK(rep["samples"] == 3);
  }
  SUBCASE("until witness") {
    MonitorOptions opts;
    opts.signal_file = dir.write("u.csv", "t,s,c\n0,1,-1\n1,1,-1\n2,1,1\n3,-1,-1\n4,-1,1\n");
    opts.formula = "(s >= 0) U[0,4] (c >= 0)";
    REQUIRE(run_monitor(opts, out, err) == kExitOk);
    const auto rep = Json::parse(out.str());
    REQUIRE(rep["witnesses"].size() == 1);
    CHECK(rep["witnesses"][0]["sample"] == 2);
    CHECK(rep["witnesses"][0]["time"].get<double>() == 2.0);
    CHECK(rep["classical"].get<double>() == 1.0);
  }
  SUBCASE("sign disagreement exits with 3") {
    MonitorOptions opts;
    opts.signal_file = dir.write("s.csv", "t,x\n0,2\n1,2\n");
    opts.formula = "G[0,1](x >= 1)";
    opts.flip_smooth_sign = true;
    CHECK(run_monitor(opts, out, err) == kExitSignMismatch);
  }
  SUBCASE("input errors exit with 2") {
    MonitorOptions opts;
    opts.signal_file = dir.write("s.csv", "t,x\n0,2\n1,2\n");
    opts.formula = "G[0,1](y >= 1)";
    CHECK(run_monitor(opts, out, err) == kExitInputError);
    opts.formula = "G[0,5](x >= 1)";
    CHECK(run_monitor(opts, out, err) == kExitInputError);
    opts.formula.reset();
    CHECK(run_monitor(opts, out, err) == kExitInputError);
    opts.formula = "x >= k";
    opts.constants = {"k"};
    CHECK(run_monitor(opts, out, err) == kExitInputError);
    opts.signal_file = dir.path() / "missing.csv";
    opts.constants.clear();
    CHECK(run_monitor(opts, out, err) == kExitInputError);
  }
}

TEST_CASE("gradient checks") {
  std::ostringstream out, err;
  SUBCASE("random points pass") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      CheckGradOptions opts;
      opts.problem_file = kQuadrotor;
      opts.seed = seed;
      CHECK(run_check_grad(opts, out, err) == kExitOk);
    }
  }
  SUBCASE("zero controls pass") {
    CheckGradOptions opts;
    opts.problem_file = kQuadrotor;
    opts.zero_controls = true;
    CHECK(run_check_grad(opts, out, err) == kExitOk);
  }
  SUBCASE("a corrupted flow Jacobian is caught") {
    CheckGradOptions opts;
    opts.problem_file = kQuadrotor;
    opts.hooks.corrupt_flow_jacobian = [](Eigen::MatrixXd& J) { J(0, 0) += 1e-3; };
    CHECK(run_check_grad(opts, out, err) == kExitFailure);
  }
  SUBCASE("relative error metric") {
    Eigen::MatrixXd a(1, 2), b(1, 2);
    a << 1.0, 2.0;
    b << 1.0, 2.2;
    CHECK(relative_error(a, b) == doctest::Approx(0.2 / 2.2));
    CHECK(relative_error(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2)) == 0.0);
  }
}
