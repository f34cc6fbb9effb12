#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "reachkit/cli.hpp"
#include "reachkit/golden.hpp"
#include "reachkit/plot.hpp"

using namespace reachkit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string model(const std::string& name) { return (fs::path(REACHKIT_MODEL_DIR) / name).string(); }

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("reachkit_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write(const fs::path& dir, const std::string& file, const std::string& text) {
  std::ofstream(dir / file) << text;
  return (dir / file).string();
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

size_t line_count(const fs::path& p) {
  std::ifstream is(p);
  size_t n = 0;
  for (std::string line; std::getline(is, line);) ++n;
  return n;
}

json without_timings(json j) {
  j.erase("timings");
  return j;
}

}  // namespace

TEST_CASE("reach on the unit square gives two segments") {
  const auto out = scratch("reach");
  const auto rep = cli::run("reach", model("example1.json"), out.string());
  CHECK(rep.exit_code == cli::kOk);
  CHECK(rep.diagnostics["segment_count"] == 2);
  CHECK(fs::exists(out / "report.json"));
  const json disk = json::parse(slurp(out / "report.json"));
  CHECK(disk["exit_code"] == 0);
  CHECK(disk["diagnostics"]["segments"].size() == 2);
}

TEST_CASE("overrides reach the engine and are recorded") {
  const auto out = scratch("override");
  cli::Overrides ov;
  ov.dt = 0.25;
  const auto rep = cli::run("reach", model("example1.json"), out.string(), ov);
  CHECK(rep.exit_code == cli::kOk);
  CHECK(rep.diagnostics["segment_count"] == 4);
  CHECK(rep.effective["dt"] == 0.25);
}

TEST_CASE("polyapprox report carries the bounds and rows") {
  const auto out = scratch("poly");
  const auto rep = cli::run("polyapprox", model("example2.json"), out.string());
  REQUIRE(rep.exit_code == cli::kOk);
  const auto& piece = rep.diagnostics["pieces"][0];
  CHECK(piece["l"][0].get<double>() == doctest::Approx(2.7566).epsilon(1e-4));
  CHECK(piece["rows"].size() == 12);
  CHECK(piece["vertices"].size() >= 3);
  CHECK(piece["area"].get<double>() > 0.0);
  CHECK(rep.diagnostics["c1"]["holds"] == true);
  CHECK(fs::exists(out / "polyhedron.json"));
  const json file = json::parse(slurp(out / "polyhedron.json"));
  CHECK(file["pieces"][0]["rows"].size() == 12);
}

TEST_CASE("malformed model exits with 2") {
  const auto out = scratch("malformed");
  const auto path = write(out, "bad.json", R"({"schema": 1, "kind": "reach", "dim": 2, "initial": {)");
  const auto rep = cli::run("reach", path, out.string());
  CHECK(rep.exit_code == cli::kModelError);
  CHECK_FALSE(rep.message.empty());
  CHECK(fs::exists(out / "report.json"));

  const auto missing = cli::run("reach", (out / "absent.json").string(), out.string());
  CHECK(missing.exit_code != cli::kOk);
}

TEST_CASE("a face the flow does not leave exits with 3") {
  const auto out = scratch("static");
  const auto path = write(out, "static.json", R"({
    "schema": 1, "kind": "polyapprox", "dim": 2,
    "dynamics": {"matrix": [[0, 0], [0, 0]]},
    "face": {"sides": [[1, 0, 1], [-1, 0, 0]], "base": [0, 1, 0]},
    "grid": {"dt": 0.1, "cell": 0.02}
  })");
  const auto rep = cli::run("polyapprox", path, out.string());
  CHECK(rep.exit_code == cli::kAssumption);
}

TEST_CASE("periodic reach-inv exits with 4") {
  const auto out = scratch("periodic");
  const auto rep = cli::run("reach-inv", model("periodic.json"), out.string());
  CHECK(rep.exit_code == cli::kIterationCap);
  CHECK(rep.diagnostics["iteration_cap"] == true);
  CHECK(rep.diagnostics["iterations"] == 30);
}

TEST_CASE("drift reach-inv terminates") {
  const auto out = scratch("drift");
  const auto rep = cli::run("reach-inv", model("drift.json"), out.string());
  CHECK(rep.exit_code == cli::kOk);
  CHECK(rep.diagnostics["terminated"] == true);
}

TEST_CASE("reports are deterministic apart from timings") {
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  for (const char* cmd : {"reach", "polyapprox", "hybrid-reach"}) {
    const char* file = std::string(cmd) == "reach" ? "example1.json"
                       : std::string(cmd) == "polyapprox" ? "example2.json"
                                                         : "hybrid_drift.json";
    CAPTURE(cmd);
    auto ja = cli::run(cmd, model(file), a.string()).to_json();
    auto jb = cli::run(cmd, model(file), b.string()).to_json();
    CHECK(ja.contains("timings"));
    // outputs differ only by directory
    ja.erase("outputs");
    jb.erase("outputs");
    CHECK(without_timings(ja) == without_timings(jb));
  }
}

TEST_CASE("non-finite values are written as strings") {
  cli::RunReport r;
  r.diagnostics["x"] = std::numeric_limits<double>::infinity();
  r.diagnostics["y"] = std::numeric_limits<double>::quiet_NaN();
  const json j = r.to_json();
  CHECK(j["diagnostics"]["x"].is_string());
  CHECK(j["diagnostics"]["y"].is_string());
  CHECK(json::parse(j.dump()) == j);
}

TEST_CASE("hybrid-reach reports a replayed witness") {
  const auto out = scratch("hybrid");
  const auto rep = cli::run("hybrid-reach", model("hybrid_drift.json"), out.string());
  REQUIRE(rep.exit_code == cli::kOk);
  const auto& v = rep.diagnostics["verdict"];
  CHECK(v["verdict"] == "yes");
  CHECK(v["k"] == 1);
  CHECK(v["replay"]["validated"] == true);

  const auto none = cli::run("hybrid-reach", model("hybrid_disjoint.json"), out.string());
  CHECK(none.exit_code == cli::kOk);
  CHECK(none.diagnostics["verdict"]["verdict"] == "unknown");
}

TEST_CASE("plot of an empty tube writes only the header") {
  const auto out = scratch("plot_empty");
  const auto s = plot_tube(ReachTube{}, PlotFormat::Csv, (out / "t.csv").string());
  CHECK(s.rows == 0);
  CHECK(line_count(out / "t.csv") == 1);
}

TEST_CASE("plot of 100 cells writes 100 rows") {
  const auto out = scratch("plot_cells");
  GridRegion g(2, 0.1);
  g.mark_box((Vec(2) << 0.01, 0.01).finished(), (Vec(2) << 0.99, 0.99).finished());
  REQUIRE(g.size() == 100);
  const auto s = plot_cells({g}, PlotFormat::Csv, (out / "c.csv").string());
  CHECK(s.rows == 100);
  CHECK(line_count(out / "c.csv") == 101);
  const auto svg = plot_cells({g}, PlotFormat::Svg, (out / "c.svg").string());
  CHECK(svg.rows == 100);
  CHECK(slurp(out / "c.svg").find("<svg") != std::string::npos);
}

TEST_CASE("polygon plot draws every candidate edge") {
  const auto out = scratch("plot_poly");
  cli::Overrides ov;
  ov.format = "svg";
  const auto rep = cli::run("plot", model("example2.json"), out.string(), ov);
  REQUIRE(rep.exit_code == cli::kOk);
  CHECK(rep.diagnostics["candidate_edges"] == 12);
  CHECK(rep.diagnostics["active_edges"].get<int>() >= 5);
  const auto svg = slurp(out / "polygon.svg");
  CHECK(svg.find("<polygon") != std::string::npos);
}

TEST_CASE("plotting a 3D set is unsupported") {
  const auto out = scratch("plot_3d");
  GridRegion g(3, 0.1);
  g.mark_point(Vec::Zero(3));
  CHECK_THROWS_AS(plot_cells({g}, PlotFormat::Csv, (out / "c.csv").string()), Error);
  CHECK_THROWS_AS(parse_plot_format("png"), Error);
}

TEST_CASE("golden suite fails loudly on a missing model directory") {
  const auto results = golden::run_suite("/nonexistent/models");
  REQUIRE(results.size() == 12);
  for (const auto& r : results) {
    if (r.id == "A11") continue;  // needs no model
    CAPTURE(r.id);
    CHECK_FALSE(r.pass);
    CHECK(r.detail.find("missing input") != std::string::npos);
  }
  CHECK(golden::format_table(results).find("FAIL") != std::string::npos);
}

TEST_CASE("the bound check rejects a one percent perturbation") {
  CHECK(golden::a1_values_ok(2.75664236, 1.24999904, 1.24999904));
  CHECK_FALSE(golden::a1_values_ok(2.75664236 * 1.01, 1.24999904, 1.24999904));
  CHECK_FALSE(golden::a1_values_ok(2.75664236, 1.24999904 * 1.01, 1.24999904));
}
