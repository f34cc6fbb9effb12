#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "reachkit/model.hpp"

using namespace reachkit;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::string& text) {
  try {
    (void)parse_model(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("parse_model accepted malformed input");
  return ErrorCode::Model;
}

const char* kSquare = R"({
  "schema": 1, "kind": "reach", "dim": 2,
  "dynamics": {"matrix": [[0, 1], [0, 0]]},
  "initial": {"polyhedron": {"rows": [[1, 0, 1], [-1, 0, 0], [0, 1, 1], [0, -1, 0]]}},
  "grid": {"tau": 0.5, "dt": 0.25, "cell": 0.05}
})";

}  // namespace

TEST_CASE("every bundled model survives a save/load round trip") {
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(REACHKIT_MODEL_DIR)) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    const Model m = load_model(entry.path().string());
    const Model back = parse_model(dump_model(m));
    CHECK(equivalent(m, back));
    CHECK(dump_model(back) == dump_model(m));
    ++seen;
  }
  CHECK(seen >= 9);
}

TEST_CASE("save_model writes a file load_model reads back") {
  const auto path = fs::temp_directory_path() / "reachkit_model_roundtrip.json";
  const Model m = parse_model(kSquare);
  save_model(m, path.string());
  CHECK(equivalent(m, load_model(path.string())));
  fs::remove(path);
}

TEST_CASE("equivalence ignores row order and positive scaling") {
  const Model a = parse_model(kSquare);
  const Model b = parse_model(R"({
    "schema": 1, "kind": "reach", "dim": 2,
    "dynamics": {"matrix": [[0, 1], [0, 0]]},
    "initial": {"polyhedron": {"rows": [[0, -3, 0], [2, 0, 2], [0, 1, 1], [-1, 0, 0]]}},
    "grid": {"tau": 0.5, "dt": 0.25, "cell": 0.05}
  })");
  CHECK(equivalent(a, b));
  Model c = a;
  c.grid.dt = 0.2;
  CHECK_FALSE(equivalent(a, c));
}

TEST_CASE("fields are parsed into the model") {
  const Model m = parse_model(kSquare);
  CHECK(m.kind == ProblemKind::Reach);
  CHECK(m.dim == 2);
  REQUIRE(m.dynamics);
  CHECK(m.dynamics->is_linear());
  CHECK(m.dynamics->matrix()(0, 1) == 1.0);
  REQUIRE(m.initial_poly);
  CHECK(m.initial_poly->inequalities().size() == 4);
  CHECK(m.grid.tau == 0.5);
  CHECK(m.grid.cell == 0.05);
}

TEST_CASE("malformed text is a parse error") {
  CHECK(code_of("{") == ErrorCode::Parse);
  CHECK(code_of("[1, 2") == ErrorCode::Parse);
}

TEST_CASE("schema violations are model errors") {
  CHECK(code_of(R"({"schema": 1, "kind": "reach"})") == ErrorCode::Model);
  CHECK(code_of(R"({"schema": 7, "kind": "reach", "dim": 2})") == ErrorCode::Model);
  CHECK(code_of(R"({"schema": 1, "kind": "teleport", "dim": 2})") == ErrorCode::Model);
  // row with the wrong number of entries
  CHECK(code_of(R"({
    "schema": 1, "kind": "reach", "dim": 2,
    "dynamics": {"matrix": [[0, 1], [0, 0]]},
    "initial": {"polyhedron": {"rows": [[1, 0, 1], [-1, 0]]}},
    "grid": {"tau": 0.5, "dt": 0.25, "cell": 0.05}
  })") == ErrorCode::Model);
  // non-numeric entry
  CHECK(code_of(R"({
    "schema": 1, "kind": "reach", "dim": 2,
    "dynamics": {"matrix": [[0, "one"], [0, 0]]},
    "initial": {"polyhedron": {"rows": [[1, 0, 1]]}},
    "grid": {"tau": 0.5, "dt": 0.25, "cell": 0.05}
  })") == ErrorCode::Model);
}

TEST_CASE("dimension mismatches are rejected") {
  const ErrorCode c = code_of(R"({
    "schema": 1, "kind": "reach", "dim": 3,
    "dynamics": {"matrix": [[0, 1], [0, 0]]},
    "initial": {"polyhedron": {"rows": [[1, 0, 0, 1]]}},
    "grid": {"tau": 0.5, "dt": 0.25, "cell": 0.05}
  })");
  CHECK((c == ErrorCode::DimMismatch || c == ErrorCode::Model));
  const ErrorCode d = code_of(R"({
    "schema": 1, "kind": "reach", "dim": 2,
    "dynamics": {"expressions": ["x2", "x1", "x3"]},
    "initial": {"polyhedron": {"rows": [[1, 0, 1]]}},
    "grid": {"tau": 0.5, "dt": 0.25, "cell": 0.05}
  })");
  CHECK((d == ErrorCode::DimMismatch || d == ErrorCode::Model));
}

TEST_CASE("a missing file is reported") {
  CHECK_THROWS_AS((void)load_model("/nonexistent/model.json"), Error);
}
