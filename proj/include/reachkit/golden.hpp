#pragma once

#include <random>
#include <string>
#include <vector>

#include "reachkit/polyapprox.hpp"

namespace reachkit::golden {

struct Result {
  std::string id;
  bool pass = false;
  std::string detail;
  double ms = 0.0;
};

/// [1, sqrt 2] x {0} with base normal (0, 1).
Face example2_face();
/// Generator of the rotation x' = (-x2, x1).
Mat rotation_generator();

/// Random bounded face and matrix passing the drift check, with the step set to
/// the certified bound (capped at 0.5). dim is 2 or 3.
poly::StepProblem random_step_problem(std::mt19937_64& rng, int dim);

/// Largest row residual of e^{At} x0 over nx face samples by nt times in [0, delta].
double containment_residual(const poly::StepProblem& prob, const Polyhedron& P, int nx, int nt);

/// The published rows for the rotation example, as (normal, offset) with normal.x <= offset.
std::vector<Halfspace> published_eta_rows();
/// Published vertices of the first eight rows.
std::vector<Vec> published_vertices();

/// Tolerance checks shared by the suite and its sensitivity tests.
bool a1_values_ok(double l_rot, double l_cap, double l_cap_prime);
/// Rows agree after scaling both to unit normals.
bool rows_match(const Halfspace& a, const Halfspace& b, double tol);

/// Runs every acceptance check; a missing model file fails its criteria.
std::vector<Result> run_suite(const std::string& model_dir);
std::string format_table(const std::vector<Result>& results);

}  // namespace reachkit::golden
