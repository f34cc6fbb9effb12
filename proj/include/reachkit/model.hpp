#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reachkit/boundary.hpp"
#include "reachkit/flow.hpp"
#include "reachkit/geometry.hpp"
#include "reachkit/hybrid.hpp"
#include "reachkit/polyapprox.hpp"

namespace reachkit {

inline constexpr int kModelSchema = 1;

enum class ProblemKind { Reach, ReachInv, Polyapprox, Hybrid };
std::string to_string(ProblemKind k);

struct GridSpec {
  double tau = 1.0;
  double dt = 0.1;
  double cell = 0.02;
  double boundary_spacing = 0.0;  // 0 means cell / 2
};

struct ModeSpec {
  bool under_approximate = false;
  poly::BoundMode bounds = poly::BoundMode::Conservative;
  int max_iters = 0;
  std::optional<double> delta0;
  std::optional<double> tau_max;
  bool literal_under_branch = false;
};

/// Level set {ell <= 0} searched inside a box.
struct LevelSetSpec {
  std::string expr;
  Vec lo, hi;
};

struct HybridSpec {
  hybrid::HybridSystem system;
  std::vector<hybrid::InitRegion> target;
  int max_k = 5;
  double tau_q = 2.0;
};

/// In-memory form of a model file. Polyhedra are row arrays [a_1 .. a_n, b]
/// meaning a.x <= b; matrices are row-major; expressions use the Expr grammar.
struct Model {
  int schema = kModelSchema;
  ProblemKind kind = ProblemKind::Reach;
  std::string name;
  int dim = 0;
  std::optional<flow::Dynamics> dynamics;
  std::optional<Polyhedron> initial_poly;
  std::optional<LevelSetSpec> initial_level;
  std::optional<Polyhedron> invariant;
  std::optional<Face> face;
  GridSpec grid;
  ModeSpec modes;
  std::optional<HybridSpec> hybrid;

  [[nodiscard]] InitialSet initial_set() const;
};

/// Parses and validates; throws Parse for malformed text and Model for schema errors.
Model parse_model(const std::string& text);
Model load_model(const std::string& path);
std::string dump_model(const Model& m);
void save_model(const Model& m, const std::string& path);

/// Same kind and parameters, and every polyhedron has the same rows as a
/// multiset after scaling to unit normals.
bool equivalent(const Model& a, const Model& b, double tol = 1e-12);

}  // namespace reachkit
