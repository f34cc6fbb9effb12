#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "reachkit/facelift.hpp"
#include "reachkit/flow.hpp"
#include "reachkit/geometry.hpp"
#include "reachkit/grid.hpp"

namespace reachkit::hybrid {

/// x -> R x + c
struct Reset {
  Mat R;
  Vec c;

  static Reset identity(int dim) { return {Mat::Identity(dim, dim), Vec::Zero(dim)}; }
  [[nodiscard]] Vec apply(const Vec& x) const { return R * x + c; }
};

enum class EventKind { Controllable, Disturbance };

struct Edge {
  std::string from, to;
  Polyhedron guard;
  std::string event;
  EventKind kind = EventKind::Controllable;
  Reset reset;
};

struct Location {
  std::string name;
  Polyhedron invariant;
  flow::Dynamics dynamics;
};

struct InitRegion {
  std::string location;
  Polyhedron set;
};

/// Successors (post) or predecessors; only Forward is implemented.
enum class Direction { Forward, Backward };

struct HybridSystem {
  int dim = 0;
  std::vector<Location> locations;
  std::vector<Edge> edges;
  std::vector<InitRegion> init;

  [[nodiscard]] int index_of(const std::string& name) const;  // -1 when absent
  [[nodiscard]] const Location& location(const std::string& name) const;

  /// Checks dimensions, that reset images of guard samples land in the target
  /// invariant and that initial regions lie in their invariants. Throws Model.
  void validate(double tol = 1e-6) const;
};

/// Per-location griddy regions with a common cell size.
struct RegionSet {
  int dim = 0;
  double cell = 0.0;
  std::map<std::string, GridRegion> regions;
  int generation = 0;  // k in Post^k

  RegionSet() = default;
  RegionSet(int dim, double cell) : dim(dim), cell(cell) {}

  /// Over-rasterization of the initial regions.
  static RegionSet from_init(const HybridSystem& H, double cell);
  /// One polyhedron per listed location, over-rasterized and clipped to the bounding box of G.
  static RegionSet from_polyhedra(const HybridSystem& H, const std::vector<InitRegion>& parts, double cell);

  [[nodiscard]] GridRegion at(const std::string& q) const;
  void add(const std::string& q, const GridRegion& g);
  [[nodiscard]] bool empty() const;
  [[nodiscard]] std::size_t size() const;
  [[nodiscard]] bool subset_of(const RegionSet& other) const;
  [[nodiscard]] RegionSet intersection(const RegionSet& other) const;

  friend bool operator==(const RegionSet& a, const RegionSet& b) {
    return a.dim == b.dim && a.cell == b.cell && a.regions == b.regions && a.generation == b.generation;
  }
};

struct PostParams {
  double cell = 0.05;
  double tau_q = 2.0;  // finite dwell horizon per location
  double dt = 0.1;
  double tol = 1e-10;
};

/// One application of the successor operator; always contains S.
RegionSet post(const HybridSystem& H, const RegionSet& S, const PostParams& params);

struct Verdict {
  bool yes = false;
  int k = 0;
  std::string witness_location;
  Vec witness;  // center of the witness cell
  RegionSet reached;
  std::vector<std::string> notes;
};

/// Iterates post until S meets S2 (yes) or max_k applications (unknown).
Verdict semi_decide_reach(const HybridSystem& H, const RegionSet& S1, const RegionSet& S2, int max_k,
                          const PostParams& params);

enum class StepKind { TimeStep, EdgeStep, SigmaStep, None };
std::string to_string(StepKind k);

struct Config {
  std::string q;
  Vec x;
};

/// A duration, an edge index, or an event label.
using StepLabel = std::variant<double, std::size_t, std::string>;

/// Checks that c1 -> c2 is a valid step of the given kind.
StepKind classify_step(const HybridSystem& H, const Config& c1, const Config& c2, const StepLabel& label,
                       double tol = 1e-6);

struct Replay {
  bool found = false;
  std::vector<Config> configs;
  std::vector<StepLabel> labels;
  std::vector<StepKind> kinds;  // classify_step result of each step
  double distance = 0.0;        // final distance to the witness
  bool validated = false;       // every step classified as non-None
};

/// Greedy concrete trajectory from sampled S1 points to within 2h of the witness.
Replay replay_witness(const HybridSystem& H, const RegionSet& S1, const Verdict& v, const PostParams& params);

}  // namespace reachkit::hybrid
