#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reachkit/boundary.hpp"
#include "reachkit/grid.hpp"
#include "reachkit/polyapprox.hpp"

namespace reachkit {

/// 0 = tau_0 < tau_1 < ... ; the last step is clamped to the horizon.
struct TimeGrid {
  std::vector<double> taus;

  static TimeGrid uniform(double dt, double tau);
  /// dt-spaced grid with `steps` intervals.
  static TimeGrid steps(double dt, int steps);
  [[nodiscard]] int intervals() const { return static_cast<int>(taus.size()) - 1; }
};

enum class TubeMode { Over, Under, ExactSampled };
std::string to_string(TubeMode m);

struct FaceliftParams {
  double cell = 0.02;        // grid cell size h
  double spacing = 0.0;      // boundary sample spacing; 0 means cell / 2
  TubeMode mode = TubeMode::Over;
  double tol = 1e-10;        // integrator tolerance
  double member_tol = 1e-8;  // set membership slack for flowed points
  bool use_polyapprox = true;  // linear dynamics with a polyhedral initial set
  bool literal_under_branch = false;
  int max_iters = 0;  // reach_invariant only; 0 derives it from tau_max or the grid
  std::optional<double> tau_max;  // bound on exit times, used for the default max_iters
};

struct TubeSegment {
  double t0 = 0.0, t1 = 0.0;
  GridRegion cells;        // T_i as marked in the tube's mode
  GridRegion accumulated;  // X+(t1)
  std::vector<Polyhedron> polys;  // polyhedral pieces when available
  int front_size = 0;
  int pruned = 0;
  int exited = 0;  // front points dropped for leaving the invariant
};

struct PrunedPoint {
  Vec point;       // advected position that was pruned
  int iteration = 0;
  bool exited = false;  // true: removed by the invariant test rather than coverage
};

struct ReachTube {
  std::vector<TubeSegment> segments;
  TubeMode direction = TubeMode::Over;
  double cell = 0.0;
  GridRegion initial;    // rasterized X0
  GridRegion occupancy;  // X+ at the last time reached
  bool front_collapsed = false;  // the front emptied before the horizon
  bool terminated = false;       // reach_invariant: front emptied
  bool iteration_cap = false;    // reach_invariant: stopped by max_iters
  int iterations = 0;
  std::vector<PrunedPoint> pruned;
  std::vector<std::string> notes;

  [[nodiscard]] double end_time() const { return segments.empty() ? 0.0 : segments.back().t1; }
};

/// Reach set over [0, tau] by evolving the outflow part of the boundary.
ReachTube reach_bounded_time(const InitialSet& init, const flow::Dynamics& dyn, double tau, const TimeGrid& grid,
                             const FaceliftParams& params = {});

/// Reach set while staying inside Xq, iterated until the front empties or max_iters.
ReachTube reach_invariant(const InitialSet& init, const flow::Dynamics& dyn, const Polyhedron& Xq, const TimeGrid& grid,
                          const FaceliftParams& params = {});

struct EquivalenceReport {
  GridRegion full_set, full_boundary, outflow_only;
  std::size_t diff_full_boundary = 0, diff_full_outflow = 0, diff_boundary_outflow = 0;
  double gap = 0.0;  // largest pairwise Hausdorff distance
  double cell = 0.0;
  bool pass = false;  // gap <= 2 h
};

/// Compares the evolution of the whole set, of its whole boundary, and of the
/// outflow front over [0, tau].
EquivalenceReport check_boundary_equivalence(const InitialSet& init, const flow::Dynamics& dyn, double tau, double h,
                                             double dt = 0.0);

/// One CSV per segment (cell centers with mode tag) plus manifest.csv.
std::vector<std::string> export_tube(const ReachTube& tube, const std::string& dir);

}  // namespace reachkit
