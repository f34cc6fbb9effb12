#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reachkit/geometry.hpp"

namespace reachkit::poly {

/// One step of the flow pipe T0 = {e^{At} x0 : x0 in F0, t in [0, delta]}.
struct StepProblem {
  Face face;        // F0, orthonormalized
  Mat A;
  double delta = 0.0;
  double delta_min = 0.0;  // min over F0 of a_k^T A x
  double delta0 = 0.0;
  double M0 = 0.0;
  bool M0_bound_mode = false;
  Face face_delta;  // F_delta
};

/// Builds the problem: orthonormalizes, checks the outward-drift assumption,
/// computes M0 and F_delta. delta0 defaults to half the drift margin.
StepProblem make_problem(const Face& face, const Mat& A, double delta, std::optional<double> delta0 = std::nullopt);

enum class BoundMode { Sampled, Conservative };

/// Translation and rotation bounds. Index j holds l_{j+1}: j < k-1 rotated
/// sides, j = k-1 the cap, j = k..2k-2 side slabs, j = 2k-1 repeats the cap.
struct BoundSet {
  std::vector<double> l;
  std::vector<double> l_prime;
  BoundMode mode = BoundMode::Conservative;
  int k = 0;

  [[nodiscard]] double rotated(int i) const { return l[i]; }
  [[nodiscard]] double rotated_prime(int i) const { return l_prime[i]; }
  [[nodiscard]] double cap() const { return l[k - 1]; }
  [[nodiscard]] double cap_prime() const { return l_prime[k - 1]; }
  [[nodiscard]] double slab(int i) const { return l[k + i]; }
  [[nodiscard]] double slab_prime(int i) const { return l_prime[k + i]; }
};

/// min over the face of a_k^T A x; throws AssumptionA2Violated when <= 0.
double check_A2(const Face& face, const Mat& A);

/// Largest delta with M0 |A| (e^{|A| delta} - 1) <= d - d0; +inf when |A| or M0 is 0.
double select_delta(double M0, double normA, double d, double d0);

struct C1Report {
  bool holds = false;
  double min_value = 0.0;  // min of a_k^T A e^{At} x0 over the lattice
  bool c2 = false;         // a_k^T e^{At} x0 > b_k for t > 0
  bool c3 = false;         // a_k^T e^{At} x0 < b_k for t < 0
  explicit operator bool() const { return holds; }
};

/// Evaluates the drift condition on an nx-by-nt lattice of F0 x [-delta, delta].
C1Report check_C1(const StepProblem& prob, int nx = 60, int nt = 61);

BoundSet conservative_bounds(const StepProblem& prob);
/// Sup-estimates on an nx-by-nt lattice of F0 x (0, delta]; not certified.
BoundSet sampled_bounds(const StepProblem& prob, int nx, int nt);

enum class RowGroup { RotatedLower, BottomSupport, Cap, Slab, RotatedUpper, TopSupport, CapPrime, SlabPrime };
std::string to_string(RowGroup g);

struct RowInfo {
  RowGroup group;
  int index = 0;     // side index for rotated rows and slabs, 0 otherwise
  double l = 0.0;    // bound used by the row
};

struct Assembled {
  Polyhedron P;
  std::vector<RowInfo> rows;  // parallel to P.inequalities()
  BoundMode mode = BoundMode::Conservative;

  /// Rows of the given groups only, in assembly order.
  [[nodiscard]] Polyhedron subsystem(const std::vector<RowGroup>& groups) const;
  /// Rotated-lower rows, bottom support and cap: bounded whenever F0 is.
  [[nodiscard]] Polyhedron lower_system() const;
};

/// The 4k halfspaces: k-1 rotated-lower, bottom support, cap, k-1 slabs, then the
/// same four groups for F_delta. Rows keep their raw (non-unit) coefficients.
Assembled assemble_polyhedron(const StepProblem& prob, const BoundSet& bounds);

struct BloatedHull {
  Polyhedron P;
  Hull2D hull;
  double eps = 0.0;
};

/// M0 (e^{|A| delta} - 1 - |A| delta - 3/8 |A|^2 delta^2).
double bloat_eps(double M0, double normA, double delta);

/// Convex hull of the vertices of F0 and F_delta with every row pushed outward by eps.
BloatedHull bloat_hull(const Face& face, const Face& face_delta, const Mat& A, double delta,
                       std::optional<double> eps = std::nullopt);

struct StepOptions {
  BoundMode mode = BoundMode::Conservative;
  std::optional<double> delta0;
  int sample_nx = 200;
  int sample_nt = 200;
  bool intersect_hull = true;  // 2D only
};

struct StepPiece {
  StepProblem problem;
  BoundSet bounds;
  Assembled assembled;
  Polyhedron polygon;  // assembled rows, intersected with the bloated hull in 2D
  double t0 = 0.0;
};

struct StepResult {
  std::vector<StepPiece> pieces;  // chained when the drift condition forced a smaller step
  double delta_requested = 0.0;
  double delta_used = 0.0;
  bool shrunk = false;
  C1Report c1;
};

/// Orthonormalize, check drift, check C1 (shrinking and chaining the step when
/// it fails), compute bounds, assemble, and intersect with the bloated hull in 2D.
StepResult overapproximate_step(const Face& face, const Mat& A, double delta, const StepOptions& opts = {});

/// P_k = e^{A k delta} P0 for k = 1..steps.
std::vector<Polyhedron> propagate_tube(const Polyhedron& P0, const Mat& A, double delta, int steps);

/// About `count` points of the face (segment lattice in 2D, plane lattice otherwise).
std::vector<Vec> sample_face(const Face& face, int count);

}  // namespace reachkit::poly
