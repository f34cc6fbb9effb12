#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "reachkit/flow.hpp"
#include "reachkit/geometry.hpp"

using namespace reachkit;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

Face example2_face() {
  Face f;
  f.side_normals = {v2(1, 0), v2(-1, 0)};
  f.side_offsets = {std::sqrt(2.0), -1.0};
  f.base_normal = v2(0, 1);
  f.base_offset = 0.0;
  return f;
}

Mat rotation_generator() { return (Mat(2, 2) << 0, -1, 1, 0).finished(); }

// Published eta rows 1..4 and 1'..4' of the rotation example, in row form n.x - b <= 0.
Polyhedron published_first_eight() {
  const double s3 = std::sqrt(3.0);
  Polyhedron P(2);
  P.add_inequality(Halfspace(v2(1, -2.7566424), std::sqrt(2.0)));
  P.add_inequality(Halfspace(v2(-1, -2.7566424), -1.0));
  P.add_inequality(Halfspace(v2(0, -1), 0.0));
  P.add_inequality(Halfspace(v2(0, 1), 1.249999));
  P.add_inequality(Halfspace(v2(-0.5122958, 2.8873223), std::sqrt(2.0)));
  P.add_inequality(Halfspace(v2(-2.2443466, 1.8873223), -1.0));
  P.add_inequality(Halfspace(v2(-1, s3), 0.0));
  P.add_inequality(Halfspace(v2(0.5, -s3 / 2), 1.249999));
  return P;
}

// Samples points on the face segment/polytope in 2D via its vertices.
std::vector<Vec> sample_face_2d(const Face& f, int n) {
  const auto v = vertices_2d(f.as_polyhedron());
  std::vector<Vec> out;
  if (v.size() == 1) return {v[0]};
  for (int i = 0; i <= n; ++i) out.push_back(v[0] + (v[1] - v[0]) * (double(i) / n));
  return out;
}

bool same_set_by_sampling(const Face& a, const Face& b, double lo, double hi, int n, double tol) {
  const Polyhedron pa = a.as_polyhedron();
  const Polyhedron pb = b.as_polyhedron();
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const Vec x = v2(lo + (hi - lo) * i / n, lo + (hi - lo) * j / n);
      // Points well inside/outside both must agree; skip the tolerance band.
      const double da = pa.max_violation(x);
      const double db = pb.max_violation(x);
      if ((da <= 0.0) != (db <= tol) && (db <= 0.0) != (da <= tol)) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("normalize_and_orthogonalize leaves the orthonormal rotation-example face unchanged") {
  const Face f = example2_face();
  const Face g = normalize_and_orthogonalize(f);
  REQUIRE(g.side_count() == 2);
  CHECK(g.orthonormalized);
  for (int i = 0; i < 2; ++i) {
    CHECK(g.side_normals[i] == f.side_normals[i]);
    CHECK(g.side_offsets[i] == f.side_offsets[i]);
  }
  CHECK(g.base_normal == f.base_normal);
  CHECK(g.base_offset == f.base_offset);
}

TEST_CASE("normalize_and_orthogonalize projects a tilted side row") {
  Face f;
  f.side_normals = {v2(1, 1) / std::sqrt(2.0), v2(-1, 0)};
  f.side_offsets = {1.0, 0.0};
  f.base_normal = v2(0, 2);
  f.base_offset = 1.0;  // x2 = 0.5
  const Face g = normalize_and_orthogonalize(f);
  REQUIRE(g.side_count() == 2);
  CHECK(g.side_normals[0](0) == doctest::Approx(1.0));
  CHECK(g.side_normals[0](1) == doctest::Approx(0.0));
  CHECK(g.side_normals[0].dot(g.base_normal) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(g.base_normal.norm() == doctest::Approx(1.0));
  // Same segment: x1 in [0, sqrt2 - 0.5], x2 = 0.5.
  CHECK(same_set_by_sampling(f, g, -1.0, 2.0, 300, 1e-9));
  CHECK(g.contains(v2(std::sqrt(2.0) - 0.5, 0.5), 1e-12));
  CHECK_FALSE(g.contains(v2(std::sqrt(2.0) - 0.49, 0.5), 1e-12));
}

TEST_CASE("single-point face and error paths") {
  Face f;
  f.side_normals = {v2(1, 0), v2(-1, 0)};
  f.side_offsets = {2.0, -2.0};
  f.base_normal = v2(0, 3);
  f.base_offset = 3.0;
  const Face g = normalize_and_orthogonalize(f);
  const auto v = vertices_2d(g.as_polyhedron());
  REQUIRE(v.size() == 1);
  CHECK(v[0](0) == doctest::Approx(2.0));
  CHECK(v[0](1) == doctest::Approx(1.0));

  Face empty = f;
  empty.side_offsets = {1.0, -2.0};
  CHECK_THROWS_AS(normalize_and_orthogonalize(empty), Error);
  try {
    (void)normalize_and_orthogonalize(empty);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InfeasibleFace);
  }

  Face degenerate = f;
  degenerate.side_normals.push_back(v2(0, 1));  // parallel to base: x2 <= 0 while x2 = 1
  degenerate.side_offsets.push_back(0.0);
  try {
    (void)normalize_and_orthogonalize(degenerate);
    FAIL("expected DegenerateNormal");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateNormal);
  }

  Face vacuous = f;
  vacuous.side_normals.push_back(v2(0, 1));  // x2 <= 5 is implied
  vacuous.side_offsets.push_back(5.0);
  CHECK(normalize_and_orthogonalize(vacuous).side_count() == 2);
}

TEST_CASE("normalization is idempotent bit for bit") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int t = 0; t < 100; ++t) {
    const Halfspace h((Vec(3) << g(rng), g(rng), g(rng)).finished(), g(rng));
    const Halfspace once = h.normalized();
    const Halfspace twice = once.normalized();
    CHECK(once.normal == twice.normal);
    CHECK(once.offset == twice.offset);
    CHECK(once.normal.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
  const Face f = normalize_and_orthogonalize(example2_face());
  const Face ff = normalize_and_orthogonalize(f);
  CHECK(ff.side_normals == f.side_normals);
  CHECK(ff.side_offsets == f.side_offsets);
}

TEST_CASE("propagate_face: zero matrix is the identity") {
  const Face f = normalize_and_orthogonalize(example2_face());
  const Face g = propagate_face(f, Mat::Zero(2, 2), 0.7);
  for (int i = 0; i < f.side_count(); ++i) {
    CHECK((g.side_normals[i] - f.side_normals[i]).norm() < 1e-15);
    CHECK(g.side_offsets[i] == doctest::Approx(f.side_offsets[i]));
  }
  CHECK((g.base_normal - f.base_normal).norm() < 1e-15);
}

TEST_CASE("propagate_face: rotation example base row after pi/6") {
  const Face f = normalize_and_orthogonalize(example2_face());
  const Face g = propagate_face(f, rotation_generator(), std::numbers::pi / 6);
  CHECK(g.base_normal(0) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(g.base_normal(1) == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-12));
  CHECK(g.base_offset == doctest::Approx(0.0));
  // b1 = (sqrt3/2, 0.5), b1' = sqrt2 ; b2 = -b1, b2' = -1
  CHECK(g.side_normals[0](0) == doctest::Approx(std::sqrt(3.0) / 2));
  CHECK(g.side_normals[0](1) == doctest::Approx(0.5));
  CHECK(g.side_offsets[0] == doctest::Approx(std::sqrt(2.0)));
  CHECK(g.side_normals[1](0) == doctest::Approx(-std::sqrt(3.0) / 2));
  CHECK(g.side_offsets[1] == doctest::Approx(-1.0));
  for (int i = 0; i < 2; ++i) CHECK(std::abs(g.side_normals[i].dot(g.base_normal)) < 1e-12);
}

TEST_CASE("propagate_face: transported vertices satisfy the new rows") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Mat A(2, 2);
    A << g(rng), g(rng), g(rng), g(rng);
    A -= 1.5 * Mat::Identity(2, 2) * std::max(0.0, A.eigenvalues().real().maxCoeff() + 0.1);  // stable
    const double th = 2 * std::numbers::pi * u(rng);
    Face f;
    f.base_normal = v2(std::cos(th), std::sin(th));
    f.base_offset = u(rng);
    const Vec side = v2(-std::sin(th), std::cos(th));
    f.side_normals = {side, -side};
    f.side_offsets = {u(rng), u(rng)};
    f = normalize_and_orthogonalize(f);
    const double delta = u(rng);
    const Face fd = propagate_face(f, A, delta);
    const Mat E = flow::expm(A, delta);
    for (const auto& v : vertices_2d(f.as_polyhedron())) {
      const Vec w = E * v;
      CHECK(std::abs(fd.base_normal.dot(w) - fd.base_offset) < 1e-8);
      CHECK(fd.as_polyhedron().max_violation(w) < 1e-8);
    }
    CHECK(fd.base_normal.norm() == doctest::Approx(1.0));
    for (const auto& n : fd.side_normals) {
      CHECK(n.norm() == doctest::Approx(1.0));
      CHECK(std::abs(n.dot(fd.base_normal)) < 1e-10);
    }
  }
}

TEST_CASE("propagate_face composes") {
  const Mat A = (Mat(2, 2) << -0.3, -1.0, 1.2, -0.1).finished();
  const Face f = normalize_and_orthogonalize(example2_face());
  const Face two = propagate_face(propagate_face(f, A, 0.2), A, 0.35);
  const Face one = propagate_face(f, A, 0.55);
  CHECK((two.base_normal - one.base_normal).norm() < 1e-7);
  CHECK(two.base_offset == doctest::Approx(one.base_offset).epsilon(1e-7));
  // Membership agreement on points of either face and nearby points.
  for (const Vec& p : sample_face_2d(one, 200)) {
    CHECK(two.as_polyhedron().max_violation(p) < 1e-7);
    const Vec off = p + 1e-3 * one.base_normal;
    CHECK(one.as_polyhedron().max_violation(off) > 1e-7);
    CHECK(two.as_polyhedron().max_violation(off) > 1e-7);
  }
}

TEST_CASE("is_bounded examples") {
  CHECK(is_bounded(Polyhedron::box(v2(0, 0), v2(1, 1))));
  Polyhedron half(2);
  half.add_inequality(Halfspace(v2(1, 0), 0.0));
  CHECK_FALSE(is_bounded(half));
  CHECK(boundedness(half) == Boundedness::Unbounded);

  Polyhedron empty(2);
  empty.add_inequality(Halfspace(v2(1, 0), 0.0));
  empty.add_inequality(Halfspace(v2(-1, 0), -1.0));
  CHECK(boundedness(empty) == Boundedness::Empty);
  CHECK(is_bounded(empty));
}

TEST_CASE("is_bounded agrees with the recession-ray oracle") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.1, 1.0);
  int bounded_count = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 2;
    const int m = 3 + static_cast<int>(rng() % 4);
    Polyhedron P(n);
    std::vector<Vec> normals;
    for (int i = 0; i < m; ++i) {
      Vec a(n);
      for (int j = 0; j < n; ++j) a(j) = g(rng);
      normals.push_back(a);
      P.add_inequality(Halfspace(a, u(rng)));  // origin strictly inside
    }
    // Oracle: nonzero d with a_i.d <= 0 for all i. In 2D the candidate extreme
    // rays are perpendiculars of normals; in 3D, cross products of normal pairs.
    std::vector<Vec> candidates;
    for (size_t i = 0; i < normals.size(); ++i) {
      if (n == 2) {
        candidates.push_back(v2(-normals[i](1), normals[i](0)));
      } else {
        for (size_t j = i + 1; j < normals.size(); ++j) {
          const Eigen::Vector3d a = normals[i], b = normals[j];
          candidates.push_back(a.cross(b));
        }
      }
    }
    bool ray = false;
    for (const auto& c : candidates) {
      for (double s : {1.0, -1.0}) {
        const Vec d = s * c.normalized();
        bool ok = true;
        for (const auto& a : normals) ok = ok && a.dot(d) <= 1e-12;
        ray = ray || ok;
      }
    }
    CHECK(is_bounded(P) == !ray);
    bounded_count += ray ? 0 : 1;
  }
  CHECK(bounded_count > 20);
  CHECK(bounded_count < 180);
}

TEST_CASE("is_empty examples and sampling oracle") {
  Polyhedron P(2);
  P.add_inequality(Halfspace(v2(1, 0), 0.0));
  P.add_inequality(Halfspace(v2(-1, 0), -1.0));
  CHECK(is_empty(P));
  CHECK_FALSE(is_empty(Polyhedron::box(v2(0, 0), v2(1, 1))));

  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> box(-3.0, 3.0);
  int empties = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Polyhedron Q = Polyhedron::box(v2(-3, -3), v2(3, 3));
    for (int i = 0; i < 4; ++i) Q.add_inequality(Halfspace(v2(g(rng), g(rng)), u(rng)));
    bool sample_inside = false;
    for (int s = 0; s < 4000 && !sample_inside; ++s) {
      const Vec x = v2(box(rng), box(rng));
      sample_inside = Q.max_violation(x) < -1e-6;
    }
    const bool empty = is_empty(Q);
    if (sample_inside) CHECK_FALSE(empty);
    if (!empty) {
      const auto r = Q.maximize(Vec::Zero(2));
      CHECK(Q.max_violation(r.x) < 1e-8);
    }
    empties += empty ? 1 : 0;
  }
  CHECK(empties > 0);
}

TEST_CASE("vertices_2d on the published rotation-example polygon") {
  const auto v = vertices_2d(published_first_eight());
  const double s2 = std::sqrt(2.0), s3 = std::sqrt(3.0);
  const std::vector<Vec> expected = {v2(s2, 0),          v2(4.8600138, 1.249999), v2(4.2845099, 1.249999),
                                     v2(s3 / s2, 1 / s2), v2(s3 / 2, 0.5),         v2(0.575162, 0.154114),
                                     v2(1, 0)};
  CHECK(v.size() == expected.size());
  // each listed vertex, in counter-clockwise order
  size_t start = v.size();
  for (size_t i = 0; i < v.size(); ++i) {
    if ((v[i] - expected[0]).norm() < 1e-3) start = i;
  }
  REQUIRE(start < v.size());
  size_t k = start;
  for (size_t i = 0; i < expected.size(); ++i) {
    bool found = false;
    for (size_t step = 0; step < v.size() && !found; ++step) {
      found = (v[(k + step) % v.size()] - expected[i]).norm() < 1e-3;
      if (found) k = (k + step) % v.size();
    }
    CHECK_MESSAGE(found, "vertex " << i);
  }
}

TEST_CASE("vertices_2d: square, triangles, errors") {
  const auto sq = vertices_2d(Polyhedron::box(v2(0, 0), v2(1, 1)));
  REQUIRE(sq.size() == 4);
  double signed_area = 0.0;
  for (size_t i = 0; i < 4; ++i) {
    const Vec& p = sq[i];
    const Vec& q = sq[(i + 1) % 4];
    signed_area += p(0) * q(1) - q(0) * p(1);
  }
  CHECK(signed_area > 0.0);  // counter-clockwise

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec> pts = {v2(u(rng), u(rng)), v2(u(rng), u(rng)), v2(u(rng), u(rng))};
    const auto hull = convex_hull_2d(pts);
    if (hull.degenerate) continue;
    const Polyhedron& T = hull.polygon;
    const auto vs = vertices_2d(T);
    REQUIRE(vs.size() == 3);
    for (const auto& x : vs) {
      CHECK(T.max_violation(x) <= 1e-8);
      int tight = 0;
      for (const auto& h : T.inequalities()) tight += std::abs(h.eval(x)) <= 1e-8 ? 1 : 0;
      CHECK(tight >= 2);
    }
  }

  Polyhedron half(2);
  half.add_inequality(Halfspace(v2(1, 0), 0.0));
  try {
    (void)vertices_2d(half);
    FAIL("expected Unbounded2D");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Unbounded2D);
  }
  Polyhedron empty = Polyhedron::box(v2(0, 0), v2(1, 1));
  empty.add_inequality(Halfspace(v2(1, 1), -1.0));
  try {
    (void)vertices_2d(empty);
    FAIL("expected Empty2D");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Empty2D);
  }
}

TEST_CASE("convex_hull_2d") {
  const auto sq = convex_hull_2d({v2(0, 0), v2(1, 0), v2(1, 1), v2(0, 1), v2(0.5, 0.5)});
  CHECK(sq.polygon.inequalities().size() == 4);
  CHECK_FALSE(sq.degenerate);
  for (const auto& h : sq.polygon.inequalities()) CHECK(h.normal.norm() == doctest::Approx(1.0));

  // Hull of the rotation example's initial segment and its image at pi/6.
  const double s2 = std::sqrt(2.0), s3 = std::sqrt(3.0);
  const auto hull = convex_hull_2d({v2(1, 0), v2(s2, 0), v2(s3 / 2, 0.5), v2(s3 / s2, 1 / s2)});
  REQUIRE(hull.vertices.size() == 4);
  // zeta_1 = -x2 ; zeta_1' = -x1 + sqrt3 x2 (up to positive scale)
  bool saw_bottom = false, saw_top = false;
  for (const auto& h : hull.polygon.inequalities()) {
    if ((h.normal - v2(0, -1)).norm() < 1e-12) saw_bottom = std::abs(h.offset) < 1e-12;
    if ((h.normal - v2(-1, s3).normalized()).norm() < 1e-12) saw_top = std::abs(h.offset) < 1e-12;
  }
  CHECK(saw_bottom);
  CHECK(saw_top);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  std::vector<Vec> cloud;
  for (int i = 0; i < 300; ++i) cloud.push_back(v2(g(rng), g(rng)));
  const auto ch = convex_hull_2d(cloud);
  for (const auto& p : cloud) CHECK(ch.polygon.max_violation(p) <= 1e-12);

  const auto line = convex_hull_2d({v2(0, 0), v2(1, 1), v2(2, 2)});
  CHECK(line.degenerate);
  CHECK(line.polygon.inequalities().size() == 4);
  CHECK(line.polygon.contains(v2(1.5, 1.5)));
  CHECK_FALSE(line.polygon.contains(v2(2.5, 2.5)));
  CHECK_THROWS_AS(convex_hull_2d({v2(0, 0), v2(1, 1)}), Error);
}

TEST_CASE("intersect") {
  const Polyhedron box = Polyhedron::box(v2(0, 0), v2(2, 2));
  const Polyhedron same = intersect({box, Polyhedron::universe(2)});
  CHECK(same.inequalities().size() == 4);
  const Polyhedron self = intersect({box, box});
  CHECK(self.inequalities().size() == 4);

  const Polyhedron other = Polyhedron::box(v2(1, 1), v2(3, 3));
  const Polyhedron overlap = intersect({box, other});
  CHECK(area_2d(overlap) == doctest::Approx(1.0));
  const auto v = vertices_2d(overlap);
  CHECK(v.size() == 4);

  CHECK_THROWS_AS(intersect({box, Polyhedron::box(Vec::Zero(3), Vec::Ones(3))}), Error);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    const Vec x = v2(u(rng), u(rng));
    CHECK(self.contains(x) == box.contains(x));
  }
}
