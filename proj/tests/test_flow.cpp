#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "reachkit/flow.hpp"

using reachkit::Vec;
using reachkit::Mat;
using reachkit::Face;
using reachkit::Error;
using reachkit::ErrorCode;
using reachkit::flow::Dynamics;
using reachkit::flow::NormBound;
using reachkit::flow::expm;
using reachkit::flow::max_norm_over_face;
using reachkit::flow::operator_norm;
using reachkit::flow::reverse_flow;
using reachkit::flow::rk4;
using reachkit::flow::rk4_steps;
using reachkit::flow::flow;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

Mat taylor_exp(const Mat& M) {
  Mat sum = Mat::Identity(M.rows(), M.cols());
  Mat term = sum;
  for (int k = 1; k < 200; ++k) {
    term = term * M / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

Mat random_matrix(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Mat A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = g(rng);
  return A;
}

Dynamics rotation() { return Dynamics::linear((Mat(2, 2) << 0, -1, 1, 0).finished()); }

}  // namespace

TEST_CASE("expm basics") {
  CHECK((expm(Mat::Zero(3, 3), 2.0) - Mat::Identity(3, 3)).norm() == 0.0);
  const Mat R = expm((Mat(2, 2) << 0, -1, 1, 0).finished(), std::numbers::pi / 2);
  CHECK(R(0, 0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(R(1, 0) == doctest::Approx(1.0));
  CHECK(R(0, 1) == doctest::Approx(-1.0));
  const Mat D = expm((Mat(2, 2) << 1, 0, 0, -2).finished(), 0.5);
  CHECK(D(0, 0) == doctest::Approx(std::exp(0.5)));
  CHECK(D(1, 1) == doctest::Approx(std::exp(-1.0)));
  CHECK_THROWS_AS(expm(Mat::Constant(2, 2, NAN)), Error);
}

TEST_CASE("expm agrees with a long Taylor series") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 3;
    Mat A = random_matrix(rng, n);
    const double t = u(rng) / A.norm();
    const Mat E = expm(A, t);
    const Mat T = taylor_exp(A * t);
    CHECK((E - T).cwiseAbs().maxCoeff() <= 1e-11 * std::max(1.0, T.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("expm inverse property") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.5, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 3;
    const Mat A = random_matrix(rng, n);
    const double t = u(rng) / operator_norm(A);
    const Mat P = expm(A, t) * expm(-A, t);
    // rounding scales with the conditioning of e^{At}
    const double scale = expm(A, t).norm() * expm(-A, t).norm();
    CHECK((P - Mat::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, scale / 100.0));
  }
}

TEST_CASE("operator_norm") {
  CHECK(operator_norm((Mat(2, 2) << 0, -1, 1, 0).finished()) == doctest::Approx(1.0));
  CHECK(operator_norm(Mat::Zero(3, 3)) == 0.0);
  CHECK(operator_norm((Mat(2, 2) << 3, 0, 0, -2).finished()) == doctest::Approx(3.0));
  CHECK(operator_norm((Mat(2, 2) << 0, 0, 0, 5).finished()) == doctest::Approx(5.0));
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const Mat A = random_matrix(rng, 2 + trial % 4);
    const double s = Eigen::JacobiSVD<Mat>(A).singularValues()(0);
    CHECK(operator_norm(A) == doctest::Approx(s).epsilon(1e-9));
  }
}

TEST_CASE("flow of simple fields") {
  const Vec x0 = v2(0.3, -0.2);
  CHECK(flow(rotation(), x0, 0.0) == x0);

  const Dynamics drift = Dynamics::parse({"2", "-0.5"});
  const Vec d = flow(drift, v2(0, 0), 1.0);
  CHECK(d(0) == doctest::Approx(2.0));
  CHECK(d(1) == doctest::Approx(-0.5));

  const Dynamics circ = Dynamics::parse({"-x2", "x1"});
  const Vec c = flow(circ, v2(1, 0), std::numbers::pi / 6);
  CHECK(std::abs(c(0) - std::sqrt(3.0) / 2) < 1e-8);
  CHECK(std::abs(c(1) - 0.5) < 1e-8);

  const Vec r = flow(rotation(), v2(1, 0), std::numbers::pi / 6);
  CHECK(r(0) == doctest::Approx(std::sqrt(3.0) / 2));
  CHECK(r(1) == doctest::Approx(0.5));

  CHECK_THROWS_AS(flow(rotation(), x0, -1.0), Error);
  const Dynamics blow = Dynamics::parse({"exp(x1)"});
  try {
    (void)flow(blow, Vec::Constant(1, 5.0), 10.0, 1e-4);
    FAIL("expected NonFiniteState");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteState);
  }
}

TEST_CASE("reverse flow undoes the flow") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Dynamics nl = Dynamics::parse({"x2", "-sin(x1) - 0.1*x2"});
  const Dynamics lin = Dynamics::linear((Mat(2, 2) << -0.2, 1.0, -1.0, -0.3).finished());
  for (int s = 0; s < 30; ++s) {
    const Vec x = v2(u(rng), u(rng));
    const double t = 1.0 + u(rng) * 0.5;
    CHECK((reverse_flow(nl, flow(nl, x, t), t) - x).norm() < 1e-7);
    CHECK((reverse_flow(lin, flow(lin, x, t), t) - x).norm() < 1e-10);
    CHECK((reverse_flow(lin, x, t) - expm(lin.matrix(), -t) * x).norm() < 1e-13);
  }
}

TEST_CASE("semigroup and linearity") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Dynamics nl = Dynamics::parse({"x2", "-sin(x1) - 0.1*x2"});
  for (int s = 0; s < 30; ++s) {
    const Vec x = v2(u(rng), u(rng));
    const double a = u(rng), b = u(rng);
    CHECK((flow(nl, flow(nl, x, a), b) - flow(nl, x, a + b)).norm() < 1e-7);

    const Mat A = random_matrix(rng, 2) * 0.5;
    const Dynamics lin = Dynamics::linear(A);
    const Vec y = v2(u(rng), u(rng));
    const double al = u(rng) * 3 - 1.5, be = u(rng) * 3 - 1.5;
    const Vec lhs = flow(lin, al * x + be * y, a);
    const Vec rhs = al * flow(lin, x, a) + be * flow(lin, y, a);
    CHECK((lhs - rhs).norm() < 1e-9);
  }
}

TEST_CASE("rk4 is fourth order") {
  const auto f = [](const Vec& x) { return v2(-x(1), x(0)); };
  const double t = 2.0;
  const Vec exact = v2(std::cos(t), std::sin(t));
  const double e1 = (rk4(f, v2(1, 0), t, 10) - exact).norm();
  const double e2 = (rk4(f, v2(1, 0), t, 20) - exact).norm();
  const double ratio = e1 / e2;
  CHECK(ratio >= 12.0);
  CHECK(ratio <= 20.0);
  CHECK(rk4_steps(1.0, 1e-12) == 1000);
  CHECK(rk4_steps(1.0, 1e-2) == 32);
}

TEST_CASE("jacobian") {
  const Dynamics nl = Dynamics::parse({"x1*x2", "sin(x1)"});
  const Mat J = nl.jacobian(v2(0.5, 2.0));
  CHECK(J(0, 0) == doctest::Approx(2.0));
  CHECK(J(0, 1) == doctest::Approx(0.5));
  CHECK(J(1, 0) == doctest::Approx(std::cos(0.5)));
  CHECK(J(1, 1) == doctest::Approx(0.0));
  CHECK_THROWS_AS((void)nl.matrix(), Error);
}

TEST_CASE("max_norm_over_face") {
  Face f;
  f.side_normals = {v2(1, 0), v2(-1, 0)};
  f.side_offsets = {std::sqrt(2.0), -1.0};
  f.base_normal = v2(0, 1);
  f.base_offset = 0.0;
  const NormBound m = max_norm_over_face(f);
  CHECK(m.value == doctest::Approx(std::sqrt(2.0)));
  CHECK_FALSE(m.bound_mode);

  Face point = f;
  point.side_offsets = {0.0, 0.0};
  CHECK(max_norm_over_face(point).value == doctest::Approx(0.0));

  Face open = f;
  open.side_normals = {v2(1, 0)};
  open.side_offsets = {1.0};
  try {
    (void)max_norm_over_face(open);
    FAIL("expected UnboundedFace");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnboundedFace);
  }

  Face cube;
  cube.base_normal = (Vec(3) << 0, 0, 1).finished();
  cube.base_offset = 1.0;
  for (int j = 0; j < 2; ++j) {
    cube.side_normals.push_back(Vec::Unit(3, j));
    cube.side_offsets.push_back(1.0);
    cube.side_normals.push_back(-Vec::Unit(3, j));
    cube.side_offsets.push_back(1.0);
  }
  const NormBound c = max_norm_over_face(cube);
  CHECK(c.bound_mode);
  CHECK(c.value >= std::sqrt(3.0) - 1e-9);

  // sampled oracle for random 2D segments
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 30; ++trial) {
    const double lo = u(rng), hi = lo + std::abs(u(rng)), y = u(rng);
    Face s = f;
    s.side_offsets = {hi, -lo};
    s.base_offset = y;
    double best = 0.0;
    for (int i = 0; i <= 1000; ++i) best = std::max(best, v2(lo + (hi - lo) * i / 1000.0, y).norm());
    CHECK(max_norm_over_face(s).value == doctest::Approx(best).epsilon(1e-9));
  }
}
