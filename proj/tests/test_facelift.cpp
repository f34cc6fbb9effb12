#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "reachkit/facelift.hpp"

using namespace reachkit;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

InitialSet unit_square() { return InitialSet::polyhedron(Polyhedron::box(v2(0, 0), v2(1, 1))); }

InitialSet unit_disk() {
  return InitialSet::level_set(Expr::parse("x1*x1 + x2*x2 - 1", 2), 2, v2(-1.5, -1.5), v2(1.5, 1.5));
}

flow::Dynamics rotation() { return flow::Dynamics::linear((Mat(2, 2) << 0, -1, 1, 0).finished()); }

FaceliftParams with(double h, TubeMode mode = TubeMode::Over) {
  FaceliftParams p;
  p.cell = h;
  p.mode = mode;
  return p;
}

void check_partition(const ReachTube& tube, double tau) {
  REQUIRE_FALSE(tube.segments.empty());
  CHECK(tube.segments.front().t0 == 0.0);
  for (std::size_t i = 0; i < tube.segments.size(); ++i) {
    CHECK(tube.segments[i].t1 > tube.segments[i].t0);
    if (i > 0) CHECK(tube.segments[i].t0 == tube.segments[i - 1].t1);
  }
  CHECK(tube.segments.back().t1 == doctest::Approx(tau));
}

void check_monotone(const ReachTube& tube) {
  CHECK(tube.initial.subset_of(tube.segments.front().accumulated));
  for (std::size_t i = 1; i < tube.segments.size(); ++i) {
    CHECK(tube.segments[i - 1].accumulated.subset_of(tube.segments[i].accumulated));
  }
}

}  // namespace

TEST_CASE("time grids") {
  const auto g = TimeGrid::uniform(0.3, 1.0);
  REQUIRE(g.intervals() == 4);
  CHECK(g.taus.back() == doctest::Approx(1.0));
  CHECK(TimeGrid::steps(0.25, 3).taus.back() == doctest::Approx(0.75));
  CHECK(TimeGrid::uniform(0.1, 0.0).intervals() == 0);
  CHECK_THROWS_AS(TimeGrid::uniform(0.0, 1.0), Error);
}

TEST_CASE("constant drift from the unit square covers every reach point") {
  const auto dyn = flow::Dynamics::parse({"1", "1"});
  const auto tube = reach_bounded_time(unit_square(), dyn, 1.0, TimeGrid::uniform(0.1, 1.0), with(0.02));
  check_partition(tube, 1.0);
  check_monotone(tube);
  CHECK(tube.segments.size() == 10);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int s = 0; s < 5000; ++s) {
    const double t = u(rng);
    const Vec x = v2(u(rng), u(rng)) + v2(t, t);
    CHECK(tube.occupancy.contains(x));
  }
  // X0 u A u B has area 3; allow a boundary layer of cells
  const double area = tube.occupancy.size() * 0.02 * 0.02;
  CHECK(area >= 3.0);
  CHECK(area <= 3.0 + 8 * 0.02 * 2.0);
}

TEST_CASE("zero horizon returns the initial set") {
  const auto dyn = flow::Dynamics::parse({"1", "1"});
  const auto tube = reach_bounded_time(unit_square(), dyn, 0.0, TimeGrid::uniform(0.1, 0.0), with(0.05));
  CHECK(tube.segments.empty());
  CHECK(tube.occupancy == tube.initial);
  CHECK(tube.occupancy == unit_square().rasterize(0.05, GridMode::Over));
}

TEST_CASE("rotation keeps the disk in place") {
  const auto tube = reach_bounded_time(unit_disk(), rotation(), 1.0, TimeGrid::uniform(0.1, 1.0), with(0.02));
  CHECK(hausdorff(tube.occupancy, tube.initial) <= 0.02 + 1e-12);
  check_partition(tube, 1.0);
}

TEST_CASE("non-uniform grids and clamped last step") {
  TimeGrid g;
  g.taus = {0.0, 0.05, 0.2, 0.3, 0.7};
  const auto dyn = flow::Dynamics::parse({"1", "0.5"});
  const auto tube = reach_bounded_time(unit_square(), dyn, 0.5, g, with(0.05));
  check_partition(tube, 0.5);
  CHECK(tube.segments.size() == 4);
  CHECK(tube.segments.back().t1 - tube.segments.back().t0 == doctest::Approx(0.2));
  TimeGrid short_grid;
  short_grid.taus = {0.0, 0.1};
  CHECK_THROWS_AS(reach_bounded_time(unit_square(), dyn, 0.5, short_grid, with(0.05)), Error);
}

TEST_CASE("under tube lies inside the over tube") {
  const auto dyn = flow::Dynamics::parse({"1", "1"});
  const auto grid = TimeGrid::uniform(0.1, 0.5);
  const auto over = reach_bounded_time(unit_square(), dyn, 0.5, grid, with(0.04));
  const auto under = reach_bounded_time(unit_square(), dyn, 0.5, grid, with(0.04, TubeMode::Under));
  REQUIRE(over.segments.size() == under.segments.size());
  for (std::size_t i = 0; i < over.segments.size(); ++i) {
    CHECK(under.segments[i].accumulated.subset_of(over.segments[i].accumulated));
  }
  CHECK(under.occupancy.subset_of(over.occupancy));
  check_monotone(under);
  // every under cell is truly reached: its center flows back into X0 within the horizon
  for (const auto& c : under.occupancy.cells()) {
    const Vec x = under.occupancy.cell_center(c);
    const double back = std::max({0.0, x(0) - 1.0, x(1) - 1.0});
    CHECK(back <= 0.5 + 1e-9);
    CHECK(std::min(x(0), x(1)) - back >= -1e-9);
  }

  const auto radial = flow::Dynamics::parse({"x1 - 0.5", "x2 - 0.5"});
  const auto X0 = InitialSet::polyhedron(Polyhedron::box(v2(0.3, 0.3), v2(0.7, 0.7)));
  const Polyhedron Xq = Polyhedron::box(v2(0, 0), v2(1, 1));
  const auto ro = reach_invariant(X0, radial, Xq, TimeGrid::uniform(0.1, 1.0), with(0.04));
  const auto ru = reach_invariant(X0, radial, Xq, TimeGrid::uniform(0.1, 1.0), with(0.04, TubeMode::Under));
  CHECK(ru.occupancy.subset_of(ro.occupancy));
  CHECK(ro.terminated);
}

TEST_CASE("polyhedral pieces for linear dynamics") {
  const auto X0 = InitialSet::polyhedron(Polyhedron::box(v2(1, -0.25), v2(1.5, 0.25)));
  const auto tube = reach_bounded_time(X0, rotation(), 0.4, TimeGrid::uniform(0.2, 0.4), with(0.02));
  std::size_t pieces = 0;
  for (const auto& seg : tube.segments) pieces += seg.polys.size();
  CHECK(pieces > 0);
  // each piece holds the flow of its outflow face over its interval
  const Mat A = rotation().matrix();
  for (const auto& seg : tube.segments) {
    for (const auto& P : seg.polys) CHECK(is_bounded(P));
  }
  // union of pieces and X0 covers sampled trajectories
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ux(1.0, 1.5), uy(-0.25, 0.25), ut(0.0, 0.4);
  for (int s = 0; s < 2000; ++s) {
    const double t = ut(rng);
    const Vec x = flow::expm(A, t) * v2(ux(rng), uy(rng));
    CHECK(tube.occupancy.contains(x));
  }
}

TEST_CASE("coverage pruning only drops points already covered") {
  const auto dyn = flow::Dynamics::parse({"-x2", "x1"});
  const auto X0 = InitialSet::polyhedron(Polyhedron::box(v2(0.5, -0.5), v2(1.5, 0.5)));
  const auto tube = reach_bounded_time(X0, dyn, 1.0, TimeGrid::uniform(0.1, 1.0), with(0.04));
  int seen = 0;
  for (const auto& pp : tube.pruned) {
    if (pp.exited) continue;
    ++seen;
    const GridRegion& before = pp.iteration == 0 ? tube.initial : tube.segments[pp.iteration - 1].accumulated;
    CHECK(before.contains(pp.point));
  }
  CHECK(seen > 0);
}

TEST_CASE("restarting from the occupancy matches one longer run") {
  const auto dyn = flow::Dynamics::parse({"1", "0.5"});
  const double h = 0.05;
  const auto first = reach_bounded_time(unit_square(), dyn, 0.5, TimeGrid::uniform(0.1, 0.5), with(h));
  const auto second =
      reach_bounded_time(InitialSet::cells(first.occupancy), dyn, 0.5, TimeGrid::uniform(0.1, 0.5), with(h));
  const auto whole = reach_bounded_time(unit_square(), dyn, 1.0, TimeGrid::uniform(0.1, 1.0), with(h));
  CHECK(hausdorff(second.occupancy, whole.occupancy) <= 2 * h + 1e-12);
}

TEST_CASE("drift through a box terminates") {
  const auto dyn = flow::Dynamics::parse({"1", "0"});
  const Polyhedron Xq = Polyhedron::box(v2(0, 0), v2(3, 1));
  const double dt = 0.1, h = 0.02;
  for (const auto mode : {TubeMode::Over, TubeMode::Under}) {
    const auto tube = reach_invariant(unit_square(), dyn, Xq, TimeGrid::uniform(dt, 1.0), with(h, mode));
    CHECK(tube.terminated);
    CHECK_FALSE(tube.iteration_cap);
    CHECK(tube.iterations <= static_cast<int>(std::ceil(2.0 / dt)) + 1);
    const auto target = rasterize_polyhedron(Xq, h, mode == TubeMode::Over ? GridMode::Over : GridMode::Under,
                                             v2(-1, -1), v2(4, 2));
    CHECK(hausdorff(tube.occupancy, target) <= 2 * h + 1e-12);
    check_monotone(tube);
    for (const auto& pp : tube.pruned) {
      if (pp.exited) CHECK(pp.point(0) >= 3.0 - dt - h - 1e-9);
    }
  }
}

TEST_CASE("periodic orbits and a spiral sink hit the iteration cap") {
  const Polyhedron Xq = Polyhedron::box(v2(-2, -2), v2(2, 2));
  const auto X0 = InitialSet::polyhedron(Polyhedron::box(v2(0.5, -0.25), v2(1.0, 0.25)));
  auto p = with(0.04);
  p.max_iters = 30;  // 3 time units, short of one period
  const auto rot = reach_invariant(X0, rotation(), Xq, TimeGrid::uniform(0.1, 1.0), p);
  CHECK(rot.iteration_cap);
  CHECK_FALSE(rot.terminated);
  CHECK(rot.iterations == 30);

  const auto spiral = flow::Dynamics::linear((Mat(2, 2) << -0.1, -1, 1, -0.1).finished());
  const auto sp = reach_invariant(X0, spiral, Xq, TimeGrid::uniform(0.2, 2.0), with(0.04));
  CHECK(sp.iteration_cap);
  CHECK(sp.iterations == 100);
}

TEST_CASE("invariant precondition") {
  const auto dyn = flow::Dynamics::parse({"1", "0"});
  CHECK_THROWS_AS(reach_invariant(unit_square(), dyn, Polyhedron::box(v2(0.2, 0), v2(3, 1)),
                                  TimeGrid::uniform(0.1, 1.0), with(0.05)),
                  Error);
}

TEST_CASE("literal under branch keeps only violating samples") {
  const auto dyn = flow::Dynamics::parse({"1", "0"});
  const Polyhedron Xq = Polyhedron::box(v2(0, 0), v2(3, 1));
  auto p = with(0.05, TubeMode::Under);
  p.literal_under_branch = true;
  const auto tube = reach_invariant(unit_square(), dyn, Xq, TimeGrid::uniform(0.1, 1.0), p);
  for (const auto& seg : tube.segments) {
    for (const auto& c : seg.cells.cells()) CHECK_FALSE(Xq.contains(seg.cells.cell_center(c), -0.01));
  }
}

TEST_CASE("boundary evolution matches whole-set evolution") {
  const auto ex1 = check_boundary_equivalence(unit_square(), flow::Dynamics::parse({"1", "1"}), 1.0, 0.02);
  CHECK(ex1.pass);
  CHECK(ex1.gap <= 0.04 + 1e-12);
  const auto sq = InitialSet::polyhedron(Polyhedron::box(v2(0.5, -0.5), v2(1.5, 0.5)));
  const auto rot = check_boundary_equivalence(sq, rotation(), 1.0, 0.02);
  CHECK(rot.pass);
  const auto zero = check_boundary_equivalence(unit_square(), flow::Dynamics::parse({"1", "1"}), 0.0, 0.05);
  CHECK(zero.gap == 0.0);
  CHECK(zero.diff_full_boundary == 0);
  CHECK(zero.diff_full_outflow == 0);
}

TEST_CASE("tube export") {
  const auto dyn = flow::Dynamics::parse({"1", "1"});
  const auto tube = reach_bounded_time(unit_square(), dyn, 0.2, TimeGrid::uniform(0.1, 0.2), with(0.1));
  const auto dir = std::filesystem::temp_directory_path() / "reachkit_export_test";
  std::filesystem::remove_all(dir);
  const auto files = export_tube(tube, dir.string());
  REQUIRE(files.size() == 3);
  std::ifstream man(files.back());
  std::string line;
  int rows = 0;
  std::getline(man, line);
  CHECK(line == "segment,t0,t1,delta,h,mode,cells,file");
  while (std::getline(man, line)) ++rows;
  CHECK(rows == 2);
  std::ifstream seg(files[0]);
  std::getline(seg, line);
  CHECK(line == "segment,mode,x1,x2");
  int cells = 0;
  while (std::getline(seg, line)) ++cells;
  CHECK(cells == static_cast<int>(tube.segments[0].cells.size()));
  std::filesystem::remove_all(dir);
}
