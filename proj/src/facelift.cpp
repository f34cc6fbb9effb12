#include "reachkit/facelift.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>

namespace reachkit {

TimeGrid TimeGrid::uniform(double dt, double tau) {
  if (!(dt > 0.0)) throw Error(ErrorCode::PreconditionViolated, "time step must be positive");
  if (tau < 0.0) throw Error(ErrorCode::PreconditionViolated, "horizon must be nonnegative");
  TimeGrid g;
  g.taus.push_back(0.0);
  const int n = static_cast<int>(std::ceil(tau / dt - 1e-9));
  for (int i = 1; i <= n; ++i) g.taus.push_back(std::min(tau, i * dt));
  return g;
}

TimeGrid TimeGrid::steps(double dt, int steps) {
  if (!(dt > 0.0)) throw Error(ErrorCode::PreconditionViolated, "time step must be positive");
  TimeGrid g;
  for (int i = 0; i <= steps; ++i) g.taus.push_back(i * dt);
  return g;
}

std::string to_string(TubeMode m) {
  switch (m) {
    case TubeMode::Over: return "over";
    case TubeMode::Under: return "under";
    case TubeMode::ExactSampled: return "exact-sampled";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct FrontPoint {
  Vec x;
  Vec origin;  // boundary sample it started from
};

struct Front {
  std::vector<FrontPoint> pts;
  std::vector<std::pair<int, int>> links;
};

// Buckets points by cell for radius queries no larger than the cell size.
class PointBuckets {
 public:
  PointBuckets(int dim, double h) : grid_(dim, h) {}

  void add(const Vec& x) { buckets_[grid_.cell_of(x)].push_back(x); }

  bool any_within(const Vec& x, double r) const {
    if (buckets_.empty()) return false;
    const CellIndex c = grid_.cell_of(x);
    const int d = grid_.dim();
    CellIndex n = c;
    const int span = static_cast<int>(std::ceil(r / grid_.cell_size()));
    std::vector<int> off(d, -span);
    while (true) {
      for (int j = 0; j < d; ++j) n[j] = c[j] + off[j];
      if (auto it = buckets_.find(n); it != buckets_.end()) {
        for (const auto& y : it->second) {
          if ((y - x).norm() <= r) return true;
        }
      }
      int j = 0;
      for (; j < d; ++j) {
        if (off[j] < span) {
          ++off[j];
          break;
        }
        off[j] = -span;
      }
      if (j == d) return false;
    }
  }

 private:
  GridRegion grid_;
  std::map<CellIndex, std::vector<Vec>> buckets_;
};

class Engine {
 public:
  Engine(const InitialSet& init, const flow::Dynamics& dyn, const FaceliftParams& p, const Polyhedron* Xq)
      : init_(init), dyn_(dyn), rev_(dyn.negated()), p_(p), Xq_(Xq), h_(p.cell),
        hb_(p.spacing > 0.0 ? p.spacing : p.cell / 2.0) {
    if (!(h_ > 0.0)) throw Error(ErrorCode::PreconditionViolated, "cell size must be positive");
    if (dyn.dim() != init.dim()) throw Error(ErrorCode::DimMismatch, "dynamics and initial set dimensions differ");
    if (Xq && Xq->dim() != init.dim()) throw Error(ErrorCode::DimMismatch, "invariant and initial set dimensions differ");
  }

  ReachTube run(const TimeGrid& grid, double tau, int max_iters);

 private:
  [[nodiscard]] bool in_invariant(const Vec& x) const { return !Xq_ || Xq_->contains(x, p_.member_tol); }

  // Samples per interval of length t starting at x so each hop is about h/2.
  int samples_for(const Vec& x, double t, const flow::Dynamics& d) const {
    const double v = d.field(x).norm();
    const double n = std::ceil(t * v / (0.5 * h_));
    if (!(n < 1e6)) throw Error(ErrorCode::StepTooCoarse, "flow too fast for the cell size");
    return std::max(1, static_cast<int>(n));
  }

  // Backward search from x for up to `horizon`: does psi(x, s) enter X0 while staying in Xq?
  struct Search {
    Vec pos;
    double searched = 0.0;
    double found = kInf;
    bool dead = false;
  };
  void extend(Search& s, double horizon) const;
  bool certified(const Vec& x, double horizon) const {
    Search s{x};
    extend(s, horizon);
    return s.found <= horizon;
  }
  bool corner_certified(const CellIndex& corner, double horizon);

  void init_front();
  void resample(Front& next, double t_end) const;
  void polyhedral_pieces(TubeSegment& seg, double t0, double dt);

  const InitialSet& init_;
  const flow::Dynamics& dyn_;
  flow::Dynamics rev_;
  FaceliftParams p_;
  const Polyhedron* Xq_;
  double h_, hb_;
  Front front_;
  std::map<CellIndex, Search> corners_;
  std::vector<Face> faces_;  // outflow faces for polyhedral pieces
  bool faces_ready_ = false;
  ReachTube tube_;
};

void Engine::extend(Search& s, double horizon) const {
  if (s.searched == 0.0 && s.found == kInf && !s.dead) {
    if (!in_invariant(s.pos)) {
      s.dead = true;
      return;
    }
    if (init_.contains(s.pos, p_.member_tol)) {
      s.found = 0.0;
      return;
    }
  }
  while (!s.dead && s.found == kInf && s.searched < horizon) {
    // chunks keep step counts bounded when speed varies along the path
    const double chunk = std::min(horizon - s.searched, std::max(h_, 0.25 * horizon));
    const int n = samples_for(s.pos, chunk, rev_);
    const auto path = flow::flow_path(rev_, s.pos, chunk, n, p_.tol);
    for (int j = 1; j <= n; ++j) {
      if (!in_invariant(path[j])) {
        s.dead = true;
        break;
      }
      if (init_.contains(path[j], p_.member_tol)) {
        s.found = s.searched + chunk * j / n;
        break;
      }
    }
    s.pos = path.back();
    s.searched += chunk;
  }
}

bool Engine::corner_certified(const CellIndex& corner, double horizon) {
  auto it = corners_.find(corner);
  if (it == corners_.end()) {
    Vec x(init_.dim());
    for (int j = 0; j < init_.dim(); ++j) x(j) = corner[j] * h_;
    it = corners_.emplace(corner, Search{x}).first;
  }
  extend(it->second, horizon);
  return it->second.found <= horizon;
}

void Engine::init_front() {
  const BoundaryFront bf = classify_boundary(init_, dyn_, hb_);
  std::vector<int> remap(bf.size(), -1);
  for (int i : bf.s1_plus()) {
    remap[i] = static_cast<int>(front_.pts.size());
    front_.pts.push_back({bf.points[i], bf.points[i]});
  }
  for (const auto& [a, b] : bf.links) {
    if (remap[a] >= 0 && remap[b] >= 0) front_.links.emplace_back(remap[a], remap[b]);
  }
}

void Engine::resample(Front& next, double t_end) const {
  if (init_.dim() != 2) return;
  std::vector<std::pair<int, int>> work = next.links, done;
  std::vector<int> depth(work.size(), 0);
  while (!work.empty()) {
    auto [a, b] = work.back();
    const int dep = depth.back();
    work.pop_back();
    depth.pop_back();
    if ((next.pts[a].x - next.pts[b].x).norm() <= 2.0 * hb_ || dep >= 8) {
      done.emplace_back(a, b);
      continue;
    }
    const Vec origin = 0.5 * (next.pts[a].origin + next.pts[b].origin);
    const int n = samples_for(origin, t_end, dyn_);
    const auto path = flow::flow_path(dyn_, origin, t_end, n, p_.tol);
    bool inside = true;
    for (const auto& y : path) inside = inside && in_invariant(y);
    if (!inside) continue;  // the link straddles an exit; drop it
    const int m = static_cast<int>(next.pts.size());
    next.pts.push_back({path.back(), origin});
    work.emplace_back(a, m);
    depth.push_back(dep + 1);
    work.emplace_back(m, b);
    depth.push_back(dep + 1);
  }
  std::sort(done.begin(), done.end());
  next.links = done;
}

void Engine::polyhedral_pieces(TubeSegment& seg, double t0, double dt) {
  if (!p_.use_polyapprox || !dyn_.is_linear() || !init_.is_polyhedron()) return;
  const Mat& A = dyn_.matrix();
  if (!faces_ready_) {
    faces_ready_ = true;
    const Polyhedron& P = init_.as_polyhedron();
    const auto& rows = P.inequalities();
    for (size_t i = 0; i < rows.size(); ++i) {
      Face f;
      f.base_normal = rows[i].normal;
      f.base_offset = rows[i].offset;
      for (size_t j = 0; j < rows.size(); ++j) {
        if (j == i) continue;
        f.side_normals.push_back(rows[j].normal);
        f.side_offsets.push_back(rows[j].offset);
      }
      try {
        f = normalize_and_orthogonalize(f);
        (void)poly::check_A2(f, A);
        faces_.push_back(f);
      } catch (const Error& e) {
        tube_.notes.push_back("face " + std::to_string(i) + " has no polyhedral pieces: " + e.what());
      }
    }
  }
  for (const auto& f : faces_) {
    try {
      const Face ft = t0 == 0.0 ? f : propagate_face(f, A, t0);
      const auto step = poly::overapproximate_step(ft, A, dt);
      for (const auto& piece : step.pieces) seg.polys.push_back(piece.polygon);
    } catch (const Error& e) {
      tube_.notes.push_back(std::string("polyhedral piece skipped: ") + e.what());
    }
  }
}

ReachTube Engine::run(const TimeGrid& grid, double tau, int max_iters) {
  const int d = init_.dim();
  const bool under = p_.mode == TubeMode::Under;
  tube_.direction = p_.mode;
  tube_.cell = h_;
  GridRegion over = init_.rasterize(h_, GridMode::Over);
  GridRegion under_occ = under ? init_.rasterize(h_, GridMode::Under) : GridRegion(d, h_, GridMode::Under);
  tube_.initial = under ? under_occ : over;
  GridRegion pending(d, h_, GridMode::Under);  // under-mode candidates awaiting certification

  init_front();
  if (grid.taus.empty() || grid.taus.front() != 0.0) throw Error(ErrorCode::PreconditionViolated, "time grid must start at 0");
  for (size_t i = 1; i < grid.taus.size(); ++i) {
    if (!(grid.taus[i] > grid.taus[i - 1])) throw Error(ErrorCode::PreconditionViolated, "time grid must increase");
  }

  double t = 0.0;
  int iter = 0;
  const bool bounded = !Xq_;
  while (true) {
    if (bounded && t >= tau - 1e-12) break;
    if (!bounded && (front_.pts.empty() || iter >= max_iters)) break;
    double dt;
    if (iter + 1 < static_cast<int>(grid.taus.size())) {
      dt = grid.taus[iter + 1] - grid.taus[iter];
    } else if (grid.taus.size() >= 2) {
      dt = grid.taus.back() - grid.taus[grid.taus.size() - 2];
    } else {
      throw Error(ErrorCode::PreconditionViolated, "time grid has no intervals");
    }
    if (bounded && t + dt > tau) dt = tau - t;
    const double t1 = t + dt;

    TubeSegment seg;
    seg.t0 = t;
    seg.t1 = t1;
    seg.front_size = static_cast<int>(front_.pts.size());
    GridRegion Ti(d, h_);       // every advected path
    GridRegion Ti_keep(d, h_);  // paths of points kept after the invariant test
    GridRegion Ui(d, h_);       // samples outside the invariant
    PointBuckets Vi(d, h_);

    // advect
    int S = 1;
    for (const auto& fp : front_.pts) S = std::max(S, samples_for(fp.x, dt, dyn_));
    std::vector<std::vector<Vec>> paths(front_.pts.size());
    std::vector<bool> exits(front_.pts.size(), false);
    for (size_t k = 0; k < front_.pts.size(); ++k) {
      paths[k] = flow::flow_path(dyn_, front_.pts[k].x, dt, S, p_.tol);
      const auto& path = paths[k];
      for (int j = 0; j < S; ++j) {
        if ((path[j + 1] - path[j]).norm() > 2.0 * h_) {
          throw Error(ErrorCode::StepTooCoarse, "front sample moved more than two cells in one substep");
        }
        Ti.mark_segment(path[j], path[j + 1]);
      }
      if (!bounded) {
        for (int j = 0; j <= S; ++j) {
          if (in_invariant(path[j])) continue;
          exits[k] = true;
          for (int m = j; m <= S; ++m) {
            Ui.mark_point(path[m]);
            Vi.add(path[m]);
          }
          const double back = dt;
          const auto bpath = flow::flow_path(rev_, path[j], back, samples_for(path[j], back, rev_), p_.tol);
          for (const auto& y : bpath) Vi.add(y);
          break;
        }
      }
    }
    std::vector<bool> keep(front_.pts.size(), true);
    int exited = 0;
    if (!bounded) {
      for (size_t k = 0; k < front_.pts.size(); ++k) {
        if (exits[k] || Vi.any_within(front_.pts[k].x, h_)) {
          keep[k] = false;
          ++exited;
          tube_.pruned.push_back({front_.pts[k].x, iter, true});
        }
      }
    }
    for (const auto& [a, b] : front_.links) {
      for (int j = 0; j <= S; ++j) Ti.mark_segment(paths[a][j], paths[b][j]);
    }
    if (bounded) {
      Ti_keep = Ti;
    } else {
      for (size_t k = 0; k < front_.pts.size(); ++k) {
        if (!keep[k]) continue;
        for (int j = 0; j < S; ++j) Ti_keep.mark_segment(paths[k][j], paths[k][j + 1]);
      }
      for (const auto& [a, b] : front_.links) {
        if (!keep[a] || !keep[b]) continue;
        for (int j = 0; j <= S; ++j) Ti_keep.mark_segment(paths[a][j], paths[b][j]);
      }
    }

    // accumulate
    const GridRegion over_before = over;
    GridRegion added_over(d, h_);
    if (bounded) {
      added_over = Ti;
    } else if (p_.literal_under_branch) {
      added_over = Ti_keep;
    } else {
      added_over = Ti_keep;
      for (const auto& c : Ti.cells()) {
        if (!added_over.has(c) && cell_meets(Ti, c, *Xq_)) added_over.mark(c);
      }
    }
    over.unite(added_over);

    GridRegion added_under(d, h_, GridMode::Under);
    if (under) {
      if (!bounded && p_.literal_under_branch) {
        added_under = Ui;
        added_under.set_mode(GridMode::Under);
      } else {
        for (const auto& c : Ti_keep.cells()) {
          if (!under_occ.has(c) && (bounded || cell_inside(Ti_keep, c, *Xq_))) pending.mark(c);
        }
        for (const auto& c : pending.cells()) {
          bool ok = true;
          for (int mask = 0; mask < (1 << d) && ok; ++mask) {
            CellIndex corner = c;
            for (int j = 0; j < d; ++j) corner[j] += (mask >> j) & 1;
            ok = corner_certified(corner, t1);
          }
          if (ok) {
            added_under.mark(c);
            pending.erase(c);
          }
        }
      }
      under_occ.unite(added_under);
    }

    // next front
    Front next;
    std::vector<int> remap(front_.pts.size(), -1);
    int pruned = 0;
    for (size_t k = 0; k < front_.pts.size(); ++k) {
      if (!keep[k]) continue;
      const Vec& x = paths[k].back();
      if (over_before.contains(x) && certified(x, t)) {
        ++pruned;
        tube_.pruned.push_back({x, iter, false});
        continue;
      }
      remap[k] = static_cast<int>(next.pts.size());
      next.pts.push_back({x, front_.pts[k].origin});
    }
    for (const auto& [a, b] : front_.links) {
      if (remap[a] >= 0 && remap[b] >= 0) next.links.emplace_back(remap[a], remap[b]);
    }
    resample(next, t1);

    polyhedral_pieces(seg, t, dt);
    seg.pruned = pruned;
    seg.exited = exited;
    seg.cells = under ? added_under : added_over;
    seg.cells.set_mode(under ? GridMode::Under : GridMode::Over);
    seg.accumulated = under ? under_occ : over;
    tube_.segments.push_back(std::move(seg));

    if (bounded && next.pts.empty() && !front_.pts.empty() && t1 < tau - 1e-12) tube_.front_collapsed = true;
    front_ = std::move(next);
    t = t1;
    ++iter;
  }
  tube_.iterations = iter;
  tube_.occupancy = under ? under_occ : over;
  if (!bounded) {
    tube_.terminated = front_.pts.empty();
    tube_.iteration_cap = !tube_.terminated;
  }
  return tube_;
}

void check_inside_invariant(const InitialSet& init, const Polyhedron& Xq, double h) {
  const auto violated = [] {
    throw Error(ErrorCode::PreconditionViolated, "initial set is not contained in the invariant");
  };
  if (init.is_polyhedron()) {
    const Polyhedron& P = init.as_polyhedron();
    for (const auto& row : Xq.inequalities()) {
      const auto r = P.maximize(row.normal);
      if (r.status != lp::Status::Optimal || r.value > row.offset + 1e-9 * (1.0 + std::abs(row.offset))) violated();
    }
    for (const auto& row : Xq.equalities()) {
      for (double s : {1.0, -1.0}) {
        const auto r = P.maximize(s * row.normal);
        if (r.status != lp::Status::Optimal || r.value > s * row.offset + 1e-9) violated();
      }
    }
    return;
  }
  if (init.is_cells()) {
    const GridRegion& g = init.as_cells();
    const double slack = 0.5 * h * std::sqrt(double(g.dim()));
    for (const auto& c : g.cells()) {
      const Vec x = g.cell_center(c);
      for (const auto& row : Xq.inequalities()) {
        if (row.eval(x) > slack * row.normal.norm() + 1e-9) violated();
      }
    }
    return;
  }
  const GridRegion probe = init.rasterize(h / 2.0, GridMode::Under);
  for (const auto& c : probe.cells()) {
    if (!Xq.contains(probe.cell_center(c), 1e-9)) violated();
  }
}

}  // namespace

ReachTube reach_bounded_time(const InitialSet& init, const flow::Dynamics& dyn, double tau, const TimeGrid& grid,
                             const FaceliftParams& params) {
  if (tau < 0.0) throw Error(ErrorCode::PreconditionViolated, "horizon must be nonnegative");
  if (tau > 0.0 && (grid.taus.size() < 2 || grid.taus.back() < tau - 1e-9)) {
    throw Error(ErrorCode::PreconditionViolated, "time grid does not cover the horizon");
  }
  Engine e(init, dyn, params, nullptr);
  return e.run(grid, tau, 0);
}

ReachTube reach_invariant(const InitialSet& init, const flow::Dynamics& dyn, const Polyhedron& Xq, const TimeGrid& grid,
                          const FaceliftParams& params) {
  if (grid.taus.size() < 2) throw Error(ErrorCode::PreconditionViolated, "time grid has no intervals");
  check_inside_invariant(init, Xq, params.cell);
  int max_iters = params.max_iters;
  if (max_iters <= 0) {
    if (params.tau_max) {
      double min_dt = kInf;
      for (size_t i = 1; i < grid.taus.size(); ++i) min_dt = std::min(min_dt, grid.taus[i] - grid.taus[i - 1]);
      max_iters = static_cast<int>(std::ceil(*params.tau_max / min_dt)) + 1;
    } else {
      max_iters = 10 * grid.intervals();
    }
  }
  Engine e(init, dyn, params, &Xq);
  return e.run(grid, kInf, max_iters);
}

namespace {

GridRegion sweep_points(const std::vector<Vec>& pts, const std::vector<std::pair<int, int>>& links,
                        const flow::Dynamics& dyn, double tau, double h, double tol) {
  const int d = dyn.dim();
  GridRegion g(d, h);
  if (pts.empty()) return g;
  double v = 0.0;
  for (const auto& x : pts) v = std::max(v, dyn.field(x).norm());
  const int S = std::max(1, static_cast<int>(std::ceil(tau * v / (0.5 * h))));
  std::vector<std::vector<Vec>> paths;
  for (const auto& x : pts) {
    paths.push_back(tau > 0.0 ? flow::flow_path(dyn, x, tau, S, tol) : std::vector<Vec>(S + 1, x));
    for (int j = 0; j < S; ++j) g.mark_segment(paths.back()[j], paths.back()[j + 1]);
    g.mark_point(x);
  }
  for (const auto& [a, b] : links) {
    for (int j = 0; j <= S; ++j) g.mark_segment(paths[a][j], paths[b][j]);
  }
  return g;
}

}  // namespace

EquivalenceReport check_boundary_equivalence(const InitialSet& init, const flow::Dynamics& dyn, double tau, double h,
                                             double dt) {
  EquivalenceReport rep;
  rep.cell = h;
  const double tol = 1e-10;
  const GridRegion X0 = init.rasterize(h, GridMode::Over);

  // whole set: dense lattice of interior points
  const auto [lo, hi] = init.bounding_box();
  std::vector<Vec> interior;
  {
    GridRegion lattice(init.dim(), h / 2.0);
    lattice.mark_box(lo, hi);
    for (const auto& c : lattice.cells()) {
      const Vec x = lattice.cell_center(c);
      if (init.contains(x, 0.0)) interior.push_back(x);
    }
  }
  const BoundaryFront bf = classify_boundary(init, dyn, h / 2.0);
  for (const auto& x : bf.points) interior.push_back(x);
  rep.full_set = sweep_points(interior, {}, dyn, tau, h, tol);
  rep.full_set.unite(X0);

  rep.full_boundary = sweep_points(bf.points, bf.links, dyn, tau, h, tol);
  rep.full_boundary.unite(X0);

  if (tau > 0.0) {
    FaceliftParams fp;
    fp.cell = h;
    fp.tol = tol;
    fp.use_polyapprox = false;
    const double step = dt > 0.0 ? dt : tau / 10.0;
    rep.outflow_only = reach_bounded_time(init, dyn, tau, TimeGrid::uniform(step, tau), fp).occupancy;
  } else {
    rep.outflow_only = X0;
  }

  rep.diff_full_boundary = symmetric_difference_count(rep.full_set, rep.full_boundary);
  rep.diff_full_outflow = symmetric_difference_count(rep.full_set, rep.outflow_only);
  rep.diff_boundary_outflow = symmetric_difference_count(rep.full_boundary, rep.outflow_only);
  rep.gap = std::max({hausdorff(rep.full_set, rep.full_boundary), hausdorff(rep.full_set, rep.outflow_only),
                      hausdorff(rep.full_boundary, rep.outflow_only)});
  rep.pass = rep.gap <= 2.0 * h + 1e-12;
  return rep;
}

std::vector<std::string> export_tube(const ReachTube& tube, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> files;
  const auto header = [](std::ostream& os, int d) {
    for (int j = 0; j < d; ++j) os << ",x" << j + 1;
    os << "\n";
  };
  const std::string manifest = (fs::path(dir) / "manifest.csv").string();
  std::ofstream man(manifest);
  man.precision(17);
  man << "segment,t0,t1,delta,h,mode,cells,file\n";
  for (size_t i = 0; i < tube.segments.size(); ++i) {
    const auto& seg = tube.segments[i];
    char name[32];
    std::snprintf(name, sizeof name, "segment_%03zu.csv", i);
    const std::string path = (fs::path(dir) / name).string();
    std::ofstream os(path);
    os.precision(17);
    os << "segment,mode";
    header(os, seg.cells.dim());
    for (const auto& c : seg.cells.cells()) {
      os << i << "," << to_string(tube.direction);
      const Vec x = seg.cells.cell_center(c);
      for (Eigen::Index j = 0; j < x.size(); ++j) os << "," << x(j);
      os << "\n";
    }
    man << i << "," << seg.t0 << "," << seg.t1 << "," << seg.t1 - seg.t0 << "," << tube.cell << ","
        << to_string(tube.direction) << "," << seg.cells.size() << "," << name << "\n";
    files.push_back(path);
  }
  files.push_back(manifest);
  return files;
}

}  // namespace reachkit
