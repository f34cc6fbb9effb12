#include "reachkit/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace reachkit::hybrid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Bounding box of P by LP, or nullopt when P is unbounded or empty.
std::optional<std::pair<Vec, Vec>> lp_box(const Polyhedron& P) {
  const int d = P.dim();
  Vec lo(d), hi(d);
  for (int j = 0; j < d; ++j) {
    const Vec e = Vec::Unit(d, j);
    const auto up = P.maximize(e);
    const auto dn = P.maximize(-e);
    if (up.status != lp::Status::Optimal || dn.status != lp::Status::Optimal) return std::nullopt;
    hi(j) = up.value;
    lo(j) = -dn.value;
  }
  return std::make_pair(lo, hi);
}

/// Extreme points of P in the axis and diagonal directions (vertices in 2D).
std::vector<Vec> polyhedron_samples(const Polyhedron& P) {
  if (is_empty(P)) return {};
  if (P.dim() == 2 && is_bounded(P)) return vertices_2d(P);
  const int d = P.dim();
  std::vector<Vec> dirs;
  for (int j = 0; j < d; ++j) {
    dirs.push_back(Vec::Unit(d, j));
    dirs.push_back(-Vec::Unit(d, j));
  }
  dirs.push_back(Vec::Ones(d));
  dirs.push_back(-Vec::Ones(d));
  std::vector<Vec> out;
  for (const auto& c : dirs) {
    const auto r = P.maximize(c);
    if (r.status == lp::Status::Optimal) out.push_back(r.x);
  }
  return out;
}

/// Drops cells outside the box of G expanded by one cell.
void clip_to_invariant(GridRegion& g, const Polyhedron& G) {
  const auto box = lp_box(G);
  if (!box) return;
  const double h = g.cell_size();
  for (const auto& c : g.cells()) {
    const Vec lo = g.cell_lo(c);
    const Vec hi = lo.array() + h;
    if (((hi.array() < box->first.array() - h)).any() || ((lo.array() > box->second.array() + h)).any()) g.erase(c);
  }
}

}  // namespace

int HybridSystem::index_of(const std::string& name) const {
  for (size_t i = 0; i < locations.size(); ++i) {
    if (locations[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

const Location& HybridSystem::location(const std::string& name) const {
  const int i = index_of(name);
  if (i < 0) throw Error(ErrorCode::Model, "unknown location '" + name + "'");
  return locations[static_cast<size_t>(i)];
}

void HybridSystem::validate(double tol) const {
  if (dim < 1) throw Error(ErrorCode::Model, "hybrid system needs a positive dimension");
  if (locations.empty()) throw Error(ErrorCode::Model, "hybrid system has no locations");
  for (size_t i = 0; i < locations.size(); ++i) {
    const auto& l = locations[i];
    if (l.invariant.dim() != dim || l.dynamics.dim() != dim) {
      throw Error(ErrorCode::DimMismatch, "location '" + l.name + "' does not match the system dimension");
    }
    for (size_t j = 0; j < i; ++j) {
      if (locations[j].name == l.name) throw Error(ErrorCode::Model, "duplicate location '" + l.name + "'");
    }
  }
  for (const auto& e : edges) {
    const auto& from = location(e.from);
    const auto& to = location(e.to);
    if (e.guard.dim() != dim || e.reset.R.rows() != dim || e.reset.R.cols() != dim || e.reset.c.size() != dim) {
      throw Error(ErrorCode::DimMismatch, "edge " + e.from + " -> " + e.to + " does not match the system dimension");
    }
    const Polyhedron enabled = intersect({e.guard, from.invariant});
    for (const auto& x : polyhedron_samples(enabled)) {
      if (!to.invariant.contains(e.reset.apply(x), tol)) {
        throw Error(ErrorCode::Model, "reset of edge " + e.from + " -> " + e.to +
                                          " maps a guard point outside the invariant of '" + e.to + "'");
      }
    }
  }
  for (const auto& r : init) {
    const auto& l = location(r.location);
    if (r.set.dim() != dim) throw Error(ErrorCode::DimMismatch, "initial region dimension");
    if (is_empty(r.set)) throw Error(ErrorCode::Model, "initial region in '" + r.location + "' is empty");
    for (const auto& row : l.invariant.inequalities()) {
      const auto m = r.set.maximize(row.normal);
      if (m.status != lp::Status::Optimal || m.value > row.offset + tol) {
        throw Error(ErrorCode::Model, "initial region is not inside the invariant of '" + r.location + "'");
      }
    }
  }
}

RegionSet RegionSet::from_init(const HybridSystem& H, double cell) { return from_polyhedra(H, H.init, cell); }

RegionSet RegionSet::from_polyhedra(const HybridSystem& H, const std::vector<InitRegion>& parts, double cell) {
  RegionSet S(H.dim, cell);
  for (const auto& part : parts) {
    const auto& loc = H.location(part.location);
    const Polyhedron P = intersect({part.set, loc.invariant});
    const auto box = lp_box(P);
    if (!box) {
      if (is_empty(P)) continue;
      throw Error(ErrorCode::Model, "region in '" + part.location + "' must be bounded");
    }
    GridRegion g = rasterize_polyhedron(P, cell, GridMode::Over, box->first, box->second);
    clip_to_invariant(g, loc.invariant);
    S.add(part.location, g);
  }
  return S;
}

GridRegion RegionSet::at(const std::string& q) const {
  const auto it = regions.find(q);
  return it == regions.end() ? GridRegion(dim, cell) : it->second;
}

void RegionSet::add(const std::string& q, const GridRegion& g) {
  if (g.empty()) return;
  auto it = regions.find(q);
  if (it == regions.end()) {
    regions.emplace(q, g);
  } else {
    it->second.unite(g);
  }
}

bool RegionSet::empty() const {
  return std::all_of(regions.begin(), regions.end(), [](const auto& kv) { return kv.second.empty(); });
}

std::size_t RegionSet::size() const {
  std::size_t n = 0;
  for (const auto& [q, g] : regions) n += g.size();
  return n;
}

bool RegionSet::subset_of(const RegionSet& other) const {
  for (const auto& [q, g] : regions) {
    if (!g.subset_of(other.at(q))) return false;
  }
  return true;
}

RegionSet RegionSet::intersection(const RegionSet& other) const {
  RegionSet out(dim, cell);
  for (const auto& [q, g] : regions) {
    const auto it = other.regions.find(q);
    if (it == other.regions.end()) continue;
    out.add(q, g.intersection(it->second));
  }
  return out;
}

RegionSet post(const HybridSystem& H, const RegionSet& S, const PostParams& params) {
  RegionSet out = S;
  out.generation = S.generation + 1;
  const TimeGrid grid = TimeGrid::uniform(params.dt, params.tau_q);
  for (const auto& [q, region] : S.regions) {
    if (region.empty()) continue;
    const auto& loc = H.location(q);
    FaceliftParams fp;
    fp.cell = params.cell;
    fp.mode = TubeMode::Over;
    fp.tol = params.tol;
    fp.use_polyapprox = false;
    fp.max_iters = std::max(1, grid.intervals());
    const auto tube = reach_invariant(InitialSet::cells(region), loc.dynamics, loc.invariant, grid, fp);
    GridRegion R = tube.occupancy;
    R.unite(region);
    clip_to_invariant(R, loc.invariant);
    out.add(q, R);

    for (const auto& e : H.edges) {
      if (e.from != q) continue;
      const auto& target = H.location(e.to);
      GridRegion img(H.dim, params.cell);
      for (const auto& c : R.cells()) {
        if (!cell_meets(R, c, e.guard) || !cell_meets(R, c, loc.invariant)) continue;
        Vec lo = Vec::Constant(H.dim, kInf), hi = Vec::Constant(H.dim, -kInf);
        for (const auto& corner : R.cell_corners(c)) {
          const Vec y = e.reset.apply(corner);
          lo = lo.cwiseMin(y);
          hi = hi.cwiseMax(y);
        }
        // keep exactly aligned images from spilling into neighbours
        const double shrink = 1e-9 * params.cell;
        const Vec slo = (lo.array() + shrink).cwiseMin(hi.array()).matrix();
        const Vec shi = (hi.array() - shrink).cwiseMax(slo.array()).matrix();
        GridRegion box(H.dim, params.cell);
        box.mark_box(slo, shi);
        for (const auto& ic : box.cells()) {
          if (cell_meets(box, ic, target.invariant)) img.mark(ic);
        }
      }
      out.add(e.to, img);
    }
  }
  return out;
}

Verdict semi_decide_reach(const HybridSystem& H, const RegionSet& S1, const RegionSet& S2, int max_k,
                          const PostParams& params) {
  if (S1.empty() || S2.empty()) throw Error(ErrorCode::PreconditionViolated, "both region sets must be nonempty");
  Verdict v;
  RegionSet S = S1;
  S.generation = 0;
  for (int k = 0;; ++k) {
    const RegionSet I = S.intersection(S2);
    if (!I.empty()) {
      v.yes = true;
      v.k = k;
      for (const auto& [q, g] : I.regions) {
        if (g.empty()) continue;
        v.witness_location = q;
        v.witness = g.cell_center(g.cells().front());
        break;
      }
      v.reached = S;
      v.notes.push_back("yes answers come from an over-approximation: the target is possibly reachable");
      return v;
    }
    if (k >= max_k) break;
    S = post(H, S, params);
  }
  v.k = max_k;
  v.reached = S;
  v.notes.push_back("no intersection after max_k applications of post");
  return v;
}

std::string to_string(StepKind k) {
  switch (k) {
    case StepKind::TimeStep: return "time-step";
    case StepKind::EdgeStep: return "edge-step";
    case StepKind::SigmaStep: return "sigma-step";
    case StepKind::None: return "none";
  }
  return "?";
}

namespace {

bool edge_step_ok(const HybridSystem& H, const Edge& e, const Config& c1, const Config& c2, double tol) {
  if (e.from != c1.q || e.to != c2.q) return false;
  if (!e.guard.contains(c1.x, tol) || !H.location(c1.q).invariant.contains(c1.x, tol)) return false;
  return (e.reset.apply(c1.x) - c2.x).norm() <= tol;
}

}  // namespace

StepKind classify_step(const HybridSystem& H, const Config& c1, const Config& c2, const StepLabel& label, double tol) {
  if (H.index_of(c1.q) < 0 || H.index_of(c2.q) < 0) return StepKind::None;
  if (const double* t = std::get_if<double>(&label)) {
    if (c1.q != c2.q || *t < 0.0) return StepKind::None;
    const auto& loc = H.location(c1.q);
    if (*t == 0.0) return (c1.x - c2.x).norm() <= tol && loc.invariant.contains(c1.x, tol) ? StepKind::TimeStep
                                                                                            : StepKind::None;
    const int samples = std::max(8, static_cast<int>(std::ceil(*t / 0.01)));
    const auto path = flow::flow_path(loc.dynamics, c1.x, *t, samples);
    for (const auto& y : path) {
      if (!loc.invariant.contains(y, tol)) return StepKind::None;
    }
    return (path.back() - c2.x).norm() <= tol ? StepKind::TimeStep : StepKind::None;
  }
  if (const std::size_t* i = std::get_if<std::size_t>(&label)) {
    if (*i >= H.edges.size()) return StepKind::None;
    return edge_step_ok(H, H.edges[*i], c1, c2, tol) ? StepKind::EdgeStep : StepKind::None;
  }
  const auto& sigma = std::get<std::string>(label);
  for (const auto& e : H.edges) {
    if (e.event == sigma && edge_step_ok(H, e, c1, c2, tol)) return StepKind::SigmaStep;
  }
  return StepKind::None;
}

Replay replay_witness(const HybridSystem& H, const RegionSet& S1, const Verdict& v, const PostParams& params) {
  Replay best;
  best.distance = kInf;
  if (!v.yes) return best;
  const double h = params.cell;
  const double reach_tol = 2.0 * h;

  std::vector<Config> trail;
  std::vector<StepLabel> labels;

  // Depth-first over edge choices; each dwell is integrated in small hops.
  std::function<bool(const std::string&, const Vec&, int)> search = [&](const std::string& q, const Vec& x0,
                                                                       int depth) -> bool {
    const auto& loc = H.location(q);
    std::vector<Vec> xs{x0};
    std::vector<double> ts{0.0};
    double t = 0.0;
    Vec x = x0;
    while (t < params.tau_q - 1e-12) {
      const double speed = loc.dynamics.field(x).norm();
      const double dt = std::min({params.dt, params.tau_q - t, speed > 0.0 ? 0.25 * h / speed : params.tau_q});
      const Vec y = flow::flow(loc.dynamics, x, dt);
      if (!loc.invariant.contains(y, 1e-9)) break;
      t += dt;
      x = y;
      xs.push_back(x);
      ts.push_back(t);
    }
    // the flow has no memory, so the dwell time is measured from x0
    for (size_t j = 0; j < xs.size(); ++j) {
      if (q != v.witness_location) break;
      const double dist = (xs[j] - v.witness).norm();
      if (dist <= reach_tol) {
        trail.push_back({q, x0});
        labels.emplace_back(ts[j]);
        trail.push_back({q, xs[j]});
        best.distance = dist;
        return true;
      }
    }
    if (depth >= v.k) return false;
    for (size_t ei = 0; ei < H.edges.size(); ++ei) {
      const auto& e = H.edges[ei];
      if (e.from != q) continue;
      const auto& target = H.location(e.to);
      std::vector<size_t> picks;
      size_t closest = xs.size();
      double closest_d = kInf;
      for (size_t j = 0; j < xs.size(); ++j) {
        if (!e.guard.contains(xs[j], 1e-9) || !target.invariant.contains(e.reset.apply(xs[j]), 1e-9)) continue;
        if (picks.empty()) picks.push_back(j);
        if (e.to == v.witness_location) {
          const double d = (e.reset.apply(xs[j]) - v.witness).norm();
          if (d < closest_d) closest_d = d, closest = j;
        }
      }
      if (closest < xs.size() && (picks.empty() || closest != picks.front())) picks.push_back(closest);
      for (size_t j : picks) {
        const size_t mark = trail.size();
        trail.push_back({q, x0});
        labels.emplace_back(ts[j]);
        trail.push_back({q, xs[j]});
        labels.emplace_back(ei);
        if (search(e.to, e.reset.apply(xs[j]), depth + 1)) return true;
        trail.resize(mark);
        labels.resize(labels.size() - 2);
      }
    }
    return false;
  };

  // candidate starts: S1 cell centers, strided to at most 400 per location
  for (const auto& [q, g] : S1.regions) {
    const auto cells = g.cells();
    const size_t stride = std::max<size_t>(1, cells.size() / 400);
    for (size_t i = 0; i < cells.size(); i += stride) {
      const Vec x0 = g.cell_center(cells[i]);
      if (!H.location(q).invariant.contains(x0, 1e-9)) continue;
      trail.clear();
      labels.clear();
      if (!search(q, x0, 0)) continue;
      best.found = true;
      // trail holds (start, end) pairs per dwell; stitch them into one sequence
      best.configs.clear();
      best.labels.clear();
      best.kinds.clear();
      best.configs.push_back(trail.front());
      size_t li = 0;
      for (size_t p = 0; p + 1 < trail.size(); p += 2) {
        best.labels.push_back(labels[li++]);
        best.configs.push_back(trail[p + 1]);
        if (p + 2 < trail.size()) {
          best.labels.push_back(labels[li++]);
          best.configs.push_back(trail[p + 2]);
        }
      }
      best.validated = true;
      for (size_t s = 0; s < best.labels.size(); ++s) {
        const StepKind kind = classify_step(H, best.configs[s], best.configs[s + 1], best.labels[s]);
        best.kinds.push_back(kind);
        best.validated = best.validated && kind != StepKind::None;
      }
      return best;
    }
  }
  return best;
}

}  // namespace reachkit::hybrid
