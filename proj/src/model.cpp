#include "reachkit/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace reachkit {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::Model, what); }

double number(const json& j, const std::string& where) {
  if (!j.is_number()) bad(where + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) bad(where + " must be finite");
  return v;
}

Vec vec(const json& j, const std::string& where, int expect = -1) {
  if (!j.is_array()) bad(where + " must be an array");
  if (expect >= 0 && static_cast<int>(j.size()) != expect) {
    bad(where + " has " + std::to_string(j.size()) + " entries, expected " + std::to_string(expect));
  }
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], where);
  return v;
}

Mat matrix(const json& j, int dim, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim) bad(where + " must have " + std::to_string(dim) + " rows");
  Mat A(dim, dim);
  for (int i = 0; i < dim; ++i) A.row(i) = vec(j[i], where, dim).transpose();
  return A;
}

Halfspace row(const json& j, int dim, const std::string& where) {
  const Vec r = vec(j, where, dim + 1);
  if (r.head(dim).norm() == 0.0) bad(where + " has a zero normal");
  return {r.head(dim), r(dim)};
}

Polyhedron polyhedron(const json& j, int dim, const std::string& where) {
  if (!j.is_object() || !j.contains("rows")) bad(where + " needs a rows array");
  Polyhedron P(dim);
  for (const auto& r : j.at("rows")) P.add_inequality(row(r, dim, where + ".rows"));
  if (j.contains("equalities")) {
    for (const auto& r : j.at("equalities")) P.add_equality(row(r, dim, where + ".equalities"));
  }
  return P;
}

json rows_json(const std::vector<Halfspace>& hs) {
  json a = json::array();
  for (const auto& h : hs) {
    json r = json::array();
    for (Eigen::Index i = 0; i < h.normal.size(); ++i) r.push_back(h.normal(i));
    r.push_back(h.offset);
    a.push_back(r);
  }
  return a;
}

json poly_json(const Polyhedron& P) {
  json j{{"rows", rows_json(P.inequalities())}};
  if (!P.equalities().empty()) j["equalities"] = rows_json(P.equalities());
  return j;
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

flow::Dynamics dynamics(const json& j, int dim, const std::string& where) {
  if (!j.is_object()) bad(where + " must be an object");
  if (j.contains("matrix")) return flow::Dynamics::linear(matrix(j.at("matrix"), dim, where + ".matrix"));
  if (j.contains("expressions")) {
    const auto& e = j.at("expressions");
    if (!e.is_array() || static_cast<int>(e.size()) != dim) bad(where + ".expressions needs one entry per coordinate");
    std::vector<std::string> parts;
    for (const auto& s : e) {
      if (!s.is_string()) bad(where + ".expressions entries must be strings");
      parts.push_back(s.get<std::string>());
    }
    return flow::Dynamics::parse(parts);
  }
  bad(where + " needs a matrix or expressions");
}

json dynamics_json(const flow::Dynamics& d) {
  if (d.is_linear()) {
    json m = json::array();
    for (Eigen::Index i = 0; i < d.matrix().rows(); ++i) m.push_back(vec_json(d.matrix().row(i).transpose()));
    return {{"matrix", m}};
  }
  json e = json::array();
  for (const auto& c : d.components()) e.push_back(c.to_string());
  return {{"expressions", e}};
}

Face face(const json& j, int dim) {
  if (!j.is_object() || !j.contains("base") || !j.contains("sides")) bad("face needs sides and base");
  Face f;
  for (const auto& s : j.at("sides")) {
    const auto h = row(s, dim, "face.sides");
    f.side_normals.push_back(h.normal);
    f.side_offsets.push_back(h.offset);
  }
  const auto b = row(j.at("base"), dim, "face.base");
  f.base_normal = b.normal;
  f.base_offset = b.offset;
  return f;
}

json face_json(const Face& f) {
  std::vector<Halfspace> sides;
  for (int i = 0; i < f.side_count(); ++i) sides.emplace_back(f.side_normals[i], f.side_offsets[i]);
  return {{"sides", rows_json(sides)}, {"base", rows_json({Halfspace(f.base_normal, f.base_offset)})[0]}};
}

ProblemKind kind_of(const std::string& s) {
  if (s == "reach") return ProblemKind::Reach;
  if (s == "reach-inv") return ProblemKind::ReachInv;
  if (s == "polyapprox") return ProblemKind::Polyapprox;
  if (s == "hybrid") return ProblemKind::Hybrid;
  bad("unknown problem kind '" + s + "'");
}

hybrid::Reset reset(const json& j, int dim) {
  hybrid::Reset r = hybrid::Reset::identity(dim);
  if (j.is_null()) return r;
  if (j.contains("matrix")) r.R = matrix(j.at("matrix"), dim, "reset.matrix");
  if (j.contains("offset")) r.c = vec(j.at("offset"), "reset.offset", dim);
  return r;
}

std::vector<hybrid::InitRegion> regions(const json& j, int dim, const std::string& where) {
  std::vector<hybrid::InitRegion> out;
  if (!j.is_array()) bad(where + " must be an array");
  for (const auto& r : j) {
    if (!r.contains("location")) bad(where + " entries need a location");
    out.push_back({r.at("location").get<std::string>(), polyhedron(r.at("set"), dim, where + ".set")});
  }
  return out;
}

json regions_json(const std::vector<hybrid::InitRegion>& rs) {
  json a = json::array();
  for (const auto& r : rs) a.push_back({{"location", r.location}, {"set", poly_json(r.set)}});
  return a;
}

void check_positive(double v, const std::string& what) {
  if (!(v > 0.0)) bad(what + " must be positive");
}

}  // namespace

std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::Reach: return "reach";
    case ProblemKind::ReachInv: return "reach-inv";
    case ProblemKind::Polyapprox: return "polyapprox";
    case ProblemKind::Hybrid: return "hybrid";
  }
  return "?";
}

InitialSet Model::initial_set() const {
  if (initial_poly) return InitialSet::polyhedron(*initial_poly);
  if (initial_level) {
    return InitialSet::level_set(Expr::parse(initial_level->expr, dim), dim, initial_level->lo, initial_level->hi);
  }
  bad("model has no initial set");
}

Model parse_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    Model m;
    if (!j.is_object()) bad("model must be a JSON object");
    m.schema = j.value("schema", 0);
    if (m.schema != kModelSchema) bad("unsupported schema version " + std::to_string(m.schema));
    if (!j.contains("kind")) bad("model needs a kind");
    m.kind = kind_of(j.at("kind").get<std::string>());
    m.name = j.value("name", std::string());
    if (!j.contains("dim") || !j.at("dim").is_number_integer()) bad("model needs an integer dim");
    m.dim = j.at("dim").get<int>();
    if (m.dim < 1 || m.dim > 3) bad("dim must be 1, 2 or 3");

    if (j.contains("dynamics")) m.dynamics = dynamics(j.at("dynamics"), m.dim, "dynamics");
    if (j.contains("initial")) {
      const auto& in = j.at("initial");
      if (in.contains("polyhedron")) {
        m.initial_poly = polyhedron(in.at("polyhedron"), m.dim, "initial.polyhedron");
      } else if (in.contains("level_set")) {
        if (!in.contains("box") || !in.at("box").is_array() || in.at("box").size() != 2) {
          bad("initial.level_set needs box [[lo], [hi]]");
        }
        LevelSetSpec ls{in.at("level_set").get<std::string>(), vec(in.at("box")[0], "initial.box", m.dim),
                        vec(in.at("box")[1], "initial.box", m.dim)};
        (void)Expr::parse(ls.expr, m.dim);
        m.initial_level = ls;
      } else {
        bad("initial needs a polyhedron or a level_set");
      }
    }
    if (j.contains("invariant")) m.invariant = polyhedron(j.at("invariant"), m.dim, "invariant");
    if (j.contains("face")) m.face = face(j.at("face"), m.dim);
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      if (g.contains("tau")) m.grid.tau = number(g.at("tau"), "grid.tau");
      if (g.contains("dt")) m.grid.dt = number(g.at("dt"), "grid.dt");
      if (g.contains("cell")) m.grid.cell = number(g.at("cell"), "grid.cell");
      if (g.contains("boundary_spacing")) m.grid.boundary_spacing = number(g.at("boundary_spacing"), "grid.boundary_spacing");
    }
    if (j.contains("modes")) {
      const auto& o = j.at("modes");
      m.modes.under_approximate = o.value("under_approximate", false);
      const std::string b = o.value("bound_mode", std::string("conservative"));
      if (b == "conservative") {
        m.modes.bounds = poly::BoundMode::Conservative;
      } else if (b == "sampled") {
        m.modes.bounds = poly::BoundMode::Sampled;
      } else {
        bad("bound_mode must be sampled or conservative");
      }
      m.modes.max_iters = o.value("max_iters", 0);
      if (o.contains("delta0")) m.modes.delta0 = number(o.at("delta0"), "modes.delta0");
      if (o.contains("tau_max")) m.modes.tau_max = number(o.at("tau_max"), "modes.tau_max");
      m.modes.literal_under_branch = o.value("literal_under_branch", false);
    }
    if (j.contains("hybrid")) {
      const auto& h = j.at("hybrid");
      HybridSpec hs;
      hs.system.dim = m.dim;
      for (const auto& l : h.at("locations")) {
        hs.system.locations.push_back({l.at("name").get<std::string>(), polyhedron(l.at("invariant"), m.dim, "invariant"),
                                       dynamics(l.at("dynamics"), m.dim, "location dynamics")});
      }
      if (h.contains("edges")) {
        for (const auto& e : h.at("edges")) {
          hybrid::Edge edge;
          edge.from = e.at("from").get<std::string>();
          edge.to = e.at("to").get<std::string>();
          edge.guard = polyhedron(e.at("guard"), m.dim, "guard");
          edge.event = e.value("event", std::string());
          edge.kind = e.value("controllable", true) ? hybrid::EventKind::Controllable : hybrid::EventKind::Disturbance;
          edge.reset = reset(e.contains("reset") ? e.at("reset") : json(), m.dim);
          hs.system.edges.push_back(edge);
        }
      }
      hs.system.init = regions(h.at("init"), m.dim, "hybrid.init");
      hs.target = regions(h.at("target"), m.dim, "hybrid.target");
      hs.max_k = h.value("max_k", 5);
      if (h.contains("tau_q")) hs.tau_q = number(h.at("tau_q"), "hybrid.tau_q");
      m.hybrid = hs;
    }

    check_positive(m.grid.dt, "grid.dt");
    check_positive(m.grid.cell, "grid.cell");
    if (m.grid.tau < 0.0) bad("grid.tau must be nonnegative");
    switch (m.kind) {
      case ProblemKind::Reach:
      case ProblemKind::ReachInv:
        if (!m.dynamics) bad(to_string(m.kind) + " needs dynamics");
        if (!m.initial_poly && !m.initial_level) bad(to_string(m.kind) + " needs an initial set");
        if (m.kind == ProblemKind::ReachInv && !m.invariant) bad("reach-inv needs an invariant");
        break;
      case ProblemKind::Polyapprox:
        if (!m.dynamics || !m.dynamics->is_linear()) bad("polyapprox needs matrix dynamics");
        if (!m.face) bad("polyapprox needs a face");
        break;
      case ProblemKind::Hybrid:
        if (!m.hybrid) bad("hybrid needs a hybrid block");
        if (m.hybrid->max_k < 0) bad("hybrid.max_k must be nonnegative");
        check_positive(m.hybrid->tau_q, "hybrid.tau_q");
        m.hybrid->system.validate();
        for (const auto& t : m.hybrid->target) (void)m.hybrid->system.location(t.location);
        break;
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Model, std::string("model field has the wrong type: ") + e.what());
  }
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Model, "cannot open model file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

std::string dump_model(const Model& m) {
  json j;
  j["schema"] = m.schema;
  j["kind"] = to_string(m.kind);
  if (!m.name.empty()) j["name"] = m.name;
  j["dim"] = m.dim;
  if (m.dynamics) j["dynamics"] = dynamics_json(*m.dynamics);
  if (m.initial_poly) j["initial"] = {{"polyhedron", poly_json(*m.initial_poly)}};
  if (m.initial_level) {
    j["initial"] = {{"level_set", m.initial_level->expr},
                    {"box", json::array({vec_json(m.initial_level->lo), vec_json(m.initial_level->hi)})}};
  }
  if (m.invariant) j["invariant"] = poly_json(*m.invariant);
  if (m.face) j["face"] = face_json(*m.face);
  j["grid"] = {{"tau", m.grid.tau}, {"dt", m.grid.dt}, {"cell", m.grid.cell}, {"boundary_spacing", m.grid.boundary_spacing}};
  json modes{{"under_approximate", m.modes.under_approximate},
             {"bound_mode", m.modes.bounds == poly::BoundMode::Sampled ? "sampled" : "conservative"},
             {"max_iters", m.modes.max_iters},
             {"literal_under_branch", m.modes.literal_under_branch}};
  if (m.modes.delta0) modes["delta0"] = *m.modes.delta0;
  if (m.modes.tau_max) modes["tau_max"] = *m.modes.tau_max;
  j["modes"] = modes;
  if (m.hybrid) {
    const auto& H = m.hybrid->system;
    json locs = json::array(), edges = json::array();
    for (const auto& l : H.locations) {
      locs.push_back({{"name", l.name}, {"invariant", poly_json(l.invariant)}, {"dynamics", dynamics_json(l.dynamics)}});
    }
    for (const auto& e : H.edges) {
      json R = json::array();
      for (Eigen::Index i = 0; i < e.reset.R.rows(); ++i) R.push_back(vec_json(e.reset.R.row(i).transpose()));
      edges.push_back({{"from", e.from},
                       {"to", e.to},
                       {"guard", poly_json(e.guard)},
                       {"event", e.event},
                       {"controllable", e.kind == hybrid::EventKind::Controllable},
                       {"reset", {{"matrix", R}, {"offset", vec_json(e.reset.c)}}}});
    }
    j["hybrid"] = {{"locations", locs},
                   {"edges", edges},
                   {"init", regions_json(H.init)},
                   {"target", regions_json(m.hybrid->target)},
                   {"max_k", m.hybrid->max_k},
                   {"tau_q", m.hybrid->tau_q}};
  }
  return j.dump(2) + "\n";
}

void save_model(const Model& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Model, "cannot write model file " + path);
  out << dump_model(m);
}

namespace {

bool same_rows(const std::vector<Halfspace>& a, const std::vector<Halfspace>& b, double tol) {
  if (a.size() != b.size()) return false;
  std::vector<bool> used(b.size(), false);
  for (const auto& ra : a) {
    const Halfspace na = ra.normalized();
    bool hit = false;
    for (size_t i = 0; i < b.size() && !hit; ++i) {
      if (used[i]) continue;
      const Halfspace nb = b[i].normalized();
      if ((na.normal - nb.normal).norm() <= tol && std::abs(na.offset - nb.offset) <= tol) used[i] = hit = true;
    }
    if (!hit) return false;
  }
  return true;
}

bool same_poly(const Polyhedron& a, const Polyhedron& b, double tol) {
  return a.dim() == b.dim() && same_rows(a.inequalities(), b.inequalities(), tol) &&
         same_rows(a.equalities(), b.equalities(), tol);
}

template <class T, class F>
bool same_opt(const std::optional<T>& a, const std::optional<T>& b, F eq) {
  if (a.has_value() != b.has_value()) return false;
  return !a || eq(*a, *b);
}

bool same_dyn(const flow::Dynamics& a, const flow::Dynamics& b) {
  if (a.is_linear() != b.is_linear() || a.dim() != b.dim()) return false;
  if (a.is_linear()) return a.matrix() == b.matrix();
  for (size_t i = 0; i < a.components().size(); ++i) {
    if (a.components()[i].to_string() != b.components()[i].to_string()) return false;
  }
  return true;
}

bool same_face(const Face& a, const Face& b, double tol) {
  std::vector<Halfspace> sa, sb;
  for (int i = 0; i < a.side_count(); ++i) sa.emplace_back(a.side_normals[i], a.side_offsets[i]);
  for (int i = 0; i < b.side_count(); ++i) sb.emplace_back(b.side_normals[i], b.side_offsets[i]);
  return same_rows(sa, sb, tol) && same_rows({Halfspace(a.base_normal, a.base_offset)},
                                              {Halfspace(b.base_normal, b.base_offset)}, tol);
}

bool same_regions(const std::vector<hybrid::InitRegion>& a, const std::vector<hybrid::InitRegion>& b, double tol) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].location != b[i].location || !same_poly(a[i].set, b[i].set, tol)) return false;
  }
  return true;
}

}  // namespace

bool equivalent(const Model& a, const Model& b, double tol) {
  const auto poly_eq = [tol](const Polyhedron& x, const Polyhedron& y) { return same_poly(x, y, tol); };
  if (a.schema != b.schema || a.kind != b.kind || a.dim != b.dim || a.name != b.name) return false;
  if (!same_opt(a.dynamics, b.dynamics, same_dyn)) return false;
  if (!same_opt(a.initial_poly, b.initial_poly, poly_eq)) return false;
  if (!same_opt(a.initial_level, b.initial_level, [](const LevelSetSpec& x, const LevelSetSpec& y) {
        return x.expr == y.expr && x.lo == y.lo && x.hi == y.hi;
      }))
    return false;
  if (!same_opt(a.invariant, b.invariant, poly_eq)) return false;
  if (!same_opt(a.face, b.face, [tol](const Face& x, const Face& y) { return same_face(x, y, tol); })) return false;
  if (a.grid.tau != b.grid.tau || a.grid.dt != b.grid.dt || a.grid.cell != b.grid.cell ||
      a.grid.boundary_spacing != b.grid.boundary_spacing)
    return false;
  const auto& ma = a.modes;
  const auto& mb = b.modes;
  if (ma.under_approximate != mb.under_approximate || ma.bounds != mb.bounds || ma.max_iters != mb.max_iters ||
      ma.delta0 != mb.delta0 || ma.tau_max != mb.tau_max || ma.literal_under_branch != mb.literal_under_branch)
    return false;
  if (a.hybrid.has_value() != b.hybrid.has_value()) return false;
  if (a.hybrid) {
    const auto& ha = *a.hybrid;
    const auto& hb = *b.hybrid;
    if (ha.max_k != hb.max_k || ha.tau_q != hb.tau_q) return false;
    if (ha.system.locations.size() != hb.system.locations.size() || ha.system.edges.size() != hb.system.edges.size())
      return false;
    for (size_t i = 0; i < ha.system.locations.size(); ++i) {
      const auto& la = ha.system.locations[i];
      const auto& lb = hb.system.locations[i];
      if (la.name != lb.name || !same_poly(la.invariant, lb.invariant, tol) || !same_dyn(la.dynamics, lb.dynamics))
        return false;
    }
    for (size_t i = 0; i < ha.system.edges.size(); ++i) {
      const auto& ea = ha.system.edges[i];
      const auto& eb = hb.system.edges[i];
      if (ea.from != eb.from || ea.to != eb.to || ea.event != eb.event || ea.kind != eb.kind ||
          !same_poly(ea.guard, eb.guard, tol) || ea.reset.R != eb.reset.R || ea.reset.c != eb.reset.c)
        return false;
    }
    if (!same_regions(ha.system.init, hb.system.init, tol) || !same_regions(ha.target, hb.target, tol)) return false;
  }
  return true;
}

}  // namespace reachkit
