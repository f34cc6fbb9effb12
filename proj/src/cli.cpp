#include "reachkit/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "reachkit/facelift.hpp"
#include "reachkit/golden.hpp"
#include "reachkit/hybrid.hpp"
#include "reachkit/model.hpp"
#include "reachkit/plot.hpp"

namespace reachkit::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json sanitize(const json& j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::isfinite(v)) return j;
    return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
  }
  if (j.is_array() || j.is_object()) {
    json out = j;
    for (auto it = out.begin(); it != out.end(); ++it) *it = sanitize(*it);
    return out;
  }
  return j;
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json rows_json(const Polyhedron& P) {
  json a = json::array();
  for (const auto& h : P.inequalities()) {
    json r = vec_json(h.normal);
    r.push_back(h.offset);
    a.push_back(r);
  }
  return a;
}

struct Context {
  Model model;
  fs::path out;
  Overrides ov;
  RunReport& rep;
};

FaceliftParams facelift_params(Context& c) {
  FaceliftParams p;
  p.cell = c.ov.cell.value_or(c.model.grid.cell);
  p.spacing = c.model.grid.boundary_spacing;
  p.mode = c.ov.under.value_or(c.model.modes.under_approximate) ? TubeMode::Under : TubeMode::Over;
  p.max_iters = c.ov.max_iters.value_or(c.model.modes.max_iters);
  p.tau_max = c.model.modes.tau_max;
  p.literal_under_branch = c.model.modes.literal_under_branch;
  c.rep.effective["cell"] = p.cell;
  c.rep.effective["boundary_spacing"] = p.spacing > 0.0 ? p.spacing : p.cell / 2.0;
  c.rep.effective["mode"] = to_string(p.mode);
  c.rep.effective["tol"] = p.tol;
  c.rep.effective["member_tol"] = p.member_tol;
  return p;
}

ReachTube compute_tube(Context& c) {
  const Model& m = c.model;
  if (m.kind != ProblemKind::Reach && m.kind != ProblemKind::ReachInv) {
    throw Error(ErrorCode::Model, "this command needs a reach or reach-inv model");
  }
  const FaceliftParams p = facelift_params(c);
  const double dt = c.ov.dt.value_or(m.grid.dt);
  const double tau = c.ov.tau.value_or(m.grid.tau);
  c.rep.effective["dt"] = dt;
  c.rep.effective["tau"] = tau;
  const bool inv = c.rep.command == "reach-inv" || (c.rep.command == "plot" && m.kind == ProblemKind::ReachInv);
  if (inv) {
    if (!m.invariant) throw Error(ErrorCode::Model, "reach-inv needs an invariant");
    return reach_invariant(m.initial_set(), *m.dynamics, *m.invariant, TimeGrid::uniform(dt, tau), p);
  }
  return reach_bounded_time(m.initial_set(), *m.dynamics, tau, TimeGrid::uniform(dt, tau), p);
}

void describe_tube(Context& c, const ReachTube& t) {
  json segs = json::array();
  for (const auto& s : t.segments) {
    segs.push_back({{"t0", s.t0},
                    {"t1", s.t1},
                    {"delta", s.t1 - s.t0},
                    {"cells", s.cells.size()},
                    {"front", s.front_size},
                    {"pruned", s.pruned},
                    {"exited", s.exited},
                    {"polyhedra", s.polys.size()}});
  }
  c.rep.diagnostics["segments"] = segs;
  c.rep.diagnostics["segment_count"] = t.segments.size();
  c.rep.diagnostics["occupancy_cells"] = t.occupancy.size();
  c.rep.diagnostics["initial_cells"] = t.initial.size();
  c.rep.diagnostics["iterations"] = t.iterations;
  c.rep.diagnostics["front_collapsed"] = t.front_collapsed;
  c.rep.diagnostics["terminated"] = t.terminated;
  c.rep.diagnostics["iteration_cap"] = t.iteration_cap;
  c.rep.diagnostics["notes"] = t.notes;
}

void cmd_reach(Context& c) {
  const ReachTube t = compute_tube(c);
  describe_tube(c, t);
  for (const auto& f : export_tube(t, (c.out / "tube").string())) c.rep.outputs.push_back(f);
  if (t.iteration_cap) {
    c.rep.exit_code = kIterationCap;
    c.rep.message = "iteration cap reached before the front emptied";
  }
}

struct PolyRun {
  poly::StepResult step;
  std::optional<poly::BloatedHull> hull;
};

PolyRun compute_poly(Context& c) {
  const Model& m = c.model;
  if (m.kind != ProblemKind::Polyapprox) throw Error(ErrorCode::Model, "this command needs a polyapprox model");
  poly::StepOptions opts;
  opts.mode = c.ov.bounds.value_or(m.modes.bounds);
  opts.delta0 = m.modes.delta0;
  const double delta = c.ov.dt.value_or(m.grid.dt);
  PolyRun r;
  r.step = poly::overapproximate_step(*m.face, m.dynamics->matrix(), delta, opts);
  const auto& first = r.step.pieces.front();
  if (m.dim == 2) r.hull = poly::bloat_hull(first.problem.face, first.problem.face_delta, first.problem.A, first.problem.delta);
  c.rep.effective["delta"] = delta;
  c.rep.effective["bound_mode"] = opts.mode == poly::BoundMode::Sampled ? "sampled" : "conservative";
  c.rep.effective["sample_nx"] = opts.sample_nx;
  c.rep.effective["sample_nt"] = opts.sample_nt;
  return r;
}

void cmd_polyapprox(Context& c) {
  const PolyRun r = compute_poly(c);
  const auto& s = r.step;
  json pieces = json::array();
  json files = json::array();
  for (size_t i = 0; i < s.pieces.size(); ++i) {
    const auto& pc = s.pieces[i];
    json rows = json::array();
    for (size_t j = 0; j < pc.assembled.rows.size(); ++j) {
      const auto& h = pc.assembled.P.inequalities()[j];
      json row = vec_json(h.normal);
      row.push_back(h.offset);
      rows.push_back({{"row", row},
                      {"group", poly::to_string(pc.assembled.rows[j].group)},
                      {"index", pc.assembled.rows[j].index},
                      {"l", pc.assembled.rows[j].l}});
    }
    json piece{{"t0", pc.t0},
               {"delta", pc.problem.delta},
               {"delta_min", pc.problem.delta_min},
               {"delta0", pc.problem.delta0},
               {"M0", pc.problem.M0},
               {"M0_bound_mode", pc.problem.M0_bound_mode},
               {"l", pc.bounds.l},
               {"l_prime", pc.bounds.l_prime},
               {"rows", rows},
               {"polygon", rows_json(pc.polygon)}};
    if (pc.polygon.dim() == 2) {
      json vs = json::array();
      for (const auto& v : vertices_2d(pc.polygon)) vs.push_back(vec_json(v));
      piece["vertices"] = vs;
      piece["area"] = area_2d(pc.polygon);
    }
    pieces.push_back(piece);

    json file{{"mode", pc.assembled.mode == poly::BoundMode::Sampled ? "sampled" : "conservative"},
              {"dim", pc.polygon.dim()},
              {"t0", pc.t0},
              {"delta", pc.problem.delta},
              {"rows", rows}};
    files.push_back(file);
  }
  c.rep.diagnostics["pieces"] = pieces;
  c.rep.diagnostics["delta_requested"] = s.delta_requested;
  c.rep.diagnostics["delta_used"] = s.delta_used;
  c.rep.diagnostics["shrunk"] = s.shrunk;
  c.rep.diagnostics["c1"] = {{"holds", s.c1.holds}, {"min", s.c1.min_value}, {"c2", s.c1.c2}, {"c3", s.c1.c3}};
  if (r.hull) {
    c.rep.diagnostics["bloat"] = {{"eps", r.hull->eps}, {"rows", rows_json(r.hull->P)}};
  }
  const auto path = c.out / "polyhedron.json";
  std::ofstream os(path);
  os << sanitize(json{{"pieces", files}}).dump(2) << "\n";
  c.rep.outputs.push_back(path.string());
}

void cmd_hybrid(Context& c) {
  const Model& m = c.model;
  if (m.kind != ProblemKind::Hybrid) throw Error(ErrorCode::Model, "hybrid-reach needs a hybrid model");
  const auto& hs = *m.hybrid;
  hybrid::PostParams p;
  p.cell = c.ov.cell.value_or(m.grid.cell);
  p.dt = c.ov.dt.value_or(m.grid.dt);
  p.tau_q = c.ov.tau.value_or(hs.tau_q);
  const int max_k = c.ov.max_iters.value_or(hs.max_k);
  c.rep.effective["cell"] = p.cell;
  c.rep.effective["dt"] = p.dt;
  c.rep.effective["tau_q"] = p.tau_q;
  c.rep.effective["max_k"] = max_k;
  const auto S1 = hybrid::RegionSet::from_init(hs.system, p.cell);
  const auto S2 = hybrid::RegionSet::from_polyhedra(hs.system, hs.target, p.cell);
  const auto v = hybrid::semi_decide_reach(hs.system, S1, S2, max_k, p);
  json verdict{{"verdict", v.yes ? "yes" : "unknown"}, {"k", v.k}};
  if (v.yes) {
    verdict["witness_location"] = v.witness_location;
    verdict["witness_cell_center"] = vec_json(v.witness);
    const auto replay = hybrid::replay_witness(hs.system, S1, v, p);
    json steps = json::array();
    for (const auto k : replay.kinds) steps.push_back(hybrid::to_string(k));
    verdict["replay"] = {{"found", replay.found},
                         {"validated", replay.validated},
                         {"distance", replay.found ? replay.distance : 0.0},
                         {"steps", steps}};
  }
  c.rep.diagnostics["verdict"] = verdict;
  c.rep.diagnostics["notes"] = v.notes;
  json sizes = json::object();
  for (const auto& [q, g] : v.reached.regions) sizes[q] = g.size();
  c.rep.diagnostics["reached_cells"] = sizes;
  if (m.dim == 2) {
    for (const auto& [q, g] : v.reached.regions) {
      const auto s = plot_cells({g}, PlotFormat::Csv, (c.out / ("region_" + q + ".csv")).string());
      c.rep.outputs.push_back(s.file);
    }
  }
}

void cmd_plot(Context& c) {
  const PlotFormat fmt = parse_plot_format(c.ov.format);
  const std::string ext = fmt == PlotFormat::Csv ? ".csv" : ".svg";
  c.rep.effective["format"] = c.ov.format;
  PlotSummary s;
  switch (c.model.kind) {
    case ProblemKind::Reach:
    case ProblemKind::ReachInv: {
      const auto t = compute_tube(c);
      describe_tube(c, t);
      s = plot_tube(t, fmt, (c.out / ("tube" + ext)).string());
      break;
    }
    case ProblemKind::Polyapprox: {
      const auto r = compute_poly(c);
      s = plot_polygon(r.step.pieces.front().assembled, fmt, (c.out / ("polygon" + ext)).string());
      c.rep.diagnostics["candidate_edges"] = s.candidate_edges;
      c.rep.diagnostics["active_edges"] = s.active_edges;
      break;
    }
    case ProblemKind::Hybrid: {
      const auto& hs = *c.model.hybrid;
      hybrid::PostParams p;
      p.cell = c.ov.cell.value_or(c.model.grid.cell);
      p.dt = c.ov.dt.value_or(c.model.grid.dt);
      p.tau_q = hs.tau_q;
      const auto S = hybrid::post(hs.system, hybrid::RegionSet::from_init(hs.system, p.cell), p);
      std::vector<GridRegion> parts;
      for (const auto& l : hs.system.locations) parts.push_back(S.at(l.name));
      s = plot_cells(parts, fmt, (c.out / ("regions" + ext)).string());
      break;
    }
  }
  c.rep.diagnostics["plot_rows"] = s.rows;
  c.rep.outputs.push_back(s.file);
}

}  // namespace

json RunReport::to_json() const {
  json j{{"command", command},
         {"model", model},
         {"exit_code", exit_code},
         {"message", message},
         {"effective", effective},
         {"diagnostics", diagnostics},
         {"outputs", outputs},
         {"timings", {{"elapsed_ms", elapsed_ms}}}};
  return sanitize(j);
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse:
    case ErrorCode::Model:
    case ErrorCode::DimMismatch:
    case ErrorCode::DimUnsupported:
    case ErrorCode::EmptyPolyhedron:
    case ErrorCode::DegenerateNormal:
    case ErrorCode::Unsupported:
      return kModelError;
    case ErrorCode::AssumptionA2Violated:
    case ErrorCode::BadDeltaOrder:
    case ErrorCode::PreconditionViolated:
    case ErrorCode::UnboundedFace:
    case ErrorCode::InfeasibleFace:
      return kAssumption;
    default:
      return kFailure;
  }
}

RunReport run(const std::string& command, const std::string& model_path, const std::string& out_dir,
              const Overrides& overrides) {
  const auto start = std::chrono::steady_clock::now();
  RunReport rep;
  rep.command = command;
  rep.model = model_path;
  try {
    Context c{load_model(model_path), fs::path(out_dir), overrides, rep};
    fs::create_directories(c.out);
    if (command == "reach" || command == "reach-inv") {
      cmd_reach(c);
    } else if (command == "polyapprox") {
      cmd_polyapprox(c);
    } else if (command == "hybrid-reach") {
      cmd_hybrid(c);
    } else if (command == "plot") {
      cmd_plot(c);
    } else {
      throw Error(ErrorCode::Model, "unknown command '" + command + "'");
    }
  } catch (const Error& e) {
    rep.exit_code = exit_code_for(e.code());
    rep.message = e.what();
  } catch (const std::exception& e) {
    rep.exit_code = kFailure;
    rep.message = e.what();
  }
  rep.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::ofstream os(fs::path(out_dir) / "report.json");
  if (os) {
    os << rep.to_json().dump(2) << "\n";
    rep.outputs.push_back((fs::path(out_dir) / "report.json").string());
  }
  return rep;
}

int main(int argc, char** argv) {
  CLI::App app{"Reach sets of hybrid systems: face lifting, polyhedral flow pipes and the successor operator"};
  app.require_subcommand(1);
  Overrides ov;
  std::string out = "out";
  std::string model;
  std::string bounds;
  bool under = false;
  double dt = 0, cell = 0, tau = -1;
  int max_iters = 0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("model", model, "model file")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--dt", dt, "time step");
    sub->add_option("--cell", cell, "grid cell size");
    sub->add_option("--tau", tau, "horizon (per-location dwell for hybrid-reach)");
    sub->add_flag("--under", under, "under-approximate");
    sub->add_option("--bounds", bounds, "sampled or conservative")->check(CLI::IsMember({"sampled", "conservative"}));
    sub->add_option("--max-iters", max_iters, "iteration cap (max_k for hybrid-reach)");
    sub->add_option("--format", ov.format, "csv or svg")->check(CLI::IsMember({"csv", "svg"}));
  };
  for (const char* name : {"reach", "reach-inv", "polyapprox", "hybrid-reach", "plot"}) {
    add_common(app.add_subcommand(name, std::string("run the ") + name + " pipeline"));
  }
  auto* golden_cmd = app.add_subcommand("golden", "run the acceptance checks on the bundled models");
  std::string model_dir = REACHKIT_MODEL_DIR;
  golden_cmd->add_option("models", model_dir, "directory holding the bundled models");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kModelError;
  }

  if (golden_cmd->parsed()) {
    const auto results = golden::run_suite(model_dir);
    std::cout << golden::format_table(results);
    for (const auto& r : results) {
      if (!r.pass) return kFailure;
    }
    return kOk;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  if (dt > 0) ov.dt = dt;
  if (cell > 0) ov.cell = cell;
  if (tau >= 0) ov.tau = tau;
  if (under) ov.under = true;
  if (!bounds.empty()) ov.bounds = bounds == "sampled" ? poly::BoundMode::Sampled : poly::BoundMode::Conservative;
  if (max_iters > 0) ov.max_iters = max_iters;

  const RunReport rep = run(command, model, out, ov);
  if (!rep.message.empty()) std::cerr << rep.message << "\n";
  std::cout << "exit " << rep.exit_code << "; report " << (fs::path(out) / "report.json").string() << "\n";
  return rep.exit_code;
}

}  // namespace reachkit::cli
