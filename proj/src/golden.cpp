#include "reachkit/golden.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "reachkit/boundary.hpp"
#include "reachkit/facelift.hpp"
#include "reachkit/flow.hpp"
#include "reachkit/hybrid.hpp"
#include "reachkit/model.hpp"

namespace reachkit::golden {

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

Mat plane_basis(const Vec& n) {
  const int d = static_cast<int>(n.size());
  Mat B(d, d - 1);
  Eigen::HouseholderQR<Mat> qr(n);
  const Mat Q = qr.householderQ();
  B = Q.rightCols(d - 1);
  return B;
}

}  // namespace

Face example2_face() {
  Face f;
  f.side_normals = {v2(1, 0), v2(-1, 0)};
  f.side_offsets = {std::sqrt(2.0), -1.0};
  f.base_normal = v2(0, 1);
  f.base_offset = 0.0;
  return f;
}

Mat rotation_generator() { return (Mat(2, 2) << 0, -1, 1, 0).finished(); }

poly::StepProblem random_step_problem(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.2, 1.0);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Mat A(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) A(i, j) = g(rng);
    Vec n(dim);
    for (int i = 0; i < dim; ++i) n(i) = g(rng);
    n.normalize();
    const double b = g(rng);
    const Mat B = plane_basis(n);
    Vec center = n * b;
    for (int j = 0; j < dim - 1; ++j) center += B.col(j) * g(rng);
    Face f;
    f.base_normal = n;
    f.base_offset = b;
    for (int j = 0; j < dim - 1; ++j) {
      const double w = u(rng);
      const Vec t = B.col(j);
      f.side_normals.push_back(t);
      f.side_offsets.push_back(t.dot(center) + w);
      f.side_normals.push_back(-t);
      f.side_offsets.push_back(-t.dot(center) + w);
    }
    try {
      poly::check_A2(f, A);
    } catch (const Error&) {
      continue;
    }
    // Certified step from the drift margin, then the real problem at that step.
    const auto probe = poly::make_problem(f, A, 1.0);
    const double cap = poly::select_delta(probe.M0, flow::operator_norm(A), probe.delta_min, probe.delta0);
    const double delta = std::min(cap, 0.5);
    if (!(delta > 1e-4)) continue;
    return poly::make_problem(f, A, delta);
  }
  throw Error(ErrorCode::PreconditionViolated, "no random problem satisfied the drift assumption");
}

double containment_residual(const poly::StepProblem& prob, const Polyhedron& P, int nx, int nt) {
  const auto xs = poly::sample_face(prob.face, nx);
  const Mat L = P.le_matrix();
  const Vec r = P.le_rhs();
  double worst = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < nt; ++j) {
    const double t = prob.delta * j / (nt - 1);
    const Mat E = flow::expm(prob.A, t);
    for (const auto& x0 : xs) worst = std::max(worst, (L * (E * x0) - r).maxCoeff());
  }
  return worst;
}

std::vector<Halfspace> published_eta_rows() {
  const double s2 = std::sqrt(2.0), s3 = std::sqrt(3.0), lk = 1.249999;
  // eta(x) = c.x + c0 <= 0 becomes c.x <= -c0.
  return {
      {v2(1, -2.7566424), s2},
      {v2(-1, -2.7566424), -1.0},
      {v2(0, -1), 0.0},
      {v2(0, 1), lk},
      {v2(1, 0), s2 + lk},
      {v2(-1, 0), -0.249999},
      {v2(-0.5122958, 2.8873223), s2},
      {v2(-2.2443466, 1.8873223), -1.0},
      {v2(-1, s3), 0.0},
      {v2(0.5, -s3 / 2), lk},
      {v2(s3 / 2, 0.5), s2 + lk},
      {v2(-s3 / 2, -0.5), -0.249999},
  };
}

std::vector<Vec> published_vertices() {
  const double s2 = std::sqrt(2.0), s3 = std::sqrt(3.0);
  return {v2(s2, 0),      v2(4.8600138, 1.249999), v2(4.2845099, 1.249999), v2(s3 / s2, 1 / s2),
          v2(s3 / 2, 0.5), v2(0.575162, 0.154114),  v2(1, 0)};
}

bool a1_values_ok(double l_rot, double l_cap, double l_cap_prime) {
  return std::abs(l_rot - 2.7566424) <= 1e-4 && std::abs(l_cap - 1.249999) <= 5e-5 &&
         std::abs(l_cap_prime - 1.249999) <= 5e-5;
}

bool rows_match(const Halfspace& a, const Halfspace& b, double tol) {
  const Halfspace ua = a.normalized(), ub = b.normalized();
  return (ua.normal - ub.normal).cwiseAbs().maxCoeff() <= tol && std::abs(ua.offset - ub.offset) <= tol;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 9) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

std::string fmt_vec(const Vec& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v(i), 8);
  return s + ")";
}

/// Thrown when a bundled model is absent, so the criterion fails with a clear reason.
struct MissingInput {
  std::string path;
};

class Suite {
 public:
  explicit Suite(std::string dir) : dir_(std::move(dir)) {}

  Model model(const std::string& file) {
    const auto path = (std::filesystem::path(dir_) / file).string();
    if (!std::filesystem::exists(path)) throw MissingInput{path};
    return load_model(path);
  }

  template <class F>
  Result run(const std::string& id, F&& check) {
    Result r;
    r.id = id;
    const auto t0 = Clock::now();
    try {
      check(r);
    } catch (const MissingInput& m) {
      r.pass = false;
      r.detail = "missing input: " + m.path;
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.ms = ms_since(t0);
    return r;
  }

 private:
  std::string dir_;
};

poly::StepProblem example2_problem(const Model& m) {
  return poly::make_problem(*m.face, m.dynamics->matrix(), m.grid.dt, m.modes.delta0);
}

std::vector<poly::StepProblem> random_problems() {
  std::mt19937_64 rng(20240601);
  std::vector<poly::StepProblem> out;
  for (int i = 0; i < 50; ++i) out.push_back(random_step_problem(rng, 2 + i % 2));
  return out;
}

FaceliftParams params_of(const Model& m, TubeMode mode) {
  FaceliftParams p;
  p.cell = m.grid.cell;
  p.spacing = m.grid.boundary_spacing;
  p.mode = mode;
  p.max_iters = m.modes.max_iters;
  p.tau_max = m.modes.tau_max;
  return p;
}

ReachTube tube_of(const Model& m, TubeMode mode) {
  const auto grid = TimeGrid::uniform(m.grid.dt, m.grid.tau);
  if (m.kind == ProblemKind::ReachInv) {
    return reach_invariant(m.initial_set(), *m.dynamics, *m.invariant, grid, params_of(m, mode));
  }
  return reach_bounded_time(m.initial_set(), *m.dynamics, m.grid.tau, grid, params_of(m, mode));
}

Mat taylor(const Mat& M) {
  Mat sum = Mat::Identity(M.rows(), M.cols());
  Mat term = sum;
  for (int k = 1; k < 200; ++k) {
    term = term * M / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

}  // namespace

std::vector<Result> run_suite(const std::string& model_dir) {
  Suite S(model_dir);
  std::vector<Result> out;

  out.push_back(S.run("A1", [&](Result& r) {
    const Model m = S.model("example2.json");
    const auto t0 = Clock::now();
    const auto b = poly::conservative_bounds(example2_problem(m));
    const double ms = ms_since(t0);
    bool ok = ms < 1000.0;
    for (int i = 0; i < b.k - 1; ++i) {
      ok = ok && a1_values_ok(b.rotated(i), b.cap(), b.cap_prime()) && a1_values_ok(b.rotated_prime(i), b.cap(), b.cap_prime());
    }
    r.pass = ok;
    r.detail = "l_i = " + fmt(b.rotated(0)) + ", l_i' = " + fmt(b.rotated_prime(0)) + ", l_k = " + fmt(b.cap()) +
               ", l_k' = " + fmt(b.cap_prime()) + ", " + fmt(ms, 3) + " ms";
  }));

  out.push_back(S.run("A2", [&](Result& r) {
    const Model m = S.model("example2.json");
    const auto p = example2_problem(m);
    const auto as = poly::assemble_polyhedron(p, poly::conservative_bounds(p));
    const auto want = published_eta_rows();
    const auto& got = as.P.inequalities();
    if (got.size() != want.size()) {
      r.detail = "expected " + std::to_string(want.size()) + " rows, got " + std::to_string(got.size());
      return;
    }
    const char* names[] = {"eta1", "eta2", "eta3", "eta4", "eta5", "eta6",
                           "eta1'", "eta2'", "eta3'", "eta4'", "eta5'", "eta6'"};
    int bad = 0;
    std::string miss;
    for (size_t i = 0; i < want.size(); ++i) {
      if (rows_match(got[i], want[i], 1e-4)) continue;
      ++bad;
      const Halfspace g = got[i].normalized(), w = want[i].normalized();
      miss += std::string(" ") + names[i] + ": got " + fmt_vec(g.normal) + " <= " + fmt(g.offset, 7) + ", published " +
              fmt_vec(w.normal) + " <= " + fmt(w.offset, 7) + ";";
    }
    r.pass = bad == 0;
    r.detail = std::to_string(want.size() - bad) + "/12 rows match" + (bad ? " |" + miss : std::string());
  }));

  out.push_back(S.run("A3", [&](Result& r) {
    const Model m = S.model("example2.json");
    const auto p = example2_problem(m);
    const auto as = poly::assemble_polyhedron(p, poly::conservative_bounds(p));
    using G = poly::RowGroup;
    const auto P = as.subsystem({G::RotatedLower, G::BottomSupport, G::Cap, G::RotatedUpper, G::TopSupport, G::CapPrime});
    const auto vs = vertices_2d(P);
    const auto want = published_vertices();
    int found = 0;
    std::string miss;
    for (const auto& w : want) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& v : vs) best = std::min(best, (v - w).norm());
      if (best <= 1e-3) {
        ++found;
      } else {
        miss += " " + fmt_vec(w) + " not a vertex (max row violation " + fmt(P.max_violation(w), 4) + ");";
      }
    }
    r.pass = found == 7 && vs.size() == 7;
    r.detail = std::to_string(vs.size()) + " vertices, " + std::to_string(found) + "/7 published found" + miss;
  }));

  out.push_back(S.run("A4", [&](Result& r) {
    const Model m = S.model("example2.json");
    const auto p = example2_problem(m);
    const double eps = poly::bloat_eps(p.M0, flow::operator_norm(p.A), p.delta);
    const auto hull = poly::bloat_hull(p.face, p.face_delta, p.A, p.delta, 0.0);
    bool zeta = false;
    Vec coef;
    for (const auto& h : hull.P.inequalities()) {
      if (h.offset <= 0.0) continue;
      const Vec c = h.normal / h.offset;
      if (std::abs(c(0) - 0.70710678) <= 1e-6 && std::abs(c(1) - 0.18946869) <= 1e-6) zeta = true, coef = c;
    }
    r.pass = std::abs(eps - 0.087235255) <= 1e-5 && zeta;
    r.detail = "eps = " + fmt(eps) + (zeta ? ", zeta2 " + fmt_vec(coef) : std::string(", zeta2 row not found"));
  }));

  const auto problems = random_problems();

  out.push_back(S.run("A5", [&](Result& r) {
    const Model m = S.model("example2.json");
    const auto t0 = Clock::now();
    const auto p = example2_problem(m);
    double worst = containment_residual(p, poly::assemble_polyhedron(p, poly::conservative_bounds(p)).P, 300, 300);
    int fails = worst > 1e-9;
    for (const auto& q : problems) {
      const double w = containment_residual(q, poly::assemble_polyhedron(q, poly::conservative_bounds(q)).P, 300, 300);
      fails += w > 1e-9;
      worst = std::max(worst, w);
    }
    const double ms = ms_since(t0);
    r.pass = fails == 0 && ms < 30000.0;
    r.detail = std::to_string(fails) + " of 51 problems with a violation, worst residual " + fmt(worst, 3) + ", " +
               fmt(ms / 1000.0, 3) + " s";
  }));

  out.push_back(S.run("A6", [&](Result& r) {
    const Model m = S.model("example2.json");
    const auto p = example2_problem(m);
    int unbounded = !is_bounded(poly::assemble_polyhedron(p, poly::conservative_bounds(p)).lower_system());
    for (const auto& q : problems) {
      unbounded += !is_bounded(poly::assemble_polyhedron(q, poly::conservative_bounds(q)).lower_system());
    }
    r.pass = unbounded == 0;
    r.detail = std::to_string(51 - unbounded) + "/51 lower systems bounded";
  }));

  out.push_back(S.run("A7", [&](Result& r) {
    const Model m = S.model("example1.json");
    const auto front = classify_boundary(m.initial_set(), *m.dynamics, m.grid.cell / 2.0);
    int wrong = 0, outflow = 0;
    for (size_t i = 0; i < front.size(); ++i) {
      const Vec& x = front.points[i];
      const bool out_edge = std::abs(x(0) - 1.0) <= 1e-12 || std::abs(x(1) - 1.0) <= 1e-12;
      const FlowTag want = out_edge ? FlowTag::Outflow : FlowTag::Inflow;
      wrong += front.tags[i] != want;
      outflow += front.tags[i] == FlowTag::Outflow;
    }
    r.pass = wrong == 0 && front.size() > 0;
    r.detail = std::to_string(front.size()) + " samples, " + std::to_string(outflow) + " outflow, " +
               std::to_string(wrong) + " misclassified";
  }));

  out.push_back(S.run("A8", [&](Result& r) {
    const Model a = S.model("example1.json");
    const Model b = S.model("rotation_square.json");
    const auto ra = check_boundary_equivalence(a.initial_set(), *a.dynamics, 1.0, 0.02);
    const auto rb = check_boundary_equivalence(b.initial_set(), *b.dynamics, 1.0, 0.02);
    r.pass = ra.pass && rb.pass;
    r.detail = "gap " + fmt(ra.gap, 4) + " (constant drift), " + fmt(rb.gap, 4) + " (rotation), bound 2h = 0.04";
  }));

  out.push_back(S.run("A9", [&](Result& r) {
    const Model d = S.model("drift.json");
    const Model per = S.model("periodic.json");
    const Model sp = S.model("spiral.json");
    const auto td = tube_of(d, TubeMode::Over);
    const int bound = static_cast<int>(std::ceil(3.0 / d.grid.dt)) + 1;
    const auto tp = tube_of(per, TubeMode::Over);
    const auto ts = tube_of(sp, TubeMode::Over);
    r.pass = td.terminated && td.iterations <= bound && tp.iteration_cap && !tp.terminated && ts.iteration_cap;
    r.detail = "drift: " + std::string(td.terminated ? "front empty" : "not terminated") + " after " +
               std::to_string(td.iterations) + " <= " + std::to_string(bound) + " iterations; periodic: " +
               (tp.iteration_cap ? "cap hit" : "no cap") + " at " + std::to_string(tp.iterations) + "; spiral: " +
               (ts.iteration_cap ? "cap hit" : "no cap") + " at " + std::to_string(ts.iterations);
  }));

  out.push_back(S.run("A10", [&](Result& r) {
    int bad = 0, checked = 0;
    for (const char* f : {"example1.json", "drift.json", "rotation_square.json", "rotation_disk.json", "periodic.json"}) {
      const Model m = S.model(f);
      const auto over = tube_of(m, TubeMode::Over);
      const auto under = tube_of(m, TubeMode::Under);
      bool ok = under.occupancy.subset_of(over.occupancy) && under.segments.size() == over.segments.size();
      for (size_t i = 0; ok && i < under.segments.size(); ++i) {
        ok = under.segments[i].accumulated.subset_of(over.segments[i].accumulated);
      }
      bad += !ok;
      ++checked;
    }
    int bound_bad = 0;
    for (const auto& q : problems) {
      const auto c = poly::conservative_bounds(q);
      const auto s = poly::sampled_bounds(q, 40, 40);
      for (size_t j = 0; j < c.l.size(); ++j) bound_bad += (s.l[j] > c.l[j] + 1e-12) + (s.l_prime[j] > c.l_prime[j] + 1e-12);
    }
    r.pass = bad == 0 && bound_bad == 0;
    r.detail = std::to_string(checked - bad) + "/" + std::to_string(checked) + " models with under inside over, " +
               std::to_string(bound_bad) + " sampled entries above conservative";
  }));

  out.push_back(S.run("A11", [&](Result& r) {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.1, 2.0);
    double expm_err = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 2 + trial % 3;
      Mat A(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = g(rng);
      const double t = u(rng) / flow::operator_norm(A);
      const Mat T = taylor(A * t);
      expm_err = std::max(expm_err, (flow::expm(A, t) - T).cwiseAbs().maxCoeff() / std::max(1.0, T.cwiseAbs().maxCoeff()));
    }
    const auto circ = [](const Vec& x) { return (Vec(2) << -x(1), x(0)).finished(); };
    const Vec exact = (Vec(2) << std::cos(2.0), std::sin(2.0)).finished();
    const Vec x0 = (Vec(2) << 1.0, 0.0).finished();
    const double ratio = (flow::rk4(circ, x0, 2.0, 10) - exact).norm() / (flow::rk4(circ, x0, 2.0, 20) - exact).norm();
    const auto nl = flow::Dynamics::parse({"x2", "-sin(x1) - 0.1*x2"});
    double semi = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const Vec x = (Vec(2) << g(rng), g(rng)).finished();
      const double s = u(rng), t = u(rng);
      semi = std::max(semi, (flow::flow(nl, flow::flow(nl, x, s), t) - flow::flow(nl, x, s + t)).norm());
    }
    r.pass = expm_err <= 1e-11 && ratio >= 12.0 && ratio <= 20.0 && semi <= 1e-7;
    r.detail = "expm vs Taylor " + fmt(expm_err, 3) + ", RK4 halving ratio " + fmt(ratio, 5) + ", semigroup residual " +
               fmt(semi, 3);
  }));

  out.push_back(S.run("A12", [&](Result& r) {
    const Model a = S.model("hybrid_drift.json");
    const Model b = S.model("hybrid_disjoint.json");
    const auto verdict = [](const Model& m, hybrid::Replay* replay) {
      const auto& hs = *m.hybrid;
      hybrid::PostParams p;
      p.cell = m.grid.cell;
      p.dt = m.grid.dt;
      p.tau_q = hs.tau_q;
      const auto S1 = hybrid::RegionSet::from_init(hs.system, p.cell);
      const auto S2 = hybrid::RegionSet::from_polyhedra(hs.system, hs.target, p.cell);
      const auto v = hybrid::semi_decide_reach(hs.system, S1, S2, hs.max_k, p);
      if (replay) *replay = hybrid::replay_witness(hs.system, S1, v, p);
      return v;
    };
    hybrid::Replay rep;
    const auto va = verdict(a, &rep);
    const auto vb = verdict(b, nullptr);
    r.pass = va.yes && va.k == 1 && rep.found && rep.validated && !vb.yes && vb.k == b.hybrid->max_k;
    r.detail = std::string("drift: ") + (va.yes ? "yes(" + std::to_string(va.k) + ")" : "unknown") + " witness " +
               va.witness_location + " " + fmt_vec(va.witness) + ", replay " +
               (rep.validated ? "validated" : "not validated") + " at distance " + fmt(rep.distance, 3) +
               "; disjoint: " + (vb.yes ? "yes" : "unknown at k = " + std::to_string(vb.k));
  }));

  return out;
}

std::string format_table(const std::vector<Result>& results) {
  std::ostringstream os;
  int failed = 0;
  for (const auto& r : results) {
    os << r.id << (r.id.size() < 3 ? "  " : " ") << (r.pass ? "PASS" : "FAIL") << "  " << r.detail << "  ["
       << fmt(r.ms, 4) << " ms]\n";
    failed += !r.pass;
  }
  os << (results.size() - failed) << "/" << results.size() << " criteria passed\n";
  return os.str();
}

}  // namespace reachkit::golden
