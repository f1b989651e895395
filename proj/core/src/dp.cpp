#include "treedp/dp.hpp"

#include "detail_log.hpp"
#include "local_problem.hpp"
#include "treedp/errors.hpp"
#include "treedp/polyhedra.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>

namespace treedp {

using detail::build_local_problem;
using detail::fix_columns;
using detail::LocalProblem;
using detail::solve_local;

ValueFunctionApprox ValueFunctionApprox::zero(Index dim) { return {std::monostate{}, dim}; }

ValueFunctionApprox ValueFunctionApprox::quadratic(QuadraticValue q) {
  const Index d = q.h.size();
  if (q.H.rows() != d || q.H.cols() != d) throw DimensionMismatch("quadratic value function has inconsistent sizes");
  q.H = 0.5 * (q.H + q.H.transpose());
  return {std::move(q), d};
}

ValueFunctionApprox ValueFunctionApprox::piecewise_linear(PiecewiseLinearValue p) {
  const Index d = p.points.cols();
  if (p.slopes.rows() != p.points.rows() || p.slopes.cols() != d || p.values.size() != p.points.rows() || d == 0 ||
      p.points.rows() == 0)
    throw DimensionMismatch("piecewise-linear value function has inconsistent sizes");
  return {std::move(p), d};
}

std::string ValueFunctionApprox::variant_name() const {
  if (std::holds_alternative<QuadraticValue>(form)) return "Quadratic";
  if (std::holds_alternative<PiecewiseLinearValue>(form)) return "PiecewiseLinearOverSamples";
  return "Zero";
}

double ValueFunctionApprox::operator()(const Vector& z) const {
  if (z.size() != domain_dim) throw DimensionMismatch("value function evaluated at a point of wrong size");
  if (const auto* q = std::get_if<QuadraticValue>(&form)) return 0.5 * z.dot(q->H * z) + q->h.dot(z) + q->constant;
  if (const auto* p = std::get_if<PiecewiseLinearValue>(&form)) {
    double v = -std::numeric_limits<double>::infinity();
    for (Index r = 0; r < p->points.rows(); ++r)
      v = std::max(v, p->values(r) + p->slopes.row(r).dot(z - p->points.row(r).transpose()));
    return v;
  }
  return 0.0;
}

std::string to_string(SetMode m) {
  switch (m) {
    case SetMode::Exact: return "ExactPolyhedron";
    case SetMode::InnerEllipsoid: return "InnerEllipsoid";
    case SetMode::InnerBox: return "InnerBox";
    case SetMode::SampleHull: return "SampleHull";
  }
  return "Unknown";
}

std::string to_string(ValueMode m) {
  switch (m) {
    case ValueMode::Zero: return "Zero";
    case ValueMode::QuadraticFit: return "QuadraticFit";
    case ValueMode::PiecewiseLinear: return "PiecewiseLinear";
    case ValueMode::Provided: return "Provided";
  }
  return "Unknown";
}

bool CouplingSetApprox::contains(const Vector& z, double tol) const {
  if (kind == SetMode::InnerEllipsoid && ellipsoid) return ellipsoid_contains(*ellipsoid, z, tol);
  return polyhedron.contains(z, tol);
}

SetMode SweepConfig::mode_for(int id) const {
  const auto it = set_mode.find(id);
  return it == set_mode.end() ? default_set : it->second;
}

namespace {

Positions nlp_y_positions(const NlpRef& r, Index n) {
  std::vector<bool> is_z(static_cast<size_t>(n), false);
  for (Index p : r.z_positions) is_z[static_cast<size_t>(p)] = true;
  Positions y;
  for (Index k = 0; k < n; ++k)
    if (!is_z[static_cast<size_t>(k)]) y.push_back(k);
  return y;
}

Vector nlp_local_to_zy(const NlpRef& r, const Vector& xl) {
  const Positions y = nlp_y_positions(r, xl.size());
  Vector zy(xl.size());
  zy.head(static_cast<Index>(r.z_positions.size())) = gather(xl, r.z_positions);
  zy.tail(static_cast<Index>(y.size())) = gather(xl, y);
  return zy;
}

Vector nlp_zy_to_local(const NlpRef& r, const Vector& zy) {
  const Positions y = nlp_y_positions(r, zy.size());
  const Index nz = static_cast<Index>(r.z_positions.size());
  Vector xl(zy.size());
  for (Index k = 0; k < nz; ++k) xl(r.z_positions[static_cast<size_t>(k)]) = zy(k);
  for (size_t k = 0; k < y.size(); ++k) xl(y[k]) = zy(nz + static_cast<Index>(k));
  return xl;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

VariableIndexSet keep_positions(const Positions& pos) {
  std::vector<Index> k;
  for (Index p : pos) k.push_back(p + 1);
  return VariableIndexSet::from_unsorted(k);
}

// Points inside the coupling set: boundary LP solutions and the center,
// mixed by random convex combinations.
std::vector<Vector> interior_points(const CouplingSetApprox& set, Index count, std::uint64_t seed) {
  std::vector<Vector> anchors;
  const Index d = set.polyhedron.dim;
  if (set.kind == SetMode::InnerEllipsoid && set.ellipsoid) {
    anchors.push_back(set.ellipsoid->c);
    for (const auto& p : ellipsoid_boundary(*set.ellipsoid, std::max<Index>(8, 4 * d))) {
      anchors.push_back(set.ellipsoid->c + 0.999 * (p - set.ellipsoid->c));
    }
  } else {
    for (const auto& c : default_cost_directions(d)) {
      const Solution s = solve_lp({c, set.polyhedron});
      if (s.optimal()) anchors.push_back(s.x);
    }
  }
  if (anchors.empty()) return anchors;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<Vector> pts = anchors;
  Vector mean = Vector::Zero(d);
  for (const auto& a : anchors) mean += a;
  mean /= static_cast<double>(anchors.size());
  pts.push_back(mean);
  while (static_cast<Index>(pts.size()) < count) {
    Vector w(static_cast<Index>(anchors.size()));
    for (Index k = 0; k < w.size(); ++k) w(k) = -std::log(std::max(1e-300, U(rng)));
    w /= w.sum();
    Vector p = Vector::Zero(d);
    for (size_t k = 0; k < anchors.size(); ++k) p += w(static_cast<Index>(k)) * anchors[k];
    pts.push_back(p);
  }
  return pts;
}

struct ValueSample {
  Vector z;
  double value;
  Vector slope;
};

std::vector<ValueSample> sample_values(const LocalProblem& L, const Positions& pw, const std::vector<Vector>& pts) {
  std::vector<ValueSample> out;
  const Index dw = static_cast<Index>(pw.size());
  for (const auto& z : pts) {
    QuadraticProgram qp = L.qp;
    for (Index a = 0; a < dw; ++a) {
      Vector row = Vector::Zero(qp.q.size());
      row(pw[static_cast<size_t>(a)]) = 1.0;
      qp.constraints.add_equality(row, z(a));
    }
    const Solution s = solve_local(qp, L.quad);
    if (!s.optimal()) continue;
    Vector slope = Vector::Zero(dw);
    if (s.mu.size() == qp.constraints.num_eq()) slope = -s.mu.tail(dw);
    out.push_back({z, s.objective + L.constant, slope});
  }
  return out;
}

ValueFunctionApprox fit_quadratic(const std::vector<ValueSample>& samples, Index d) {
  const Index nf = d * (d + 1) / 2 + d + 1;
  if (static_cast<Index>(samples.size()) < 1) throw NumericalFailure("no value samples for the quadratic fit");
  Matrix X(static_cast<Index>(samples.size()), nf);
  Vector y(static_cast<Index>(samples.size()));
  for (size_t r = 0; r < samples.size(); ++r) {
    const Vector& z = samples[r].z;
    Index c = 0;
    for (Index a = 0; a < d; ++a)
      for (Index b = a; b < d; ++b) X(static_cast<Index>(r), c++) = (a == b ? 0.5 : 1.0) * z(a) * z(b);
    for (Index a = 0; a < d; ++a) X(static_cast<Index>(r), c++) = z(a);
    X(static_cast<Index>(r), c) = 1.0;
    y(static_cast<Index>(r)) = samples[r].value;
  }
  const Vector w = X.completeOrthogonalDecomposition().solve(y);
  QuadraticValue q;
  q.H = Matrix::Zero(d, d);
  Index c = 0;
  for (Index a = 0; a < d; ++a)
    for (Index b = a; b < d; ++b) {
      q.H(a, b) = w(c);
      q.H(b, a) = w(c);
      ++c;
    }
  q.h = w.segment(c, d);
  q.constant = w(c + d);
  Eigen::SelfAdjointEigenSolver<Matrix> es(q.H);
  q.H = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() * es.eigenvectors().transpose();
  return ValueFunctionApprox::quadratic(q);
}

SubsystemDispatch dispatch_nlp(const Subsystem& s, const Positions& pw, const Vector& wval, const SweepConfig& cfg) {
  const NlpRef& ref = s.nlp();
  const NlpConstraintSpec& spec = *ref.spec;
  const Index nz = spec.nz;
  Vector z(nz);
  for (Index k = 0; k < nz; ++k) {
    const auto it = std::find(pw.begin(), pw.end(), ref.z_positions[static_cast<size_t>(k)]);
    if (it == pw.end()) throw Unsupported(fmt::format("nonlinear subsystem {} has a decision variable outside its coupling", s.id));
    z(k) = wval(static_cast<Index>(it - pw.begin()));
  }

  std::vector<Vector> starts;
  const auto smp = cfg.samples.find(s.id);
  if (smp != cfg.samples.end()) starts = nearest_witnesses(smp->second, z, 16);
  if (spec.initial_guess.size() == spec.dim()) starts.push_back(spec.initial_guess);

  SamplingOptions opt;
  opt.tol = std::min(opt.tol, cfg.feasibility_tol);
  const auto objective = [&](const Vector& zy) { return s.objective.value(nlp_zy_to_local(ref, zy)); };
  if (const auto best = nlp_minimize_at(spec, starts, z, objective, opt)) {
    SubsystemDispatch d;
    d.id = s.id;
    d.x = nlp_zy_to_local(ref, best->zy);
    d.kkt_residual = spec.violation(best->zy);
    return d;
  }
  throw SubproblemInfeasible(s.id, fmt::format("no feasible completion for coupling value [{}]",
                                               fmt::join(std::vector<double>(wval.data(), wval.data() + wval.size()), ", ")));
}

SubsystemArtifact compute_artifact(const TreeProblem& problem, const TreeTopology& topo,
                                   const BackwardArtifacts& done, const SweepConfig& cfg, int id) {
  const Subsystem& s = problem.subsystem(id);
  const VariableIndexSet& W = topo.coupling.at(id);
  const Positions pw = s.indices.positions_of(W);
  const Index dw = W.size();
  SubsystemArtifact art;
  art.id = id;
  const SetMode mode = cfg.mode_for(id);
  art.set.kind = mode;

  if (!s.polyhedral()) {
    if (!topo.children.at(id).empty())
      throw Unsupported(fmt::format("nonlinear subsystem {} must be a leaf", id));
    const auto it = cfg.samples.find(id);
    if (it == cfg.samples.end()) throw InvalidArgument(fmt::format("no samples supplied for nonlinear subsystem {}", id));
    const SampleHull hull = hull_of_samples(it->second, s.nlp().spec->convex);
    if (!hull.certified_inner && !cfg.allow_uncertified_hull)
      throw Unsupported(fmt::format("hull of samples for subsystem {} is not a certified inner approximation", id));
    art.set.kind = SetMode::SampleHull;
    art.set.polyhedron = hull.polyhedron;
    art.set.certified_inner = hull.certified_inner;
    art.value = cfg.value_mode == ValueMode::Provided ? cfg.provided.at(id) : ValueFunctionApprox::zero(dw);
    return art;
  }

  const LocalProblem dom = build_local_problem(problem, topo, done, id, false);
  HPolyhedron exact = fourier_motzkin_project(dom.projection_domain, keep_positions(pw));
  // keep_positions sorts; pw is ascending because both index sets are sorted
  if (is_empty(exact)) throw EmptyCouplingSet(id, "projection of the subtree constraint set is empty");
  art.set.exact = exact;

  switch (mode) {
    case SetMode::Exact:
      art.set.polyhedron = exact;
      break;
    case SetMode::InnerEllipsoid: {
      const EllipsoidFit fit = max_volume_inscribed_ellipsoid(exact);
      if (fit.max_row_certificate > 1e-7)
        throw NumericalFailure(fmt::format("ellipsoid certificate {:.3e} for subsystem {}", fit.max_row_certificate, id));
      art.set.ellipsoid = fit.ellipsoid;
      art.set.polyhedron = ellipsoid_inner_polytope(fit.ellipsoid);
      break;
    }
    case SetMode::InnerBox: {
      const BoxFit fit = inscribed_box(exact);
      if (fit.max_row_certificate > 1e-7)
        throw NumericalFailure(fmt::format("box certificate {:.3e} for subsystem {}", fit.max_row_certificate, id));
      art.set.box = fit.box;
      art.set.polyhedron = fit.box.polyhedron();
      break;
    }
    case SetMode::SampleHull: {
      ConvexSetSpec cs{exact, {}, dw};
      const SampleSet smp = optimization_based_sampling(cs, default_cost_directions(dw));
      art.set.polyhedron = hull_of_samples(smp, true).polyhedron;
      break;
    }
  }

  switch (cfg.value_mode) {
    case ValueMode::Zero:
      art.value = ValueFunctionApprox::zero(dw);
      break;
    case ValueMode::Provided: {
      const auto it = cfg.provided.find(id);
      art.value = it == cfg.provided.end() ? ValueFunctionApprox::zero(dw) : it->second;
      if (art.value.domain_dim != dw) throw DimensionMismatch(fmt::format("provided value function for {} has wrong dimension", id));
      break;
    }
    case ValueMode::QuadraticFit:
    case ValueMode::PiecewiseLinear: {
      const Index nq = dw * (dw + 1) / 2 + dw + 1;
      const Index count = cfg.fit_samples > 0 ? cfg.fit_samples : 4 * nq;
      const auto pts = interior_points(art.set, count, derive_seed(cfg.seed, static_cast<std::uint64_t>(id)));
      const LocalProblem L = build_local_problem(problem, topo, done, id, true);
      const auto vals = sample_values(L, pw, pts);
      if (vals.empty()) throw NumericalFailure(fmt::format("value sampling failed for subsystem {}", id));
      if (cfg.value_mode == ValueMode::QuadraticFit) {
        art.value = fit_quadratic(vals, dw);
      } else {
        PiecewiseLinearValue p{Matrix(static_cast<Index>(vals.size()), dw), Vector(static_cast<Index>(vals.size())),
                               Matrix(static_cast<Index>(vals.size()), dw)};
        for (size_t r = 0; r < vals.size(); ++r) {
          p.points.row(static_cast<Index>(r)) = vals[r].z.transpose();
          p.values(static_cast<Index>(r)) = vals[r].value;
          p.slopes.row(static_cast<Index>(r)) = vals[r].slope.transpose();
        }
        art.value = ValueFunctionApprox::piecewise_linear(p);
      }
      break;
    }
  }
  return art;
}

}  // namespace

BackwardArtifacts backward_sweep(const TreeProblem& problem, const TreeTopology& topo, const SweepConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  problem.validate();
  BackwardArtifacts out;
  const auto levels = topo.levels();
  for (size_t lv = levels.size(); lv-- > 1;) {
    const auto& ids = levels[lv];
    std::vector<SubsystemArtifact> arts(ids.size());
    std::vector<std::exception_ptr> errs(ids.size());
    parallel_for(static_cast<Index>(ids.size()), cfg.threads, [&](Index k) {
      try {
        arts[static_cast<size_t>(k)] = compute_artifact(problem, topo, out, cfg, ids[static_cast<size_t>(k)]);
      } catch (...) {
        errs[static_cast<size_t>(k)] = std::current_exception();
      }
    });
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
    for (auto& a : arts) out.by_id[a.id] = std::move(a);
    log::debug("backward: level {} done ({} subsystems)", lv, ids.size());
  }

  const int root = topo.root;
  if (problem.subsystem(root).polyhedral()) {
    const LocalProblem L = build_local_problem(problem, topo, out, root, false);
    QuadraticProgram feas{Matrix::Zero(L.qp.q.size(), L.qp.q.size()), Vector::Zero(L.qp.q.size()), L.qp.constraints};
    const Solution s = solve_local(feas, L.quad);
    if (s.status == SolveStatus::Infeasible)
      throw EmptyCouplingSet(root, "root problem is infeasible with the children's coupling sets");
  }
  out.runtime_s = seconds_since(t0);
  return out;
}

ForwardResult forward_sweep(const TreeProblem& problem, const TreeTopology& topo, const BackwardArtifacts& artifacts,
                            const SweepConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  ForwardResult res;
  for (const auto& level : topo.levels()) {
    std::vector<SubsystemDispatch> disp(level.size());
    std::vector<std::exception_ptr> errs(level.size());
    parallel_for(static_cast<Index>(level.size()), cfg.threads, [&](Index k) {
      const int id = level[static_cast<size_t>(k)];
      try {
        const Subsystem& s = problem.subsystem(id);
        const Index n = s.size();
        Positions pw;
        Vector wval;
        if (id != topo.root) {
          const Subsystem& par = problem.subsystem(topo.parent.at(id));
          const VariableIndexSet& W = topo.coupling.at(id);
          pw = s.indices.positions_of(W);
          wval = gather(res.subsystems.at(par.id).x, par.indices.positions_of(W));
        }
        if (!s.polyhedral()) {
          SubsystemDispatch d = dispatch_nlp(s, pw, wval, cfg);
          d.cost = s.objective.value(d.x);
          disp[static_cast<size_t>(k)] = std::move(d);
          return;
        }
        const LocalProblem L = build_local_problem(problem, topo, artifacts, id, true);
        const auto F = fix_columns(L, pw, wval);
        Vector full = Vector::Zero(L.qp.q.size());
        for (size_t a = 0; a < pw.size(); ++a) full(pw[a]) = wval(static_cast<Index>(a));
        SubsystemDispatch d;
        d.id = id;
        if (!F.free.empty()) {
          const Solution sol = solve_local(F.qp, F.quad);
          if (!sol.optimal())
            throw SubproblemInfeasible(id, fmt::format("{} with coupling value [{}]", to_string(sol.status),
                                                       fmt::join(std::vector<double>(wval.data(), wval.data() + wval.size()), ", ")));
          for (size_t a = 0; a < F.free.size(); ++a) full(F.free[a]) = sol.x(static_cast<Index>(a));
          d.kkt_residual = sol.kkt_residual;
          d.iterations = sol.iterations;
        } else {
          double v = L.qp.constraints.max_violation(full);
          for (const auto& qc : L.quad) v = std::max(v, qc.value(full));
          if (v > cfg.feasibility_tol) throw SubproblemInfeasible(id, fmt::format("fixed point violates constraints by {:.3e}", v));
        }
        d.x = full.head(n);
        d.cost = s.objective.value(d.x);
        disp[static_cast<size_t>(k)] = std::move(d);
      } catch (...) {
        errs[static_cast<size_t>(k)] = std::current_exception();
      }
    });
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
    for (auto& d : disp) res.subsystems[d.id] = std::move(d);
  }
  res.x = assemble_point(problem, res.subsystems);
  for (const auto& [id, d] : res.subsystems) res.total_cost += d.cost;
  res.audit = check_feasibility(problem, res.x, cfg.feasibility_tol);
  res.runtime_s = seconds_since(t0);
  return res;
}

Vector assemble_point(const TreeProblem& problem, const std::map<int, SubsystemDispatch>& parts) {
  Vector x = Vector::Constant(problem.n_x, std::numeric_limits<double>::quiet_NaN());
  for (const auto& [id, d] : parts) {
    const auto& s = problem.subsystem(id);
    for (Index k = 0; k < s.size(); ++k) {
      const Index g = s.indices[k] - 1;
      if (std::isnan(x(g))) x(g) = d.x(k);
    }
  }
  return x;
}

FeasibilityReport check_feasibility(const TreeProblem& problem, const Vector& x, double tol) {
  if (x.size() != problem.n_x) throw DimensionMismatch(fmt::format("point has size {}, n_x = {}", x.size(), problem.n_x));
  FeasibilityReport rep;
  rep.tol = tol;
  for (const auto& s : problem.subsystems) {
    Vector xl(s.size());
    for (Index k = 0; k < s.size(); ++k) {
      xl(k) = x(s.indices[k] - 1);
      if (std::isnan(xl(k))) throw InvalidArgument(fmt::format("point does not cover index {}", s.indices[k]));
    }
    double ev = 0.0, iv = 0.0;
    if (s.polyhedral()) {
      const auto& P = s.polyhedron();
      if (P.num_eq() > 0) ev = (P.Aeq * xl - P.beq).cwiseAbs().maxCoeff();
      if (P.num_in() > 0) iv = std::max(0.0, (P.Ain * xl - P.bin).maxCoeff());
    } else {
      const Vector zy = nlp_local_to_zy(s.nlp(), xl);
      ev = s.nlp().spec->equality_residual(zy);
      iv = s.nlp().spec->inequality_violation(zy);
    }
    rep.equality_violation[s.id] = ev;
    rep.inequality_violation[s.id] = iv;
    rep.max_violation = std::max({rep.max_violation, ev, iv});
  }
  rep.feasible = rep.max_violation <= tol;
  return rep;
}

std::vector<ValueTableEntry> evaluate_value_function(const TreeProblem& problem, const TreeTopology& topo, int id,
                                                     const std::vector<Vector>& grid, int threads) {
  const MonolithicProblem M = assemble_subset(problem, subtree_ids(topo, id));
  const VariableIndexSet& W = topo.coupling.at(id);
  const Positions pw = M.variables.positions_of(W);
  std::vector<ValueTableEntry> out(grid.size());
  parallel_for(static_cast<Index>(grid.size()), threads, [&](Index k) {
    const Vector& z = grid[static_cast<size_t>(k)];
    if (z.size() != W.size()) throw DimensionMismatch("grid point has wrong dimension");
    QuadraticProgram qp = M.qp;
    for (Index a = 0; a < z.size(); ++a) {
      Vector row = Vector::Zero(qp.q.size());
      row(pw[static_cast<size_t>(a)]) = 1.0;
      qp.constraints.add_equality(row, z(a));
    }
    const Solution s = solve_qp(qp);
    ValueTableEntry e;
    e.z = z;
    if (s.optimal()) {
      e.value = s.objective + M.constant;
      e.kkt_residual = s.kkt_residual;
    }
    out[static_cast<size_t>(k)] = std::move(e);
  });
  return out;
}

}  // namespace treedp
