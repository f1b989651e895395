#include "treedp/ocp.hpp"

#include "detail_log.hpp"
#include "treedp/errors.hpp"
#include "treedp/polyhedra.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>

namespace treedp {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Positions iota(Index first, Index count) {
  Positions p(static_cast<size_t>(count));
  for (Index k = 0; k < count; ++k) p[static_cast<size_t>(k)] = first + k;
  return p;
}

Matrix block_diag(const Matrix& a, const Matrix& b, const Matrix& c) {
  Matrix M = Matrix::Zero(a.rows() + b.rows() + c.rows(), a.cols() + b.cols() + c.cols());
  M.topLeftCorner(a.rows(), a.cols()) = a;
  M.block(a.rows(), a.cols(), b.rows(), b.cols()) = b;
  M.bottomRightCorner(c.rows(), c.cols()) = c;
  return M;
}

// {(z, u, z') : z' = A z + B u, u in U, z' in target}
HPolyhedron stage_polyhedron(const LtiOcpSpec& s, const HPolyhedron& target) {
  const Index n = s.nz(), m = s.nu(), d = 2 * n + m;
  HPolyhedron P(d);
  P.Aeq.resize(n, d);
  P.Aeq << s.A, s.B, -Matrix::Identity(n, n);
  P.beq = Vector::Zero(n);
  P = P.intersect(s.U.embed(d, iota(n, m)));
  return P.intersect(target.embed(d, iota(n + m, n)));
}

}  // namespace

void LtiOcpSpec::validate() const {
  const Index n = nz(), m = nu();
  if (n == 0 || A.cols() != n || B.rows() != n || m == 0) throw DimensionMismatch("A must be square and B must have n rows");
  if (Qz.rows() != n || Qz.cols() != n || Ru.rows() != m || Ru.cols() != m || P.rows() != n || P.cols() != n)
    throw DimensionMismatch("cost weights have inconsistent sizes");
  if (Z.dim != n || ZT.dim != n || U.dim != m || z0.size() != n) throw DimensionMismatch("sets or z0 have wrong dimension");
  if (T < 1) throw InvalidArgument("horizon must be at least 1");
  for (const Matrix* W : {&Qz, &Ru, &P}) {
    if ((*W - W->transpose()).cwiseAbs().maxCoeff() > 1e-12) throw InvalidArgument("cost weights must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(*W);
    if (es.eigenvalues().minCoeff() < -1e-12) throw InvalidArgument("cost weights must be positive semidefinite");
  }
  if (is_empty(ZT)) throw InvalidArgument("terminal set is empty");
}

LtiOcpSpec LtiOcpSpec::reference_instance() {
  LtiOcpSpec s;
  s.A.resize(2, 2);
  s.A << 1.5, 1.0, 0.0, 1.5;
  s.B.resize(2, 1);
  s.B << 0.0, 0.8;
  s.Qz = Matrix::Identity(2, 2);
  s.Ru = Matrix::Constant(1, 1, 0.1);
  s.Z = HPolyhedron::box(Vector::Constant(2, -1e6), Vector::Constant(2, 1e6));
  s.U = HPolyhedron::box(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
  s.P.resize(2, 2);
  s.P << 7.80, 4.87, 4.87, 4.82;
  s.ZT = HPolyhedron::box(Vector::Constant(2, -0.19), Vector::Constant(2, 0.19));
  s.z0.resize(2);
  s.z0 << -0.3, -0.2;
  s.T = 3;
  return s;
}

LtiOcpSpec LtiOcpSpec::widened(double w) const {
  LtiOcpSpec s = *this;
  s.Z = HPolyhedron::box(Vector::Constant(nz(), -w), Vector::Constant(nz(), w));
  s.ZT = s.Z;
  s.U = HPolyhedron::box(Vector::Constant(nu(), -w), Vector::Constant(nu(), w));
  return s;
}

VariableIndexSet OcpLayout::state(Index t) const {
  const Index first = t * (nz + nu) + 1;
  return VariableIndexSet::range(first, first + nz - 1);
}

VariableIndexSet OcpLayout::input(Index t) const {
  const Index first = t * (nz + nu) + nz + 1;
  return VariableIndexSet::range(first, first + nu - 1);
}

std::pair<TreeProblem, TreeTopology> ocp_to_tree(const LtiOcpSpec& spec) {
  spec.validate();
  const Index n = spec.nz(), m = spec.nu();
  const OcpLayout L{n, m, spec.T};
  TreeProblem prob;
  prob.n_x = L.n_x();

  Subsystem root;
  root.id = 0;
  root.indices = L.state(0);
  root.objective = QuadraticObjective::zero(n);
  root.constraints = HPolyhedron(Matrix::Identity(n, n), spec.z0, Matrix(0, n), Vector(0));
  prob.subsystems.push_back(root);

  for (Index t = 1; t <= spec.T; ++t) {
    Subsystem s;
    s.id = static_cast<int>(t);
    s.indices = L.state(t - 1).unite(L.input(t - 1)).unite(L.state(t));
    const Matrix terminal = t == spec.T ? Matrix(2.0 * spec.P) : Matrix(Matrix::Zero(n, n));
    s.objective.Q = block_diag(2.0 * spec.Qz, 2.0 * spec.Ru, terminal);
    s.objective.q = Vector::Zero(2 * n + m);
    s.constraints = stage_polyhedron(spec, t == spec.T ? spec.ZT : spec.Z);
    prob.subsystems.push_back(std::move(s));
  }
  TreeTopology topo = verify_tree(prob, build_interaction_graph(prob), 0);
  return {std::move(prob), std::move(topo)};
}

std::vector<HPolyhedron> backward_reachable_sets(const LtiOcpSpec& spec, Index N) {
  spec.validate();
  if (N < 0) throw InvalidArgument("number of steps must be non-negative");
  const Index n = spec.nz();
  std::vector<HPolyhedron> R{spec.ZT};
  for (Index k = 1; k <= N; ++k) {
    const HPolyhedron target = k == 1 ? spec.ZT : R.back().intersect(spec.Z);
    HPolyhedron next = fourier_motzkin_project(stage_polyhedron(spec, target), VariableIndexSet::range(1, n));
    if (is_empty(next))
      throw EmptyCouplingSet(static_cast<int>(k), fmt::format("predecessor set is empty after {} steps", k));
    R.push_back(std::move(next));
  }
  return R;
}

Trajectory extract_trajectory(const LtiOcpSpec& spec, const Vector& x) {
  const OcpLayout L{spec.nz(), spec.nu(), spec.T};
  if (x.size() != L.n_x()) throw DimensionMismatch("trajectory vector has wrong size");
  Trajectory tr;
  tr.z.resize(spec.T + 1, spec.nz());
  tr.u.resize(spec.T, spec.nu());
  for (Index t = 0; t <= spec.T; ++t) {
    const auto si = L.state(t);
    for (Index k = 0; k < spec.nz(); ++k) tr.z(t, k) = x(si[k] - 1);
    if (t == spec.T) break;
    const auto ui = L.input(t);
    for (Index k = 0; k < spec.nu(); ++k) tr.u(t, k) = x(ui[k] - 1);
  }
  for (Index t = 0; t < spec.T; ++t) {
    const Vector z = tr.z.row(t).transpose(), u = tr.u.row(t).transpose();
    tr.cost += z.dot(spec.Qz * z) + u.dot(spec.Ru * u);
    const Vector r = tr.z.row(t + 1).transpose() - spec.A * z - spec.B * u;
    tr.dynamics_residual = std::max(tr.dynamics_residual, r.cwiseAbs().maxCoeff());
  }
  const Vector zT = tr.z.row(spec.T).transpose();
  tr.cost += zT.dot(spec.P * zT);
  return tr;
}

OcpReport run_ocp_demo(const LtiOcpSpec& spec, const OcpDemoConfig& config) {
  const auto [prob, topo] = ocp_to_tree(spec);
  OcpReport rep;

  auto t0 = std::chrono::steady_clock::now();
  const MonolithicProblem M = assemble_monolithic(prob);
  const Solution mono = solve_qp(M.qp);
  if (!mono.optimal()) throw InfeasibleSet(fmt::format("monolithic problem: {}", to_string(mono.status)));
  Vector xm = Vector::Zero(prob.n_x);
  for (Index k = 0; k < M.variables.size(); ++k) xm(M.variables[k] - 1) = mono.x(k);
  rep.monolithic = extract_trajectory(spec, xm);
  rep.monolithic_runtime_s = seconds_since(t0);

  SweepConfig cfg;
  cfg.threads = config.threads;
  if (config.variant == OcpVariant::EllipsoidAtStage) {
    if (config.ellipsoid_stage < 1 || config.ellipsoid_stage > spec.T)
      throw InvalidArgument(fmt::format("ellipsoid stage must be in [1, {}]", spec.T));
    cfg.set_mode[static_cast<int>(config.ellipsoid_stage)] = SetMode::InnerEllipsoid;
  }
  if (config.value_fn == OcpValueFn::TerminalQuadratic) {
    LtiOcpSpec stripped = spec;
    stripped.Z = HPolyhedron(spec.nz());
    stripped.ZT = HPolyhedron(spec.nz());
    stripped.U = HPolyhedron(spec.nu());
    const auto [sp, st] = ocp_to_tree(stripped);
    const ClassicDpResult exact = classic_dp(sp, st);
    cfg.value_mode = ValueMode::Provided;
    for (const auto& [id, V] : exact.value_functions) cfg.provided[id] = ValueFunctionApprox::quadratic(V);
  }

  const BackwardArtifacts arts = backward_sweep(prob, topo, cfg);
  rep.backward_runtime_s = arts.runtime_s;
  for (const auto& [id, a] : arts.by_id) {
    rep.stage_sets[id] = a.set.exact ? *a.set.exact : a.set.polyhedron;
    if (a.set.ellipsoid) {
      rep.ellipsoid = a.set.ellipsoid;
      rep.ellipsoid_certificate = ellipsoid_row_certificate(*a.set.ellipsoid, *a.set.exact);
    }
  }
  rep.initial_state_admissible = arts.by_id.at(1).set.contains(spec.z0, 1e-9);

  const ForwardResult fw = forward_sweep(prob, topo, arts, cfg);
  rep.forward_runtime_s = fw.runtime_s;
  rep.audit = fw.audit;
  rep.fpadp = extract_trajectory(spec, fw.x);
  rep.terminal_violation = std::max(0.0, spec.ZT.max_violation(rep.fpadp.z.row(spec.T).transpose()));
  log::info("ocp demo: monolithic cost {:.6f}, fp-adp cost {:.6f}", rep.monolithic.cost, rep.fpadp.cost);
  return rep;
}

}  // namespace treedp
