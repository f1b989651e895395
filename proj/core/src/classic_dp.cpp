#include "treedp/dp.hpp"

#include "local_problem.hpp"
#include "treedp/errors.hpp"

#include <fmt/format.h>

namespace treedp {

namespace {

Matrix pseudo_inverse(const Matrix& A, double tol = 1e-10) {
  if (A.size() == 0) return Matrix::Zero(A.cols(), A.rows());
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A.rows(), A.cols());
  cod.setThreshold(tol);
  cod.compute(A);
  return cod.pseudoInverse();
}

QuadraticValue eliminate(const detail::LocalProblem& L, const Positions& pw, int id) {
  const Index n = L.qp.q.size();
  const Index dw = static_cast<Index>(pw.size());
  const HPolyhedron& C = L.qp.constraints;
  if (C.num_in() > 0 || !L.quad.empty())
    throw Unsupported(fmt::format("subsystem {} has inequality constraints; the exact recursion needs equalities only", id));

  std::vector<bool> is_w(static_cast<size_t>(n), false);
  for (Index p : pw) is_w[static_cast<size_t>(p)] = true;
  Positions py;
  for (Index k = 0; k < n; ++k)
    if (!is_w[static_cast<size_t>(k)]) py.push_back(k);
  const Index ny = static_cast<Index>(py.size());

  // x_W = w, y = G w + g0 + N v
  Matrix G = Matrix::Zero(ny, dw);
  Vector g0 = Vector::Zero(ny);
  Matrix N = Matrix::Identity(ny, ny);
  if (C.num_eq() > 0 && ny > 0) {
    const Matrix Ay = gather_columns(C.Aeq, py);
    const Matrix Aw = gather_columns(C.Aeq, pw);
    const Matrix Ap = pseudo_inverse(Ay);
    G = -Ap * Aw;
    g0 = Ap * C.beq;
    N = nullspace_basis(Ay, 1e-10);
  }
  const Index nv = N.cols();
  Matrix Mw = Matrix::Zero(n, dw);
  Matrix Mv = Matrix::Zero(n, nv);
  Vector m0 = Vector::Zero(n);
  for (Index a = 0; a < dw; ++a) Mw(pw[static_cast<size_t>(a)], a) = 1.0;
  for (Index k = 0; k < ny; ++k) {
    const Index r = py[static_cast<size_t>(k)];
    Mw.row(r) = G.row(k);
    Mv.row(r) = N.row(k);
    m0(r) = g0(k);
  }

  const Matrix& Q = L.qp.Q;
  const Vector& q = L.qp.q;
  Matrix X = Mw;
  Vector x0 = m0;
  if (nv > 0) {
    const Matrix Qvv = Mv.transpose() * Q * Mv;
    const Matrix Qvw = Mv.transpose() * Q * Mw;
    const Vector qv = Mv.transpose() * (Q * m0 + q);
    const Matrix P = pseudo_inverse(Qvv);
    const Matrix K = -P * Qvw;
    const Vector k = -P * qv;
    const double scale = 1.0 + Qvv.cwiseAbs().maxCoeff();
    if ((Qvv * K + Qvw).cwiseAbs().maxCoeff() > 1e-8 * scale || (Qvv * k + qv).cwiseAbs().maxCoeff() > 1e-8 * scale)
      throw Unsupported(fmt::format("subproblem of subsystem {} is unbounded in its local variables", id));
    X += Mv * K;
    x0 += Mv * k;
  }
  QuadraticValue V;
  V.H = X.transpose() * Q * X;
  V.H = 0.5 * (V.H + V.H.transpose());
  V.h = X.transpose() * (Q * x0 + q);
  V.constant = 0.5 * x0.dot(Q * x0) + q.dot(x0) + L.constant;
  return V;
}

}  // namespace

ClassicDpResult classic_dp(const TreeProblem& problem, const TreeTopology& topo) {
  problem.validate();
  for (const auto& s : problem.subsystems)
    if (!s.polyhedral()) throw Unsupported(fmt::format("subsystem {} is nonlinear", s.id));

  ClassicDpResult out;
  BackwardArtifacts partial;
  const auto levels = topo.levels();
  for (size_t lv = levels.size(); lv-- > 1;) {
    for (int id : levels[lv]) {
      const Subsystem& s = problem.subsystem(id);
      const Positions pw = s.indices.positions_of(topo.coupling.at(id));
      const detail::LocalProblem L = detail::build_local_problem(problem, topo, partial, id, true);
      QuadraticValue V = eliminate(L, pw, id);
      SubsystemArtifact art;
      art.id = id;
      art.set.polyhedron = HPolyhedron(static_cast<Index>(pw.size()));
      art.value = ValueFunctionApprox::quadratic(V);
      partial.by_id[id] = art;
      out.value_functions[id] = std::move(V);
    }
  }

  SweepConfig cfg;
  cfg.value_mode = ValueMode::Provided;
  for (const auto& [id, V] : out.value_functions) cfg.provided[id] = ValueFunctionApprox::quadratic(V);
  const BackwardArtifacts arts = backward_sweep(problem, topo, cfg);
  out.forward = forward_sweep(problem, topo, arts, cfg);
  return out;
}

}  // namespace treedp
