#include "local_problem.hpp"

#include "treedp/errors.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace treedp::detail {

QuadraticConstraint ellipsoid_constraint(const Ellipsoid& E, Index n, const Positions& pos) {
  // ||A^{-1}(x_W - c)||^2 - 1 <= 0
  const Matrix Ainv = E.A.inverse();
  Matrix S = Matrix::Zero(E.dim(), n);
  for (size_t k = 0; k < pos.size(); ++k) S.col(pos[k]) = Ainv.col(static_cast<Index>(k));
  const Vector s0 = Ainv * E.c;
  QuadraticConstraint qc;
  qc.P = 2.0 * S.transpose() * S;
  qc.r = -2.0 * S.transpose() * s0;
  qc.k = s0.squaredNorm() - 1.0;
  return qc;
}

LocalProblem build_local_problem(const TreeProblem& problem, const TreeTopology& topo,
                                 const BackwardArtifacts& artifacts, int id, bool with_values) {
  const Subsystem& s = problem.subsystem(id);
  const Index n = s.size();
  const auto& kids = topo.children.at(id);

  Index n_aux = 0;
  if (with_values)
    for (int j : kids)
      if (std::holds_alternative<PiecewiseLinearValue>(artifacts.by_id.at(j).value.form)) ++n_aux;
  const Index N = n + n_aux;

  LocalProblem L;
  L.n_native = n;
  L.qp.Q = Matrix::Zero(N, N);
  L.qp.q = Vector::Zero(N);
  L.qp.Q.topLeftCorner(n, n) = s.objective.Q;
  L.qp.q.head(n) = s.objective.q;
  L.constant = s.objective.constant;

  Positions native(static_cast<size_t>(n));
  for (Index k = 0; k < n; ++k) native[static_cast<size_t>(k)] = k;
  L.qp.constraints = s.polyhedron().embed(N, native);
  L.projection_domain = s.polyhedron();

  Index aux = n;
  for (int j : kids) {
    const auto it = artifacts.by_id.find(j);
    if (it == artifacts.by_id.end()) throw InvalidArgument(fmt::format("missing artifact for child {}", j));
    const SubsystemArtifact& art = it->second;
    const Positions pw = s.indices.positions_of(topo.coupling.at(j));
    const Index dw = static_cast<Index>(pw.size());

    L.projection_domain = L.projection_domain.intersect(art.set.polyhedron.embed(n, pw));
    if (art.set.kind == SetMode::InnerEllipsoid && art.set.ellipsoid) {
      L.quad.push_back(ellipsoid_constraint(*art.set.ellipsoid, N, pw));
    } else {
      Positions pwN = pw;
      L.qp.constraints = L.qp.constraints.intersect(art.set.polyhedron.embed(N, pwN));
    }

    if (!with_values) continue;
    const auto& form = art.value.form;
    if (const auto* qv = std::get_if<QuadraticValue>(&form)) {
      if (qv->H.rows() != dw) throw DimensionMismatch(fmt::format("value function of {} has wrong dimension", j));
      for (Index a = 0; a < dw; ++a) {
        L.qp.q(pw[a]) += qv->h(a);
        for (Index b = 0; b < dw; ++b) L.qp.Q(pw[a], pw[b]) += qv->H(a, b);
      }
      L.constant += qv->constant;
    } else if (const auto* pl = std::get_if<PiecewiseLinearValue>(&form)) {
      // t >= v_l + g_l'(z - p_l)
      L.qp.q(aux) += 1.0;
      for (Index r = 0; r < pl->points.rows(); ++r) {
        Vector row = Vector::Zero(N);
        for (Index a = 0; a < dw; ++a) row(pw[a]) = pl->slopes(r, a);
        row(aux) = -1.0;
        L.qp.constraints.add_inequality(row, pl->slopes.row(r).dot(pl->points.row(r)) - pl->values(r));
      }
      ++aux;
    }
  }
  return L;
}

FixedProblem fix_columns(const LocalProblem& lp, const Positions& fixed, const Vector& values) {
  const Index N = lp.qp.q.size();
  std::vector<bool> is_fixed(static_cast<size_t>(N), false);
  for (Index p : fixed) is_fixed[static_cast<size_t>(p)] = true;
  FixedProblem F;
  for (Index k = 0; k < N; ++k)
    if (!is_fixed[static_cast<size_t>(k)]) F.free.push_back(k);

  const Matrix& Q = lp.qp.Q;
  const Matrix Qff = gather_columns(Matrix(gather_columns(Q, F.free).transpose()), F.free);
  const Matrix Qfx = gather_columns(Matrix(gather_columns(Q, fixed).transpose()), F.free);  // |fixed| x |free|
  const Matrix Qxx = gather_columns(Matrix(gather_columns(Q, fixed).transpose()), fixed);
  F.qp.Q = Qff;
  F.qp.q = gather(lp.qp.q, F.free) + Qfx.transpose() * values;
  F.constant = lp.constant + 0.5 * values.dot(Qxx * values) + gather(lp.qp.q, fixed).dot(values);

  const HPolyhedron& P = lp.qp.constraints;
  F.qp.constraints = HPolyhedron(static_cast<Index>(F.free.size()));
  F.qp.constraints.Aeq = gather_columns(P.Aeq, F.free);
  F.qp.constraints.beq = P.beq - gather_columns(P.Aeq, fixed) * values;
  F.qp.constraints.Ain = gather_columns(P.Ain, F.free);
  F.qp.constraints.bin = P.bin - gather_columns(P.Ain, fixed) * values;

  for (const auto& qc : lp.quad) {
    QuadraticConstraint r;
    const Matrix Pff = gather_columns(Matrix(gather_columns(qc.P, F.free).transpose()), F.free);
    const Matrix Pfx = gather_columns(Matrix(gather_columns(qc.P, fixed).transpose()), F.free);
    const Matrix Pxx = gather_columns(Matrix(gather_columns(qc.P, fixed).transpose()), fixed);
    r.P = Pff;
    r.r = gather(qc.r, F.free) + Pfx.transpose() * values;
    r.k = qc.k + 0.5 * values.dot(Pxx * values) + gather(qc.r, fixed).dot(values);
    F.quad.push_back(r);
  }
  return F;
}

Solution solve_local(const QuadraticProgram& qp, const std::vector<QuadraticConstraint>& quad) {
  if (quad.empty()) return solve_qp(qp);
  return solve_qcqp(qp, quad);
}

}  // namespace treedp::detail
