#include "detail_log.hpp"
#include "treedp/errors.hpp"
#include "treedp/solvers.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace treedp {

namespace {

struct WorkingSet {
  std::vector<Index> ids;  // < me: equality row, otherwise me + inequality row

  Matrix rows(const HPolyhedron& P) const {
    Matrix A(static_cast<Index>(ids.size()), P.dim);
    const Index me = P.num_eq();
    for (size_t k = 0; k < ids.size(); ++k) {
      const Index id = ids[k];
      A.row(static_cast<Index>(k)) = id < me ? P.Aeq.row(id) : P.Ain.row(id - me);
    }
    return A;
  }
};

Index rank_of(const Matrix& A) {
  if (A.rows() == 0) return 0;
  Eigen::ColPivHouseholderQR<Matrix> qr(A.transpose());
  qr.setThreshold(1e-10);
  return qr.rank();
}

bool independent_of(const Matrix& AW, const Eigen::RowVectorXd& a) {
  if (a.norm() == 0.0) return false;
  Matrix S(AW.rows() + 1, AW.cols());
  S << AW, a;
  return rank_of(S) == AW.rows() + 1;
}

double objective_of(const QuadraticProgram& qp, const Vector& x) {
  return 0.5 * x.dot(qp.Q * x) + qp.q.dot(x);
}

}  // namespace

Solution solve_qp(const QuadraticProgram& in, const QpOptions& opt) {
  const HPolyhedron& P = in.constraints;
  P.validate();
  const Index n = P.dim;
  if (in.Q.rows() != n || in.Q.cols() != n || in.q.size() != n)
    throw DimensionMismatch(fmt::format("QP data sized ({}x{}, {}) for dim {}", in.Q.rows(),
                                        in.Q.cols(), in.q.size(), n));
  const double qscale = std::max(1.0, n > 0 ? in.Q.cwiseAbs().maxCoeff() : 0.0);
  if (n > 0 && (in.Q - in.Q.transpose()).cwiseAbs().maxCoeff() > 1e-10 * qscale)
    throw InvalidArgument("QP Hessian is not symmetric");

  QuadraticProgram qp{0.5 * (in.Q + in.Q.transpose()), in.q, P};
  if (n > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(qp.Q, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10 * qscale)
      throw InvalidArgument(fmt::format("QP Hessian is not positive semidefinite (min eigenvalue {:.3e})",
                                        es.eigenvalues().minCoeff()));
  }

  const Index me = P.num_eq();
  const Index mi = P.num_in();
  Solution sol;
  sol.mu = Vector::Zero(me);
  sol.lambda = Vector::Zero(mi);

  const double bscale = 1.0 + std::max(inf_norm(P.beq), inf_norm(P.bin));
  Vector x;
  if (opt.warm_start && opt.warm_start->size() == n && P.max_violation(*opt.warm_start) <= opt.tol * bscale) {
    x = *opt.warm_start;
  } else {
    Solution start = solve_lp({Vector::Zero(n), P});
    if (start.status != SolveStatus::Optimal) {
      sol.status = start.status == SolveStatus::Infeasible ? SolveStatus::Infeasible : SolveStatus::MaxIter;
      sol.x = start.x;
      sol.iterations = start.iterations;
      return sol;
    }
    x = start.x;
  }

  WorkingSet W;
  {
    Matrix AW(0, n);
    for (Index i = 0; i < me; ++i) {
      if (independent_of(AW, P.Aeq.row(i))) {
        W.ids.push_back(i);
        AW = W.rows(P);
      }
    }
    for (Index i = 0; i < mi; ++i) {
      const double s = P.bin(i) - P.Ain.row(i).dot(x);
      if (std::abs(s) <= opt.tol * (1.0 + std::abs(P.bin(i))) && independent_of(AW, P.Ain.row(i))) {
        W.ids.push_back(me + i);
        AW = W.rows(P);
      }
    }
  }

  const Index max_iter = opt.max_iter > 0 ? opt.max_iter : 1000 + 20 * (n + me + mi);
  Index iter = 0;
  Index stalled = 0;
  double last_obj = objective_of(qp, x);
  bool converged = false;
  bool unbounded = false;
  Vector wl;  // multipliers of the working set

  while (iter < max_iter) {
    ++iter;
    const Vector g = qp.Q * x + qp.q;
    const Matrix AW = W.rows(P);
    const Matrix Z = nullspace_basis(AW);
    Vector p = Vector::Zero(n);
    bool ray = false;
    if (Z.cols() > 0) {
      const Matrix H = Z.transpose() * qp.Q * Z;
      const Vector gz = Z.transpose() * g;
      Eigen::SelfAdjointEigenSolver<Matrix> es(H);
      const Vector& ev = es.eigenvalues();
      const Matrix& V = es.eigenvectors();
      const double hscale = std::max(1.0, ev.cwiseAbs().maxCoeff());
      Vector pz = Vector::Zero(Z.cols());
      Vector null_part = Vector::Zero(Z.cols());
      for (Index k = 0; k < ev.size(); ++k) {
        const double c = V.col(k).dot(gz);
        if (ev(k) <= 1e-10 * hscale)
          null_part -= c * V.col(k);
        else
          pz -= (c / ev(k)) * V.col(k);
      }
      if (null_part.norm() > 1e-9 * (1.0 + inf_norm(g))) {
        p = Z * null_part;
        ray = true;
      } else {
        p = Z * pz;
      }
    }

    if (!ray && inf_norm(p) <= 1e-12 * (1.0 + inf_norm(x))) {
      if (AW.rows() > 0) {
        wl = AW.transpose().colPivHouseholderQr().solve(-g);
      } else {
        wl.resize(0);
      }
      const double dtol = opt.tol * (1.0 + inf_norm(g));
      Index drop = -1;
      double most = -dtol;
      const bool bland = stalled > 50;
      for (size_t k = 0; k < W.ids.size(); ++k) {
        if (W.ids[k] < me) continue;
        const double l = wl(static_cast<Index>(k));
        if (bland) {
          if (l < -dtol && (drop < 0 || W.ids[k] < W.ids[static_cast<size_t>(drop)])) drop = static_cast<Index>(k);
        } else if (l < most) {
          most = l;
          drop = static_cast<Index>(k);
        }
      }
      if (drop < 0) {
        converged = true;
        break;
      }
      W.ids.erase(W.ids.begin() + drop);
      ++stalled;
      continue;
    }

    Index block = -1;
    double alpha = ray ? std::numeric_limits<double>::infinity() : 1.0;
    const double pn = p.norm();
    for (Index i = 0; i < mi; ++i) {
      if (std::find(W.ids.begin(), W.ids.end(), me + i) != W.ids.end()) continue;
      const double ap = P.Ain.row(i).dot(p);
      if (ap <= 1e-12 * P.Ain.row(i).norm() * pn) continue;
      const double s = std::max(0.0, P.bin(i) - P.Ain.row(i).dot(x));
      const double a = s / ap;
      if (a < alpha) {
        alpha = a;
        block = i;
      }
    }
    if (ray && block < 0) {
      unbounded = true;
      break;
    }
    x += alpha * p;
    if (block >= 0) W.ids.push_back(me + block);

    const double obj = objective_of(qp, x);
    if (obj < last_obj - 1e-14 * (1.0 + std::abs(last_obj))) {
      stalled = 0;
      last_obj = obj;
    }
  }

  sol.x = x;
  sol.iterations = iter;
  sol.objective = objective_of(qp, x);
  if (unbounded) {
    sol.status = SolveStatus::Unbounded;
    sol.objective = -std::numeric_limits<double>::infinity();
    return sol;
  }
  if (!converged) {
    log::debug("qp: iteration limit {} reached", max_iter);
    sol.status = SolveStatus::MaxIter;
    return sol;
  }

  for (size_t k = 0; k < W.ids.size(); ++k) {
    const Index id = W.ids[k];
    if (id < me)
      sol.mu(id) = wl(static_cast<Index>(k));
    else
      sol.lambda(id - me) = std::max(0.0, wl(static_cast<Index>(k)));
  }
  Vector stat = qp.Q * x + qp.q;
  if (me > 0) stat += P.Aeq.transpose() * sol.mu;
  if (mi > 0) stat += P.Ain.transpose() * sol.lambda;
  double kkt = std::max(inf_norm(stat), P.max_violation(x));
  if (mi > 0) kkt = std::max(kkt, sol.lambda.cwiseProduct(P.bin - P.Ain * x).cwiseAbs().maxCoeff());
  sol.kkt_residual = kkt;
  sol.status = SolveStatus::Optimal;
  log::debug("qp: optimal after {} iterations, kkt {:.3e}", iter, kkt);
  return sol;
}

}  // namespace treedp
