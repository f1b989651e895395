#include "detail_log.hpp"
#include "treedp/errors.hpp"
#include "treedp/solvers.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace treedp {

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::MaxIter: return "MaxIter";
  }
  return "Unknown";
}

Matrix nullspace_basis(const Matrix& A, double tol) {
  const Index n = A.cols();
  if (A.rows() == 0) return Matrix::Identity(n, n);
  Eigen::ColPivHouseholderQR<Matrix> qr(A.transpose());
  qr.setThreshold(tol);
  const Index r = qr.rank();
  Matrix Q = qr.householderQ() * Matrix::Identity(n, n);
  return Q.rightCols(n - r);
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Outcome { Optimal, Unbounded, MaxIter };

void pivot(RowMatrix& T, Index r, Index e) {
  const double p = T(r, e);
  T.row(r) /= p;
  if (!T.row(r).allFinite()) throw NumericalFailure("non-finite entry after pivot");
  for (Index i = 0; i < T.rows(); ++i) {
    if (i == r) continue;
    const double f = T(i, e);
    if (f != 0.0) T.row(i) -= f * T.row(r);
    T(i, e) = 0.0;
  }
  T(r, e) = 1.0;
}

Outcome run_simplex(RowMatrix& T, std::vector<Index>& basis, Index ncols, Index& iters,
                    Index max_iter, const LpOptions& opt) {
  const Index m = T.rows() - 1;
  const Index rhs = T.cols() - 1;
  bool bland = false;
  Index degenerate = 0;
  while (true) {
    if (iters >= max_iter) return Outcome::MaxIter;
    Index e = -1;
    double best = -opt.pivot_tol;
    for (Index j = 0; j < ncols; ++j) {
      const double d = T(m, j);
      if (bland) {
        if (d < -opt.pivot_tol) {
          e = j;
          break;
        }
      } else if (d < best) {
        best = d;
        e = j;
      }
    }
    if (e < 0) return Outcome::Optimal;

    Index r = -1;
    double ratio = 0.0;
    for (Index i = 0; i < m; ++i) {
      const double a = T(i, e);
      if (a <= opt.pivot_tol) continue;
      const double q = std::max(0.0, T(i, rhs)) / a;
      if (r < 0 || q < ratio - 1e-12 || (std::abs(q - ratio) <= 1e-12 && basis[i] < basis[r])) {
        r = i;
        ratio = q;
      }
    }
    if (r < 0) return Outcome::Unbounded;
    degenerate = ratio <= 1e-12 ? degenerate + 1 : 0;
    if (degenerate > opt.degenerate_switch) bland = true;
    pivot(T, r, e);
    basis[r] = e;
    ++iters;
  }
}

}  // namespace

Solution solve_lp(const LinearProgram& lp, const LpOptions& opt) {
  const HPolyhedron& P = lp.constraints;
  P.validate();
  const Index n = P.dim;
  if (lp.c.size() != n)
    throw DimensionMismatch(fmt::format("LP cost has size {}, expected {}", lp.c.size(), n));
  if (!lp.c.allFinite() || !P.Aeq.allFinite() || !P.Ain.allFinite() || !P.beq.allFinite() ||
      !P.bin.allFinite())
    throw InvalidArgument("LP data must be finite");

  const Index me = P.num_eq();
  const Index mi = P.num_in();
  const Index m = me + mi;
  const Index N = 2 * n + mi;

  Solution sol;
  sol.mu = Vector::Zero(me);
  sol.lambda = Vector::Zero(mi);
  if (m == 0) {
    sol.x = Vector::Zero(n);
    sol.status = lp.c.isZero(0.0) ? SolveStatus::Optimal : SolveStatus::Unbounded;
    return sol;
  }

  RowMatrix A = RowMatrix::Zero(m, N);
  Vector b(m);
  Vector cstd = Vector::Zero(N);
  cstd.head(n) = lp.c;
  cstd.segment(n, n) = -lp.c;
  if (me > 0) {
    A.block(0, 0, me, n) = P.Aeq;
    A.block(0, n, me, n) = -P.Aeq;
    b.head(me) = P.beq;
  }
  if (mi > 0) {
    A.block(me, 0, mi, n) = P.Ain;
    A.block(me, n, mi, n) = -P.Ain;
    A.block(me, 2 * n, mi, mi).setIdentity();
    b.tail(mi) = P.bin;
  }
  std::vector<int> sign(m, 1);
  for (Index r = 0; r < m; ++r) {
    if (b(r) < 0) {
      A.row(r) *= -1.0;
      b(r) = -b(r);
      sign[r] = -1;
    }
  }

  std::vector<Index> basis(m, -1);
  std::vector<Index> art_rows;
  for (Index r = 0; r < m; ++r) {
    if (r >= me && sign[r] > 0)
      basis[r] = 2 * n + (r - me);
    else
      art_rows.push_back(r);
  }
  const Index na = static_cast<Index>(art_rows.size());
  const Index max_iter = opt.max_iter > 0 ? opt.max_iter : 50 * (m + N) + 1000;

  RowMatrix T = RowMatrix::Zero(m + 1, N + na + 1);
  T.block(0, 0, m, N) = A;
  T.block(0, N + na, m, 1) = b;
  double art_scale = 1.0;
  for (Index k = 0; k < na; ++k) {
    const Index r = art_rows[k];
    T(r, N + k) = 1.0;
    basis[r] = N + k;
    T.row(m) -= T.row(r);
    T(m, N + k) = 0.0;
    art_scale = std::max(art_scale, b(r));
  }

  Index iters = 0;
  if (na > 0) {
    const Outcome o = run_simplex(T, basis, N + na, iters, max_iter, opt);
    if (o == Outcome::MaxIter) {
      sol.iterations = iters;
      sol.x = Vector::Zero(n);
      return sol;
    }
    const double w = -T(m, N + na);
    if (w > opt.feas_tol * art_scale) {
      sol.status = SolveStatus::Infeasible;
      sol.iterations = iters;
      sol.x = Vector::Zero(n);
      sol.objective = std::numeric_limits<double>::infinity();
      log::debug("lp: infeasible, phase-1 value {:.3e}", w);
      return sol;
    }
  }

  std::vector<bool> keep(m, true);
  for (Index r = 0; r < m; ++r) {
    if (basis[r] < N) continue;
    Index e = -1;
    double best = opt.pivot_tol;
    for (Index j = 0; j < N; ++j) {
      if (std::abs(T(r, j)) > best) {
        best = std::abs(T(r, j));
        e = j;
      }
    }
    if (e >= 0) {
      pivot(T, r, e);
      basis[r] = e;
    } else {
      keep[r] = false;
    }
  }

  std::vector<Index> rows;
  for (Index r = 0; r < m; ++r)
    if (keep[r]) rows.push_back(r);
  const Index mk = static_cast<Index>(rows.size());
  RowMatrix T2 = RowMatrix::Zero(mk + 1, N + 1);
  std::vector<Index> basis2(mk);
  for (Index k = 0; k < mk; ++k) {
    T2.row(k).head(N) = T.row(rows[k]).head(N);
    T2(k, N) = T(rows[k], N + na);
    basis2[k] = basis[rows[k]];
  }
  T2.row(mk).head(N) = cstd.transpose();
  for (Index k = 0; k < mk; ++k) {
    const double cb = cstd(basis2[k]);
    if (cb != 0.0) T2.row(mk) -= cb * T2.row(k);
  }
  for (Index k = 0; k < mk; ++k) T2(mk, basis2[k]) = 0.0;

  const Outcome o = run_simplex(T2, basis2, N, iters, max_iter, opt);
  sol.iterations = iters;

  Vector xs = Vector::Zero(N);
  for (Index k = 0; k < mk; ++k) xs(basis2[k]) = std::max(0.0, T2(k, N));

  Vector y = Vector::Zero(m);
  if (mk > 0) {
    Matrix B(mk, mk);
    Vector bk(mk), cb(mk);
    for (Index k = 0; k < mk; ++k) {
      bk(k) = b(rows[k]);
      for (Index j = 0; j < mk; ++j) B(k, j) = A(rows[k], basis2[j]);
      cb(k) = cstd(basis2[k]);
    }
    Eigen::PartialPivLU<Matrix> lu(B);
    Vector xb = lu.solve(bk);
    if (xb.allFinite() && xb.minCoeff() >= -1e-9 && (B * xb - bk).cwiseAbs().maxCoeff() < 1e-9) {
      for (Index k = 0; k < mk; ++k) xs(basis2[k]) = std::max(0.0, xb(k));
    }
    Vector yk = lu.transpose().solve(cb);
    if (yk.allFinite())
      for (Index k = 0; k < mk; ++k) y(rows[k]) = sign[rows[k]] * yk(k);
  }

  sol.x = xs.head(n) - xs.segment(n, n);
  sol.objective = lp.c.dot(sol.x);
  if (o == Outcome::Unbounded) {
    sol.status = SolveStatus::Unbounded;
    sol.objective = -std::numeric_limits<double>::infinity();
    return sol;
  }
  if (o == Outcome::MaxIter) return sol;

  sol.status = SolveStatus::Optimal;
  sol.mu = -y.head(me);
  sol.lambda = -y.tail(mi);
  Vector stat = lp.c;
  if (me > 0) stat += P.Aeq.transpose() * sol.mu;
  if (mi > 0) stat += P.Ain.transpose() * sol.lambda;
  double kkt = std::max(inf_norm(stat), P.max_violation(sol.x));
  if (mi > 0) {
    kkt = std::max(kkt, std::max(0.0, -sol.lambda.minCoeff()));
    const Vector slack = P.bin - P.Ain * sol.x;
    kkt = std::max(kkt, sol.lambda.cwiseProduct(slack).cwiseAbs().maxCoeff());
  }
  sol.kkt_residual = kkt;
  if (P.max_violation(sol.x) > 1e-6 * (1.0 + std::max(inf_norm(P.bin), inf_norm(P.beq))))
    throw NumericalFailure(fmt::format("simplex returned a point violating constraints by {:.3e}",
                                       P.max_violation(sol.x)));
  return sol;
}

}  // namespace treedp
