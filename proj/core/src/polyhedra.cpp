#include "treedp/polyhedra.hpp"

#include "detail_log.hpp"
#include "treedp/errors.hpp"
#include "treedp/solvers.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace treedp {

namespace {

// Working representation for elimination: rows over the full original
// dimension, with eliminated columns zeroed.
struct RowSystem {
  Matrix Aeq;
  Vector beq;
  Matrix Ain;
  Vector bin;
  bool infeasible = false;
};

void drop_row(Matrix& A, Vector& b, Index r) {
  const Index m = A.rows();
  if (r < m - 1) {
    A.block(r, 0, m - r - 1, A.cols()) = A.block(r + 1, 0, m - r - 1, A.cols()).eval();
    b.segment(r, m - r - 1) = b.segment(r + 1, m - r - 1).eval();
  }
  A.conservativeResize(m - 1, A.cols());
  b.conservativeResize(m - 1);
}

HPolyhedron select_columns(const HPolyhedron& P, const Positions& cols) {
  HPolyhedron R(static_cast<Index>(cols.size()));
  R.Aeq = gather_columns(P.Aeq, cols);
  R.beq = P.beq;
  R.Ain = gather_columns(P.Ain, cols);
  R.bin = P.bin;
  return R;
}

}  // namespace

HPolyhedron empty_polyhedron(Index dim) {
  HPolyhedron P(dim);
  P.Ain = Matrix::Zero(1, dim);
  P.bin = Vector::Constant(1, -1.0);
  return P;
}

HPolyhedron normalize_rows(const HPolyhedron& P, double dedup_tol) {
  P.validate();
  HPolyhedron R(P.dim);
  R.Aeq = P.Aeq;
  R.beq = P.beq;
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  bool infeasible = false;
  for (Index i = 0; i < P.num_in(); ++i) {
    const double nrm = P.Ain.row(i).norm();
    if (nrm <= 1e-12) {
      if (P.bin(i) < -1e-9) infeasible = true;
      continue;
    }
    Eigen::RowVectorXd a = P.Ain.row(i) / nrm;
    const double b = P.bin(i) / nrm;
    bool merged = false;
    for (size_t k = 0; k < rows.size(); ++k) {
      if ((rows[k] - a).cwiseAbs().maxCoeff() <= dedup_tol) {
        rhs[k] = std::min(rhs[k], b);
        merged = true;
        break;
      }
    }
    if (!merged) {
      rows.push_back(a);
      rhs.push_back(b);
    }
  }
  if (infeasible) return empty_polyhedron(P.dim);
  R.Ain.resize(static_cast<Index>(rows.size()), P.dim);
  R.bin.resize(static_cast<Index>(rows.size()));
  for (size_t k = 0; k < rows.size(); ++k) {
    R.Ain.row(static_cast<Index>(k)) = rows[k];
    R.bin(static_cast<Index>(k)) = rhs[k];
  }
  return R;
}

ReducedPolyhedron eliminate_equalities(const HPolyhedron& P) {
  P.validate();
  const Index d = P.dim;
  ReducedPolyhedron out;
  if (!P.has_equalities()) {
    out.reduced = P;
    out.map = {Matrix::Identity(d, d), Vector::Zero(d)};
    out.free_coordinates.resize(static_cast<size_t>(d));
    std::iota(out.free_coordinates.begin(), out.free_coordinates.end(), Index{0});
    return out;
  }

  Matrix R(P.num_eq(), d + 1);
  R << P.Aeq, P.beq;
  const double scale = std::max(1.0, P.Aeq.cwiseAbs().maxCoeff());
  const double tol = 1e-10 * scale;
  std::vector<Index> pivots;
  Index row = 0;
  for (Index col = 0; col < d && row < R.rows(); ++col) {
    Index best = row;
    for (Index i = row + 1; i < R.rows(); ++i)
      if (std::abs(R(i, col)) > std::abs(R(best, col))) best = i;
    if (std::abs(R(best, col)) <= tol) continue;
    R.row(row).swap(R.row(best));
    R.row(row) /= R(row, col);
    for (Index i = 0; i < R.rows(); ++i) {
      if (i == row) continue;
      const double f = R(i, col);
      if (f != 0.0) R.row(i) -= f * R.row(row);
    }
    pivots.push_back(col);
    ++row;
  }
  for (Index i = row; i < R.rows(); ++i) {
    if (std::abs(R(i, d)) > 1e-9 * (1.0 + inf_norm(P.beq)))
      throw InconsistentEqualities(fmt::format("row {} reduces to 0 = {:.6g}", i, R(i, d)));
  }

  std::vector<bool> is_pivot(static_cast<size_t>(d), false);
  for (Index c : pivots) is_pivot[static_cast<size_t>(c)] = true;
  for (Index c = 0; c < d; ++c)
    if (!is_pivot[static_cast<size_t>(c)]) out.free_coordinates.push_back(c);
  const Index nf = static_cast<Index>(out.free_coordinates.size());

  Matrix T = Matrix::Zero(d, nf);
  Vector t0 = Vector::Zero(d);
  for (Index k = 0; k < nf; ++k) T(out.free_coordinates[static_cast<size_t>(k)], k) = 1.0;
  for (size_t j = 0; j < pivots.size(); ++j) {
    const Index r = static_cast<Index>(j);
    t0(pivots[j]) = R(r, d);
    for (Index k = 0; k < nf; ++k) T(pivots[j], k) = -R(r, out.free_coordinates[static_cast<size_t>(k)]);
  }
  out.map = {T, t0};
  out.reduced = HPolyhedron(nf);
  out.reduced.Ain = P.Ain * T;
  out.reduced.bin = P.bin - P.Ain * t0;
  return out;
}

bool is_empty(const HPolyhedron& P) {
  const Solution s = solve_lp({Vector::Zero(P.dim), P});
  return s.status == SolveStatus::Infeasible;
}

HPolyhedron remove_redundancy(const HPolyhedron& P, double tol) {
  P.validate();
  if (P.num_in() <= 1 || is_empty(P)) return P;
  std::vector<bool> alive(static_cast<size_t>(P.num_in()), true);
  // constraint generation: each test LP holds only the rows that cut off an earlier optimizer
  const Index m = P.num_in();
  Vector scale(m);
  for (Index i = 0; i < m; ++i) scale(i) = std::max(P.Ain.row(i).norm(), 1e-300);
  std::vector<Index> active;
  for (Index r = 0; r < m; ++r) {
    std::erase_if(active, [&](Index i) { return !alive[static_cast<size_t>(i)] || i == r; });
    std::vector<Index> rows = active;
    while (true) {
      HPolyhedron Q(P.dim);
      Q.Aeq = P.Aeq;
      Q.beq = P.beq;
      Q.Ain.resize(static_cast<Index>(rows.size()) + 1, P.dim);
      Q.bin.resize(static_cast<Index>(rows.size()) + 1);
      for (size_t k = 0; k < rows.size(); ++k) {
        Q.Ain.row(static_cast<Index>(k)) = P.Ain.row(rows[k]);
        Q.bin(static_cast<Index>(k)) = P.bin(rows[k]);
      }
      // the relaxed copy of row r keeps the LP bounded
      Q.Ain.row(static_cast<Index>(rows.size())) = P.Ain.row(r);
      Q.bin(static_cast<Index>(rows.size())) = P.bin(r) + 1.0;
      const Solution s = solve_lp(LinearProgram{-P.Ain.row(r).transpose(), Q});
      if (s.status != SolveStatus::Optimal) break;
      if (-s.objective <= P.bin(r) + tol) {
        alive[static_cast<size_t>(r)] = false;
        break;
      }
      Index worst = -1;
      double worst_v = tol;
      for (Index i = 0; i < m; ++i) {
        if (i == r || !alive[static_cast<size_t>(i)]) continue;
        const double v = (P.Ain.row(i).dot(s.x) - P.bin(i)) / scale(i);
        if (v > worst_v) {
          worst_v = v;
          worst = i;
        }
      }
      if (worst < 0) break;
      rows.push_back(worst);
      active.push_back(worst);
    }
  }
  HPolyhedron R(P.dim);
  R.Aeq = P.Aeq;
  R.beq = P.beq;
  const Index kept = static_cast<Index>(std::count(alive.begin(), alive.end(), true));
  R.Ain.resize(kept, P.dim);
  R.bin.resize(kept);
  Index k = 0;
  for (Index i = 0; i < P.num_in(); ++i) {
    if (!alive[static_cast<size_t>(i)]) continue;
    R.Ain.row(k) = P.Ain.row(i);
    R.bin(k) = P.bin(i);
    ++k;
  }
  return R;
}

HPolyhedron fourier_motzkin_project(const HPolyhedron& P, const VariableIndexSet& keep,
                                    const PolyhedronTolerances& tol) {
  P.validate();
  if (keep.max_index() > P.dim)
    throw DimensionMismatch(fmt::format("keep set {} exceeds dimension {}", keep.str(), P.dim));
  const Index d = P.dim;
  std::vector<bool> kept(static_cast<size_t>(d), false);
  for (Index i : keep) kept[static_cast<size_t>(i - 1)] = true;
  std::vector<bool> gone(static_cast<size_t>(d), false);

  Positions keep_cols;
  for (Index i : keep) keep_cols.push_back(i - 1);

  Matrix Aeq = P.Aeq;
  Vector beq = P.beq;
  Matrix Ain = P.Ain;
  Vector bin = P.bin;

  // Substitute equalities through eliminated variables.
  while (true) {
    Index best_row = -1;
    Index best_col = -1;
    double best = 0.0;
    for (Index r = 0; r < Aeq.rows(); ++r) {
      const double rs = std::max(1e-300, Aeq.row(r).cwiseAbs().maxCoeff());
      for (Index c = 0; c < d; ++c) {
        if (kept[static_cast<size_t>(c)] || gone[static_cast<size_t>(c)]) continue;
        const double v = std::abs(Aeq(r, c)) / rs;
        if (v > 1e-10 && v > best) {
          best = v;
          best_row = r;
          best_col = c;
        }
      }
      if (best_row >= 0) break;
    }
    if (best_row < 0) break;
    const Eigen::RowVectorXd a = Aeq.row(best_row) / Aeq(best_row, best_col);
    const double b = beq(best_row) / Aeq(best_row, best_col);
    for (Index r = 0; r < Aeq.rows(); ++r) {
      if (r == best_row) continue;
      const double f = Aeq(r, best_col);
      if (f != 0.0) {
        Aeq.row(r) -= f * a;
        beq(r) -= f * b;
      }
      Aeq(r, best_col) = 0.0;
    }
    for (Index r = 0; r < Ain.rows(); ++r) {
      const double f = Ain(r, best_col);
      if (f != 0.0) {
        Ain.row(r) -= f * a;
        bin(r) -= f * b;
      }
      Ain(r, best_col) = 0.0;
    }
    drop_row(Aeq, beq, best_row);
    gone[static_cast<size_t>(best_col)] = true;
  }
  // Remaining equality rows live on kept columns (eliminated coefficients are round-off).
  for (Index c = 0; c < d; ++c)
    if (!kept[static_cast<size_t>(c)]) Aeq.col(c).setZero();
  for (Index r = Aeq.rows() - 1; r >= 0; --r) {
    if (Aeq.row(r).cwiseAbs().maxCoeff() <= 1e-12) {
      if (std::abs(beq(r)) > 1e-9 * (1.0 + std::abs(beq(r)))) return empty_polyhedron(keep.size());
      drop_row(Aeq, beq, r);
    }
  }

  HPolyhedron W(Aeq, beq, Ain, bin);
  W = normalize_rows(W, tol.dedup);
  W = remove_redundancy(W, tol.redundancy);

  while (true) {
    // greedy pick: minimal (#positive x #negative) among remaining eliminated columns
    Index col = -1;
    long best_cost = -1;
    for (Index c = 0; c < d; ++c) {
      if (kept[static_cast<size_t>(c)] || gone[static_cast<size_t>(c)]) continue;
      long pos = 0, neg = 0;
      for (Index r = 0; r < W.num_in(); ++r) {
        if (W.Ain(r, c) > 1e-12) ++pos;
        else if (W.Ain(r, c) < -1e-12) ++neg;
      }
      const long cost = pos * neg;
      if (col < 0 || cost < best_cost) {
        col = c;
        best_cost = cost;
      }
    }
    if (col < 0) break;

    std::vector<Index> pos, neg, zero;
    for (Index r = 0; r < W.num_in(); ++r) {
      const double a = W.Ain(r, col);
      if (a > 1e-12) pos.push_back(r);
      else if (a < -1e-12) neg.push_back(r);
      else zero.push_back(r);
    }
    const Index m = static_cast<Index>(zero.size() + pos.size() * neg.size());
    HPolyhedron N(d);
    N.Aeq = W.Aeq;
    N.beq = W.beq;
    N.Ain.resize(m, d);
    N.bin.resize(m);
    Index k = 0;
    for (Index r : zero) {
      N.Ain.row(k) = W.Ain.row(r);
      N.bin(k) = W.bin(r);
      ++k;
    }
    for (Index p : pos) {
      const double ap = W.Ain(p, col);
      for (Index q : neg) {
        const double aq = -W.Ain(q, col);
        N.Ain.row(k) = W.Ain.row(p) / ap + W.Ain.row(q) / aq;
        N.bin(k) = W.bin(p) / ap + W.bin(q) / aq;
        ++k;
      }
    }
    N.Ain.col(col).setZero();
    gone[static_cast<size_t>(col)] = true;
    W = normalize_rows(N, tol.dedup);
    W = remove_redundancy(W, tol.redundancy);
    log::debug("fm: eliminated column {}, {} rows remain", col, W.num_in());
  }

  return select_columns(W, keep_cols);
}

bool membership_oracle_project(const HPolyhedron& P, const VariableIndexSet& keep, const Vector& z, double tol) {
  P.validate();
  if (z.size() != keep.size()) throw DimensionMismatch("point size differs from keep set size");
  if (keep.max_index() > P.dim) throw DimensionMismatch("keep set exceeds dimension");
  Positions zc, yc;
  for (Index c = 0; c < P.dim; ++c) (keep.contains(c + 1) ? zc : yc).push_back(c);
  const Vector eq_rhs = P.beq - gather_columns(P.Aeq, zc) * z;
  const Vector in_rhs = P.bin - gather_columns(P.Ain, zc) * z;
  if (yc.empty()) {
    return (eq_rhs.size() == 0 || eq_rhs.cwiseAbs().maxCoeff() <= tol) &&
           (in_rhs.size() == 0 || in_rhs.minCoeff() >= -tol);
  }
  const Matrix Ey = gather_columns(P.Aeq, yc);
  const Matrix Iy = gather_columns(P.Ain, yc);
  HPolyhedron Q(static_cast<Index>(yc.size()));
  Q.Ain.resize(Iy.rows() + 2 * Ey.rows(), Q.dim);
  Q.Ain << Iy, Ey, -Ey;
  Q.bin.resize(Q.Ain.rows());
  Q.bin << in_rhs.array() + tol, eq_rhs.array() + tol, -eq_rhs.array() + tol;
  return solve_lp({Vector::Zero(Q.dim), Q}).status == SolveStatus::Optimal;
}

ChebyshevBall chebyshev_center(const HPolyhedron& P) {
  P.validate();
  if (P.has_equalities()) throw InvalidArgument("chebyshev_center expects an inequality-only polyhedron");
  const Index d = P.dim;
  HPolyhedron L(d + 1);
  L.Ain = Matrix::Zero(P.num_in() + 1, d + 1);
  L.bin = Vector::Zero(P.num_in() + 1);
  Index k = 0;
  for (Index i = 0; i < P.num_in(); ++i) {
    const double nrm = P.Ain.row(i).norm();
    if (nrm <= 1e-12) {
      if (P.bin(i) < -1e-9) throw EmptyPolyhedron("zero row with negative right-hand side");
      continue;
    }
    L.Ain.row(k).head(d) = P.Ain.row(i) / nrm;
    L.Ain(k, d) = 1.0;
    L.bin(k) = P.bin(i) / nrm;
    ++k;
  }
  L.Ain(k, d) = -1.0;
  L.bin(k) = 0.0;
  ++k;
  L.Ain.conservativeResize(k, d + 1);
  L.bin.conservativeResize(k);
  Vector c = Vector::Zero(d + 1);
  c(d) = -1.0;
  const Solution s = solve_lp({c, L});
  if (s.status == SolveStatus::Infeasible) throw EmptyPolyhedron("no point satisfies all rows");
  if (s.status == SolveStatus::Unbounded) throw UnboundedRadius("inscribed balls grow without bound");
  if (s.status != SolveStatus::Optimal) throw NumericalFailure("Chebyshev LP did not converge");
  return {s.x.head(d), std::max(0.0, s.x(d))};
}

BoundingBox bounding_box(const HPolyhedron& P) {
  const Index d = P.dim;
  BoundingBox bb{Vector(d), Vector(d)};
  for (Index k = 0; k < d; ++k) {
    for (int sgn : {1, -1}) {
      Vector c = Vector::Zero(d);
      c(k) = sgn;
      const Solution s = solve_lp({c, P});
      if (s.status == SolveStatus::Infeasible) throw EmptyPolyhedron("bounding box of an empty set");
      if (s.status == SolveStatus::Unbounded)
        throw UnboundedSet(fmt::format("coordinate {} is unbounded", k + 1));
      if (s.status != SolveStatus::Optimal) throw NumericalFailure("bounding-box LP did not converge");
      (sgn > 0 ? bb.lower(k) : bb.upper(k)) = s.x(k);
    }
  }
  return bb;
}

std::vector<Vector> polygon_vertices(const HPolyhedron& P, double tol) {
  if (P.dim != 2) throw DimensionMismatch("polygon export needs a 2-D polyhedron");
  const HPolyhedron Q = P.equalities_as_inequalities();
  std::vector<Vector> pts;
  for (Index i = 0; i < Q.num_in(); ++i) {
    for (Index j = i + 1; j < Q.num_in(); ++j) {
      Eigen::Matrix2d M;
      M.row(0) = Q.Ain.row(i);
      M.row(1) = Q.Ain.row(j);
      if (std::abs(M.determinant()) <= 1e-12 * M.cwiseAbs().maxCoeff()) continue;
      const Vector v = M.partialPivLu().solve(Eigen::Vector2d(Q.bin(i), Q.bin(j)));
      if (Q.max_violation(v) > tol) continue;
      bool dup = false;
      for (const auto& p : pts) dup = dup || (p - v).cwiseAbs().maxCoeff() <= 1e3 * tol;
      if (!dup) pts.push_back(v);
    }
  }
  if (pts.empty()) return pts;
  Vector c = Vector::Zero(2);
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  std::sort(pts.begin(), pts.end(), [&](const Vector& a, const Vector& b) {
    return std::atan2(a(1) - c(1), a(0) - c(0)) < std::atan2(b(1) - c(1), b(0) - c(0));
  });
  return pts;
}

}  // namespace treedp
