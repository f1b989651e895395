#pragma once

#include "treedp/common.hpp"
#include "treedp/hpolyhedron.hpp"

#include <functional>
#include <string_view>

namespace treedp {

enum class SolveStatus { Optimal, Infeasible, Unbounded, MaxIter };

std::string_view to_string(SolveStatus s);

struct Solution {
  SolveStatus status = SolveStatus::MaxIter;
  Vector x;
  double objective = 0.0;
  double kkt_residual = 0.0;
  Index iterations = 0;
  // Multipliers with the sign convention grad f + Aeq' mu + Ain' lambda = 0, lambda >= 0.
  Vector mu;
  Vector lambda;

  bool optimal() const { return status == SolveStatus::Optimal; }
};

struct LinearProgram {
  Vector c;
  HPolyhedron constraints;
};

// min 1/2 x'Qx + q'x over constraints
struct QuadraticProgram {
  Matrix Q;
  Vector q;
  HPolyhedron constraints;
};

// 1/2 x'Px + r'x + k <= 0 with P symmetric PSD
struct QuadraticConstraint {
  Matrix P;
  Vector r;
  double k = 0.0;

  double value(const Vector& x) const { return 0.5 * x.dot(P * x) + r.dot(x) + k; }
  Vector gradient(const Vector& x) const { return P * x + r; }
};

struct NonlinearSystem {
  std::function<Vector(const Vector&)> residual;
  std::function<Matrix(const Vector&)> jacobian;
  Vector initial_guess;
};

struct LpOptions {
  double pivot_tol = 1e-9;
  double feas_tol = 1e-9;
  Index max_iter = 0;  // 0 picks a size-dependent limit
  Index degenerate_switch = 50;
};

struct QpOptions {
  double tol = 1e-9;
  Index max_iter = 0;
  const Vector* warm_start = nullptr;
};

struct BarrierOptions {
  double gap_tol = 1e-10;
  Index max_newton = 100;
};

Solution solve_lp(const LinearProgram& lp, const LpOptions& opt = {});
Solution solve_qp(const QuadraticProgram& qp, const QpOptions& opt = {});

// Convex QP with additional convex quadratic inequality constraints; linear
// constraints are handled exactly by an active-set inner solver and the
// quadratic ones by a logarithmic barrier.
Solution solve_qcqp(const QuadraticProgram& qp, const std::vector<QuadraticConstraint>& quad,
                    const BarrierOptions& opt = {});

Solution newton_solve(const NonlinearSystem& sys, Index max_iter = 50, double tol = 1e-10);

// Rank-revealing helpers shared by the solvers and the polyhedra module.
Matrix nullspace_basis(const Matrix& A, double tol = 1e-10);

}  // namespace treedp
