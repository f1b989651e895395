#include "treedp/errors.hpp"
#include "treedp/solvers.hpp"

#include <fmt/format.h>

namespace treedp {

Solution newton_solve(const NonlinearSystem& sys, Index max_iter, double tol) {
  if (!sys.residual || !sys.jacobian) throw InvalidArgument("nonlinear system needs residual and Jacobian");
  Vector x = sys.initial_guess;
  Vector F = sys.residual(x);
  if (F.size() != x.size())
    throw DimensionMismatch(fmt::format("residual has size {} for {} unknowns", F.size(), x.size()));
  double norm = inf_norm(F);
  Solution sol;
  Index it = 0;
  for (; it < max_iter && norm > tol; ++it) {
    const Matrix J = sys.jacobian(x);
    if (J.rows() != F.size() || J.cols() != x.size()) throw DimensionMismatch("Jacobian has wrong shape");
    Eigen::FullPivLU<Matrix> lu(J);
    if (!J.allFinite() || lu.rank() < x.size()) throw SingularJacobian(fmt::format("rank {} of {}", lu.rank(), x.size()));
    const Vector dx = lu.solve(-F);
    double a = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls, a *= 0.5) {
      const Vector xn = x + a * dx;
      const Vector Fn = sys.residual(xn);
      const double nn = inf_norm(Fn);
      if (Fn.allFinite() && nn < norm) {
        x = xn;
        F = Fn;
        norm = nn;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  sol.x = x;
  sol.iterations = it;
  sol.objective = norm;
  sol.kkt_residual = norm;
  sol.status = norm <= tol ? SolveStatus::Optimal : SolveStatus::MaxIter;
  return sol;
}

}  // namespace treedp
