#include "detail_log.hpp"
#include "treedp/errors.hpp"
#include "treedp/solvers.hpp"

#include <fmt/format.h>

#include <cmath>
#include <functional>
#include <limits>

namespace treedp {

namespace {

struct BarrierProblem {
  const Matrix& Q;
  const Vector& q;
  const HPolyhedron& lin;
  const std::vector<QuadraticConstraint>& quad;
};

double max_quad(const std::vector<QuadraticConstraint>& quad, const Vector& x) {
  double v = -std::numeric_limits<double>::infinity();
  for (const auto& c : quad) v = std::max(v, c.value(x));
  return v;
}

double merit(const BarrierProblem& bp, double t, const Vector& x) {
  double phi = t * (0.5 * x.dot(bp.Q * x) + bp.q.dot(x));
  for (const auto& c : bp.quad) {
    const double v = c.value(x);
    if (!(v < 0.0)) return std::numeric_limits<double>::infinity();
    phi -= std::log(-v);
  }
  return phi;
}

// Returns the final barrier parameter; x must be strictly feasible for quad.
double barrier_path(const BarrierProblem& bp, Vector& x, const BarrierOptions& opt,
                    const std::function<bool(const Vector&)>& stop, Index& newton_steps) {
  const Index n = x.size();
  const double m = static_cast<double>(bp.quad.size());
  double t = 1.0;
  while (true) {
    for (Index it = 0; it < opt.max_newton; ++it) {
      Matrix H = t * bp.Q;
      Vector g = t * (bp.Q * x + bp.q);
      for (const auto& c : bp.quad) {
        const double v = c.value(x);
        const Vector gc = c.gradient(x);
        H += gc * gc.transpose() / (v * v) + c.P / (-v);
        g += gc / (-v);
      }
      HPolyhedron step(n);
      step.Aeq = bp.lin.Aeq;
      step.beq = bp.lin.beq - bp.lin.Aeq * x;
      step.Ain = bp.lin.Ain;
      step.bin = (bp.lin.bin - bp.lin.Ain * x).cwiseMax(0.0);
      const Vector zero = Vector::Zero(n);
      QpOptions qo;
      qo.warm_start = &zero;
      qo.max_iter = 50 + 4 * (n + step.num_eq() + step.num_in());
      const Matrix Hs = 0.5 * (H + H.transpose());
      Solution s = solve_qp({Hs, g, step}, qo);
      if (s.status != SolveStatus::Optimal) {
        const double reg = 1e-8 * std::max(1.0, Hs.diagonal().cwiseAbs().maxCoeff());
        s = solve_qp({Hs + reg * Matrix::Identity(n, n), g, step}, qo);
      }
      if (s.status != SolveStatus::Optimal) {
        // the iterate stays strictly feasible; stop centering at this t
        log::debug("barrier: Newton step QP {} at t = {:.1e}", to_string(s.status), t);
        break;
      }
      const Vector& d = s.x;
      const double dec = -g.dot(d);
      ++newton_steps;
      if (dec <= 1e-12 * std::max(1.0, std::abs(merit(bp, t, x))) || d.norm() <= 1e-14 * (1.0 + x.norm())) break;
      const double phi0 = merit(bp, t, x);
      double a = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls, a *= 0.5) {
        const Vector xn = x + a * d;
        if (!(max_quad(bp.quad, xn) < 0.0)) continue;
        if (merit(bp, t, xn) <= phi0 - 0.25 * a * dec) {
          x = xn;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
      if (stop && stop(x)) return t;
    }
    if (stop && stop(x)) return t;
    if (m / t < opt.gap_tol) return t;
    t *= 10.0;
  }
}

}  // namespace

Solution solve_qcqp(const QuadraticProgram& qp, const std::vector<QuadraticConstraint>& quad,
                    const BarrierOptions& opt) {
  if (quad.empty()) return solve_qp(qp);
  const HPolyhedron& P = qp.constraints;
  P.validate();
  const Index n = P.dim;
  for (const auto& c : quad)
    if (c.P.rows() != n || c.P.cols() != n || c.r.size() != n)
      throw DimensionMismatch("quadratic constraint has wrong size");

  Solution sol;
  const Solution start = solve_lp({Vector::Zero(n), P});
  if (start.status != SolveStatus::Optimal) {
    sol.status = start.status == SolveStatus::Infeasible ? SolveStatus::Infeasible : SolveStatus::MaxIter;
    sol.x = start.x;
    return sol;
  }
  Vector x = start.x;
  Index steps = 0;

  if (!(max_quad(quad, x) < -1e-9)) {
    // Phase I over (x, s): min s s.t. c_j(x) <= s, s >= -1.
    HPolyhedron lin(n + 1);
    lin.Aeq = Matrix::Zero(P.num_eq(), n + 1);
    lin.Aeq.leftCols(n) = P.Aeq;
    lin.beq = P.beq;
    lin.Ain = Matrix::Zero(P.num_in() + 1, n + 1);
    lin.Ain.topLeftCorner(P.num_in(), n) = P.Ain;
    lin.Ain(P.num_in(), n) = -1.0;
    lin.bin.resize(P.num_in() + 1);
    lin.bin << P.bin, 1.0;
    std::vector<QuadraticConstraint> q1;
    for (const auto& c : quad) {
      QuadraticConstraint e;
      e.P = Matrix::Zero(n + 1, n + 1);
      e.P.topLeftCorner(n, n) = c.P;
      e.r.resize(n + 1);
      e.r << c.r, -1.0;
      e.k = c.k;
      q1.push_back(e);
    }
    Vector xs(n + 1);
    xs << x, max_quad(quad, x) + 1.0;
    const Matrix Q1 = Matrix::Zero(n + 1, n + 1);
    Vector c1 = Vector::Zero(n + 1);
    c1(n) = 1.0;
    BarrierProblem bp1{Q1, c1, lin, q1};
    barrier_path(bp1, xs, opt, [&](const Vector& v) { return max_quad(quad, v.head(n)) < -1e-6; },
                 steps);
    x = xs.head(n);
    if (!(max_quad(quad, x) < 0.0)) {
      sol.status = SolveStatus::Infeasible;
      sol.x = x;
      sol.iterations = steps;
      sol.objective = std::numeric_limits<double>::infinity();
      return sol;
    }
  }

  BarrierProblem bp{qp.Q, qp.q, P, quad};
  const double t = barrier_path(bp, x, opt, {}, steps);
  sol.status = SolveStatus::Optimal;
  sol.x = x;
  sol.iterations = steps;
  sol.objective = 0.5 * x.dot(qp.Q * x) + qp.q.dot(x);
  sol.kkt_residual = static_cast<double>(quad.size()) / t + P.max_violation(x);
  sol.mu = Vector::Zero(P.num_eq());
  sol.lambda = Vector::Zero(P.num_in());
  log::debug("qcqp: {} Newton steps, gap bound {:.3e}", steps, quad.size() / t);
  return sol;
}

}  // namespace treedp
