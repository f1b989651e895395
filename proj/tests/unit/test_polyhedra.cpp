#include "random_instances.hpp"

#include "treedp/errors.hpp"
#include "treedp/polyhedra.hpp"
#include "treedp/solvers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace treedp;

namespace {

HPolyhedron unit_square() { return HPolyhedron::box(Vector::Zero(2), Vector::Ones(2)); }

HPolyhedron simplex2() {
  Matrix A(3, 2);
  A << -1, 0, 0, -1, 1, 1;
  Vector b(3);
  b << 0, 0, 1;
  return HPolyhedron(A, b);
}

// Minimum of c'x over all basic feasible points of a bounded polyhedron.
double vertex_enumeration_min(const HPolyhedron& P, const Vector& c) {
  const Index n = P.dim;
  const Index m = P.num_in();
  double best = std::numeric_limits<double>::infinity();
  std::vector<Index> pick(static_cast<size_t>(n));
  std::function<void(Index, Index)> rec = [&](Index start, Index depth) {
    if (depth == n) {
      Matrix A(n, n);
      Vector b(n);
      for (Index k = 0; k < n; ++k) {
        A.row(k) = P.Ain.row(pick[static_cast<size_t>(k)]);
        b(k) = P.bin(pick[static_cast<size_t>(k)]);
      }
      Eigen::FullPivLU<Matrix> lu(A);
      if (lu.rank() < n) return;
      const Vector x = lu.solve(b);
      if (P.contains(x, 1e-9)) best = std::min(best, c.dot(x));
      return;
    }
    for (Index r = start; r < m; ++r) {
      pick[static_cast<size_t>(depth)] = r;
      rec(r + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace

TEST(HPolyhedron, ContainsAndViolation) {
  const auto P = unit_square();
  EXPECT_TRUE(P.contains(Vector::Constant(2, 0.5)));
  Vector x(2);
  x << 1.1, 0.5;
  EXPECT_FALSE(P.contains(x));
  EXPECT_NEAR(P.max_violation(x), 0.1, 1e-12);
}

TEST(HPolyhedron, ValidateRejectsShapeMismatch) {
  EXPECT_THROW(HPolyhedron(Matrix::Ones(2, 3), Vector::Ones(3)), DimensionMismatch);
}

TEST(EliminateEqualities, LineSegment) {
  Matrix Aeq(1, 2);
  Aeq << 1, 1;
  const HPolyhedron P(Aeq, Vector::Ones(1), unit_square().Ain.topRows(2), Vector::Ones(2));
  const auto r = eliminate_equalities(P);
  EXPECT_EQ(r.reduced.dim, 1);
  for (double t : {-0.3, 0.0, 0.7}) {
    const Vector x = r.map(Vector::Constant(1, t));
    EXPECT_NEAR(x(0) + x(1), 1.0, 1e-12);
  }
}

TEST(EliminateEqualities, NoEqualitiesIsIdentity) {
  const auto r = eliminate_equalities(unit_square());
  EXPECT_EQ(r.reduced.dim, 2);
  EXPECT_TRUE(r.map.T.isApprox(Matrix::Identity(2, 2)));
  EXPECT_EQ(r.reduced.num_in(), 4);
}

TEST(EliminateEqualities, Contradictory) {
  Matrix Aeq(2, 1);
  Aeq << 1, 1;
  Vector beq(2);
  beq << 0, 1;
  EXPECT_THROW(eliminate_equalities(HPolyhedron(Aeq, beq, Matrix(0, 1), Vector(0))), InconsistentEqualities);
}

TEST(FourierMotzkin, SquareShadow) {
  const auto Q = fourier_motzkin_project(unit_square(), {1});
  const auto box = bounding_box(Q);
  EXPECT_NEAR(box.lower(0), 0.0, 1e-12);
  EXPECT_NEAR(box.upper(0), 1.0, 1e-12);
}

TEST(FourierMotzkin, SimplexShadow) {
  const auto Q = fourier_motzkin_project(simplex2(), {1});
  const auto box = bounding_box(Q);
  EXPECT_NEAR(box.lower(0), 0.0, 1e-12);
  EXPECT_NEAR(box.upper(0), 1.0, 1e-12);
  EXPECT_EQ(Q.num_in(), 2);
}

TEST(FourierMotzkin, AgreesWithMembershipOracle) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 5; ++k) {
    const auto P = testkit::random_polytope(rng, 4, 6);
    const VariableIndexSet keep{1, 3};
    const auto Q = fourier_motzkin_project(P, keep);
    for (int s = 0; s < 300; ++s) {
      const Vector z = testkit::uniform_vector(rng, 2, -3.5, 3.5);
      EXPECT_EQ(Q.contains(z, 1e-8), membership_oracle_project(P, keep, z, 1e-8));
    }
  }
}

TEST(FourierMotzkin, EqualityRowsAreSubstituted) {
  Matrix Aeq(1, 2);
  Aeq << 1, -1;
  const HPolyhedron P(Aeq, Vector::Zero(1), unit_square().Ain, unit_square().bin);
  const auto box = bounding_box(fourier_motzkin_project(P, {2}));
  EXPECT_NEAR(box.lower(0), 0.0, 1e-12);
  EXPECT_NEAR(box.upper(0), 1.0, 1e-12);
}

TEST(Redundancy, DominatedRow) {
  Matrix A(2, 1);
  A << 1, 1;
  Vector b(2);
  b << 1, 2;
  const auto R = remove_redundancy(HPolyhedron(A, b));
  ASSERT_EQ(R.num_in(), 1);
  EXPECT_NEAR(R.bin(0) / R.Ain(0, 0), 1.0, 1e-12);
}

TEST(Redundancy, IrredundantTriangle) { EXPECT_EQ(remove_redundancy(simplex2()).num_in(), 3); }

TEST(Redundancy, PreservesSetOnRandomProjection) {
  std::mt19937_64 rng(5);
  const auto P = testkit::random_polytope(rng, 6, 8);
  const VariableIndexSet keep{1, 2, 3};
  const auto Q = fourier_motzkin_project(P, keep);
  const auto R = remove_redundancy(Q);
  EXPECT_LE(R.num_in(), Q.num_in());
  for (int s = 0; s < 1000; ++s) {
    const Vector z = testkit::uniform_vector(rng, 3, -3.5, 3.5);
    EXPECT_EQ(R.contains(z, 1e-8), membership_oracle_project(P, keep, z, 1e-8));
  }
}

TEST(MembershipOracle, Square) {
  EXPECT_TRUE(membership_oracle_project(unit_square(), {1}, Vector::Constant(1, 0.5)));
  EXPECT_FALSE(membership_oracle_project(unit_square(), {1}, Vector::Constant(1, 1.5)));
}

TEST(Chebyshev, Square) {
  const auto b = chebyshev_center(unit_square());
  EXPECT_NEAR(b.radius, 0.5, 1e-9);
  EXPECT_NEAR(b.center(0), 0.5, 1e-9);
  EXPECT_NEAR(b.center(1), 0.5, 1e-9);
}

TEST(Chebyshev, TriangleIncircle) {
  const double r = 2.0 * 0.5 / (2.0 + std::sqrt(2.0));
  const auto b = chebyshev_center(simplex2());
  EXPECT_NEAR(b.radius, r, 1e-9);
  EXPECT_NEAR(b.center(0), r, 1e-9);
  EXPECT_NEAR(b.center(1), r, 1e-9);
}

TEST(Chebyshev, EmptySet) {
  Matrix A(2, 1);
  A << 1, -1;
  Vector b(2);
  b << 0, -1;
  EXPECT_THROW(chebyshev_center(HPolyhedron(A, b)), EmptyPolyhedron);
  EXPECT_TRUE(is_empty(HPolyhedron(A, b)));
}

TEST(ConvexHull, SquareCorners) {
  std::vector<Vector> pts;
  for (double x : {0.0, 1.0})
    for (double y : {0.0, 1.0}) pts.push_back((Vector(2) << x, y).finished());
  const auto H = convex_hull(pts);
  EXPECT_EQ(H.num_in(), 4);
  EXPECT_TRUE(H.contains(Vector::Constant(2, 0.5)));
  EXPECT_FALSE(H.contains(Vector::Constant(2, 1.5)));
}

TEST(ConvexHull, CollinearIsDegenerate) {
  std::vector<Vector> pts;
  for (double t : {0.0, 1.0, 2.0}) pts.push_back((Vector(2) << t, t).finished());
  EXPECT_THROW(convex_hull(pts), DegenerateHull);
}

TEST(Lp, BoundedMinimum) {
  LinearProgram lp{Vector::Ones(1), HPolyhedron::box(Vector::Zero(1), Vector::Ones(1))};
  const auto s = solve_lp(lp);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.x(0), 0.0, 1e-12);
  EXPECT_NEAR(s.objective, 0.0, 1e-12);
}

TEST(Lp, Unbounded) {
  LinearProgram lp{-Vector::Ones(1), HPolyhedron(-Matrix::Ones(1, 1), Vector::Zero(1))};
  EXPECT_EQ(solve_lp(lp).status, SolveStatus::Unbounded);
}

TEST(Lp, MatchesVertexEnumeration) {
  std::mt19937_64 rng(9);
  for (int k = 0; k < 30; ++k) {
    const Index n = 1 + k % 3;
    const auto P = testkit::random_polytope(rng, n, 4);
    const Vector c = testkit::uniform_vector(rng, n, -1.0, 1.0);
    const auto s = solve_lp(LinearProgram{c, P});
    ASSERT_TRUE(s.optimal());
    EXPECT_NEAR(s.objective, vertex_enumeration_min(P, c), 1e-9);
  }
}

TEST(Qp, ActiveBound) {
  QuadraticProgram qp{2.0 * Matrix::Identity(1, 1), Vector::Zero(1), HPolyhedron(-Matrix::Ones(1, 1), -Vector::Ones(1))};
  const auto s = solve_qp(qp);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.x(0), 1.0, 1e-12);
}

TEST(Qp, UnconstrainedLinearSolve) {
  std::mt19937_64 rng(1);
  const Matrix Q = testkit::random_spd(rng, 4);
  const Vector q = testkit::uniform_vector(rng, 4, -1.0, 1.0);
  const auto s = solve_qp({Q, q, HPolyhedron(4)});
  ASSERT_TRUE(s.optimal());
  EXPECT_LE((s.x + Q.ldlt().solve(q)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Qp, MultiplierSignConvention) {
  QuadraticProgram qp{Matrix::Identity(2, 2), Vector::Zero(2), HPolyhedron(-Matrix::Identity(2, 2), -Vector::Ones(2))};
  Matrix Aeq(1, 2);
  Aeq << 1, -1;
  qp.constraints = HPolyhedron(Aeq, Vector::Zero(1), -Matrix::Identity(2, 2), -Vector::Ones(2));
  const auto s = solve_qp(qp);
  ASSERT_TRUE(s.optimal());
  const Vector stat = qp.Q * s.x + qp.q + qp.constraints.Aeq.transpose() * s.mu + qp.constraints.Ain.transpose() * s.lambda;
  EXPECT_LE(stat.cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_GE(s.lambda.minCoeff(), -1e-12);
}

TEST(Qcqp, DiskConstraint) {
  QuadraticProgram qp{Matrix::Zero(2, 2), (Vector(2) << 1, 1).finished(), HPolyhedron(2)};
  QuadraticConstraint disk{2.0 * Matrix::Identity(2, 2), Vector::Zero(2), -1.0};
  const auto s = solve_qcqp(qp, {disk});
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.x(0), -std::sqrt(0.5), 1e-6);
  EXPECT_NEAR(s.x(1), -std::sqrt(0.5), 1e-6);
}

TEST(Newton, SquareRoot) {
  NonlinearSystem sys{[](const Vector& x) { return Vector::Constant(1, x(0) * x(0) - 4.0); },
                      [](const Vector& x) { return Matrix::Constant(1, 1, 2.0 * x(0)); }, Vector::Constant(1, 3.0)};
  const auto s = newton_solve(sys);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.x(0), 2.0, 1e-10);
}

TEST(Newton, LinearSystemOneStep) {
  Matrix A(2, 2);
  A << 3, 1, 1, 2;
  const Vector b = (Vector(2) << 1, -1).finished();
  NonlinearSystem sys{[&](const Vector& x) { return Vector(A * x - b); }, [&](const Vector&) { return A; }, Vector::Zero(2)};
  const auto s = newton_solve(sys);
  ASSERT_TRUE(s.optimal());
  EXPECT_LE(s.iterations, 1);
  EXPECT_LE((A * s.x - b).norm(), 1e-12);
}
