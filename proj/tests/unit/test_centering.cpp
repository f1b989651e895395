#include "random_instances.hpp"

#include "treedp/centering.hpp"
#include "treedp/errors.hpp"
#include "treedp/polyhedra.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace treedp;

TEST(InscribedEllipsoid, SquareGivesUnitDisk) {
  const auto fit = max_volume_inscribed_ellipsoid(HPolyhedron::box(-Vector::Ones(2), Vector::Ones(2)));
  EXPECT_LE((fit.ellipsoid.A - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE(fit.ellipsoid.c.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(InscribedEllipsoid, RandomPolytopesAreCertified) {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 5; ++k) {
    const auto P = testkit::random_polytope(rng, 2 + k % 2, 5);
    const auto fit = max_volume_inscribed_ellipsoid(P);
    EXPECT_LE(ellipsoid_row_certificate(fit.ellipsoid, P), 1e-7);
    EXPECT_LE(fit.max_row_certificate, 1e-7);
    for (const auto& x : ellipsoid_boundary(fit.ellipsoid, 2000)) EXPECT_TRUE(P.contains(x, 1e-7));
  }
}

TEST(InscribedEllipsoid, TriangleIsSteinerInellipse) {
  Matrix A(3, 2);
  A << -1, 0, 0, -1, 1, 1;
  Vector b(3);
  b << 0, 0, 1;
  const auto fit = max_volume_inscribed_ellipsoid(HPolyhedron(A, b));
  EXPECT_NEAR(fit.ellipsoid.c(0), 1.0 / 3.0, 1e-6);
  EXPECT_NEAR(fit.ellipsoid.c(1), 1.0 / 3.0, 1e-6);
  const double area = M_PI * std::exp(fit.ellipsoid.volume_log());
  EXPECT_NEAR(area, 0.5 * M_PI / (3.0 * std::sqrt(3.0)), 1e-6);
}

TEST(InscribedEllipsoid, DegenerateSegment) {
  Matrix Aeq(1, 2);
  Aeq << 1, -1;
  const HPolyhedron P(Aeq, Vector::Zero(1), HPolyhedron::box(-Vector::Ones(2), Vector::Ones(2)).Ain, Vector::Ones(4));
  EXPECT_THROW(max_volume_inscribed_ellipsoid(P), InvalidArgument);
  const auto r = eliminate_equalities(P);
  const auto fit = max_volume_inscribed_ellipsoid(r.reduced);
  EXPECT_NEAR(fit.ellipsoid.A.norm(), 1.0, 1e-6);
  for (const double s : {-1.0, 1.0}) {
    const Vector y = fit.ellipsoid.c + s * fit.ellipsoid.A.col(0);
    EXPECT_TRUE(P.contains(r.map(y), 1e-7));
  }
}

TEST(InscribedBox, SquareIsItself) {
  const auto fit = inscribed_box(HPolyhedron::box(Vector::Zero(2), Vector::Ones(2)));
  EXPECT_NEAR(fit.box.volume(), 1.0, 1e-6);
}

TEST(InscribedBox, TriangleHalfSquare) {
  Matrix A(3, 2);
  A << -1, 0, 0, -1, 1, 1;
  Vector b(3);
  b << 0, 0, 1;
  const auto fit = inscribed_box(HPolyhedron(A, b));
  EXPECT_NEAR(fit.box.volume(), 0.25, 1e-6);
  EXPECT_NEAR(fit.box.upper(0) + fit.box.upper(1), 1.0, 1e-6);
  EXPECT_LE(fit.max_row_certificate, 1e-7);
}

TEST(InscribedBox, Interval) {
  const auto fit = inscribed_box(HPolyhedron::box(Vector::Constant(1, -2.0), Vector::Constant(1, 3.0)));
  EXPECT_NEAR(fit.box.lower(0), -2.0, 1e-6);
  EXPECT_NEAR(fit.box.upper(0), 3.0, 1e-6);
}

TEST(LinearMap, IdentityLeavesEllipsoid) {
  Ellipsoid E{(Matrix(2, 2) << 2, 0.5, 0.5, 1).finished(), (Vector(2) << 1, -1).finished()};
  const auto m = linear_map_ellipsoid(E, Matrix::Identity(2, 2));
  EXPECT_LE((m.canonical.A - E.A).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE((m.canonical.c - E.c).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(LinearMap, BallShadowIsDisk) {
  Ellipsoid E{Matrix::Identity(3, 3), Vector::Zero(3)};
  Matrix M = Matrix::Zero(2, 3);
  M(0, 0) = M(1, 1) = 1.0;
  const auto m = linear_map_ellipsoid(E, M);
  EXPECT_LE((m.canonical.A - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(LinearMap, ImagePointsInside) {
  std::mt19937_64 rng(23);
  Ellipsoid E{testkit::random_spd(rng, 3), testkit::uniform_vector(rng, 3, -1.0, 1.0)};
  Matrix M = testkit::random_spd(rng, 3) + Matrix::Identity(3, 3);
  const auto m = linear_map_ellipsoid(E, M);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int s = 0; s < 1000; ++s) {
    Vector u(3);
    for (Index k = 0; k < 3; ++k) u(k) = N(rng);
    u /= std::max(1.0, u.norm());
    EXPECT_TRUE(ellipsoid_contains(m.canonical, M * (E.A * u + E.c), 1e-9));
  }
}

TEST(EllipsoidContains, UnitDisk) {
  Ellipsoid E{Matrix::Identity(2, 2), Vector::Zero(2)};
  EXPECT_TRUE(ellipsoid_contains(E, Vector::Zero(2)));
  EXPECT_FALSE(ellipsoid_contains(E, (Vector(2) << 2, 0).finished()));
  EXPECT_TRUE(ellipsoid_contains(E, (Vector(2) << 1, 0).finished(), 1e-9));
}

TEST(InnerPolytope, InsideEllipsoid) {
  Ellipsoid E{(Matrix(2, 2) << 2, 0.5, 0.5, 1).finished(), (Vector(2) << 1, -1).finished()};
  const auto P = ellipsoid_inner_polytope(E);
  const auto verts = polygon_vertices(P);
  ASSERT_GE(verts.size(), 3u);
  for (const auto& v : verts) EXPECT_TRUE(ellipsoid_contains(E, v, 1e-9));
}
