#include "treedp/errors.hpp"
#include "treedp/ocp.hpp"
#include "treedp/polyhedra.hpp"

#include <gtest/gtest.h>

using namespace treedp;

namespace {

// {(z, u, z') : z' = A z + B u, u in U, z' in target} over (z, u, z').
HPolyhedron stage_set(const LtiOcpSpec& s, const HPolyhedron& target) {
  const Index n = s.nz(), m = s.nu(), d = 2 * n + m;
  Matrix Aeq(n, d);
  Aeq << s.A, s.B, -Matrix::Identity(n, n);
  Matrix Ain(s.U.num_in() + target.num_in(), d);
  Ain.setZero();
  Ain.block(0, n, s.U.num_in(), m) = s.U.Ain;
  Ain.block(s.U.num_in(), n + m, target.num_in(), n) = target.Ain;
  Vector bin(Ain.rows());
  bin << s.U.bin, target.bin;
  return HPolyhedron(Aeq, Vector::Zero(n), Ain, bin);
}

LtiOcpSpec scalar(double a, double b, const Vector& Z, const Vector& U, const Vector& ZT, Index T) {
  LtiOcpSpec s;
  s.A = Matrix::Constant(1, 1, a);
  s.B = Matrix::Constant(1, 1, b);
  s.Qz = Matrix::Identity(1, 1);
  s.Ru = Matrix::Identity(1, 1);
  s.P = Matrix::Identity(1, 1);
  s.Z = HPolyhedron::box(Z.head(1), Z.tail(1));
  s.U = HPolyhedron::box(U.head(1), U.tail(1));
  s.ZT = HPolyhedron::box(ZT.head(1), ZT.tail(1));
  s.z0 = Vector::Constant(1, 0.5 * (ZT(0) + ZT(1)));
  s.T = T;
  return s;
}

Vector pair(double a, double b) { return (Vector(2) << a, b).finished(); }

}  // namespace

TEST(OcpTree, PaperLayout) {
  const auto [p, topo] = ocp_to_tree(LtiOcpSpec::reference_instance());
  EXPECT_EQ(p.subsystems.size(), 4u);
  EXPECT_EQ(topo.root, 0);
  for (int t = 1; t <= 3; ++t) {
    EXPECT_EQ(topo.coupling.at(t).size(), 2);
    EXPECT_EQ(topo.parent.at(t), t - 1);
  }
  EXPECT_EQ(p.n_x, 4 * 2 + 3);
}

TEST(OcpTree, SingleStep) {
  auto s = LtiOcpSpec::reference_instance();
  s.T = 1;
  const auto [p, topo] = ocp_to_tree(s);
  EXPECT_EQ(p.subsystems.size(), 2u);
  EXPECT_EQ(topo.depth(), 1);
}

TEST(OcpTree, ScalarChain) {
  const auto s = scalar(0.9, 1.0, pair(-5, 5), pair(-1, 1), pair(-1, 1), 4);
  const auto [p, topo] = ocp_to_tree(s);
  for (int t = 1; t <= 4; ++t) EXPECT_EQ(topo.coupling.at(t).size(), 1);
}

TEST(ReachableSets, ZeroStepsIsTerminalSet) {
  const auto s = LtiOcpSpec::reference_instance();
  const auto R = backward_reachable_sets(s, 0);
  ASSERT_EQ(R.size(), 1u);
  EXPECT_TRUE(R[0].contains(pair(0.19, -0.19)));
  EXPECT_FALSE(R[0].contains(pair(0.2, 0.0)));
}

TEST(ReachableSets, PaperSetsMatchMembershipOracle) {
  const auto s = LtiOcpSpec::reference_instance();
  const auto R = backward_reachable_sets(s, 3);
  for (size_t k = 1; k < R.size(); ++k) {
    const HPolyhedron target = k == 1 ? s.ZT : R[k - 1].intersect(s.Z);
    const auto lifted = stage_set(s, target);
    const auto box = bounding_box(R[k]);
    long mismatches = 0;
    for (int i = 0; i < 100; ++i)
      for (int j = 0; j < 100; ++j) {
        const Vector z = pair(box.lower(0) - 0.1 + (box.upper(0) - box.lower(0) + 0.2) * i / 99.0,
                              box.lower(1) - 0.1 + (box.upper(1) - box.lower(1) + 0.2) * j / 99.0);
        if (R[k].contains(z, 1e-8) != membership_oracle_project(lifted, {1, 2}, z, 1e-8)) ++mismatches;
      }
    EXPECT_EQ(mismatches, 0) << "stage " << k;
  }
}

TEST(ReachableSets, UnstableSystemEmpties) {
  const auto s = scalar(2.0, 1.0, pair(0.5, 10.0), pair(-0.01, 0.01), pair(1.0, 2.0), 3);
  double lo = 1.0, hi = 2.0;
  int empty_at = -1;
  for (int k = 1; k < 10; ++k) {
    if (k > 1) {
      lo = std::max(lo, 0.5);
      hi = std::min(hi, 10.0);
    }
    if (lo > hi) {
      empty_at = k;
      break;
    }
    const double nlo = (lo - 0.01) / 2.0, nhi = (hi + 0.01) / 2.0;
    lo = nlo;
    hi = nhi;
  }
  ASSERT_GT(empty_at, 0);
  try {
    backward_reachable_sets(s, 10);
    FAIL();
  } catch (const EmptyCouplingSet& e) {
    EXPECT_EQ(e.id(), empty_at);
  }
}

TEST(OcpDemo, ExactVariantFeasible) {
  const auto s = LtiOcpSpec::reference_instance();
  const auto r = run_ocp_demo(s, {});
  EXPECT_TRUE(r.audit.feasible);
  EXPECT_LE(r.fpadp.dynamics_residual, 1e-8);
  EXPECT_LE(r.fpadp.u.cwiseAbs().maxCoeff(), 1.0 + 1e-9);
  EXPECT_LE(r.fpadp.z.row(3).cwiseAbs().maxCoeff(), 0.19 + 1e-8);
  EXPECT_GE(r.fpadp.cost, r.monolithic.cost - 1e-6);
  EXPECT_EQ(r.stage_sets.size(), 3u);
}

TEST(OcpDemo, EllipsoidVariantFeasible) {
  const auto s = LtiOcpSpec::reference_instance();
  OcpDemoConfig cfg;
  cfg.variant = OcpVariant::EllipsoidAtStage;
  const auto r = run_ocp_demo(s, cfg);
  ASSERT_TRUE(r.ellipsoid.has_value());
  EXPECT_LE(r.ellipsoid_certificate, 1e-7);
  EXPECT_TRUE(r.audit.feasible);
  EXPECT_LE(r.terminal_violation, 1e-8);
  EXPECT_GE(r.fpadp.cost, r.monolithic.cost - 1e-6);
}

TEST(OcpDemo, EllipsoidAtLaterStageIsInsideExactSet) {
  const auto s = LtiOcpSpec::reference_instance();
  OcpDemoConfig cfg;
  cfg.variant = OcpVariant::EllipsoidAtStage;
  cfg.ellipsoid_stage = 2;
  const auto r = run_ocp_demo(s, cfg);
  const auto exact = backward_reachable_sets(s, 2)[2];
  ASSERT_TRUE(r.ellipsoid.has_value());
  EXPECT_TRUE(exact.contains(r.ellipsoid->c, 1e-9));
  EXPECT_TRUE(r.audit.feasible);
}

TEST(OcpDemo, WidenedTerminalQuadraticIsOptimal) {
  const auto s = LtiOcpSpec::reference_instance().widened(1e6);
  OcpDemoConfig cfg;
  cfg.value_fn = OcpValueFn::TerminalQuadratic;
  const auto r = run_ocp_demo(s, cfg);
  EXPECT_NEAR(r.fpadp.cost, r.monolithic.cost, 1e-5);
}

TEST(OcpDemo, RejectsBadStage) {
  OcpDemoConfig cfg;
  cfg.variant = OcpVariant::EllipsoidAtStage;
  cfg.ellipsoid_stage = 7;
  EXPECT_THROW(run_ocp_demo(LtiOcpSpec::reference_instance(), cfg), InvalidArgument);
}
