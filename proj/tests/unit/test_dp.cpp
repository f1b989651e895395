#include "random_instances.hpp"

#include "treedp/dp.hpp"
#include "treedp/errors.hpp"
#include "treedp/ocp.hpp"
#include "treedp/polyhedra.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace treedp;

namespace {

Subsystem box_subsystem(int id, std::vector<Index> idx, double lo, double hi) {
  const Index d = static_cast<Index>(idx.size());
  Subsystem s;
  s.id = id;
  s.indices = VariableIndexSet(std::move(idx));
  s.objective = QuadraticObjective::zero(d);
  s.constraints = HPolyhedron::box(Vector::Constant(d, lo), Vector::Constant(d, hi));
  return s;
}

TreeProblem example_problem(bool with_cycle) {
  TreeProblem p;
  p.n_x = 4;
  p.subsystems.push_back(box_subsystem(1, {1, 2}, -1.0, 1.0));
  p.subsystems.push_back(box_subsystem(2, {2, 3, 4}, -1.0, 1.0));
  p.subsystems.push_back(box_subsystem(3, with_cycle ? std::vector<Index>{1, 4} : std::vector<Index>{4}, -1.0, 1.0));
  return p;
}

double monolithic_cost(const TreeProblem& p) {
  const auto mono = assemble_monolithic(p);
  const auto sol = solve_qp(mono.qp);
  EXPECT_TRUE(sol.optimal());
  return sol.objective + mono.constant;
}

LtiOcpSpec scalar_lq(double a, double b, double q, double r, double p, double z0, Index T) {
  LtiOcpSpec s;
  s.A = Matrix::Constant(1, 1, a);
  s.B = Matrix::Constant(1, 1, b);
  s.Qz = Matrix::Constant(1, 1, q);
  s.Ru = Matrix::Constant(1, 1, r);
  s.P = Matrix::Constant(1, 1, p);
  s.Z = HPolyhedron(1);
  s.U = HPolyhedron(1);
  s.ZT = HPolyhedron(1);
  s.z0 = Vector::Constant(1, z0);
  s.T = T;
  return s;
}

}  // namespace

TEST(InteractionGraph, ExampleHasCycle) {
  const auto edges = build_interaction_graph(example_problem(true));
  const std::vector<Edge> expected{{1, 2}, {1, 3}, {2, 3}};
  EXPECT_EQ(edges, expected);
  EXPECT_THROW(verify_tree(example_problem(true), edges, 1), NotATree);
}

TEST(InteractionGraph, SingleAndDisjoint) {
  TreeProblem one;
  one.n_x = 1;
  one.subsystems.push_back(box_subsystem(1, {1}, 0.0, 1.0));
  EXPECT_TRUE(build_interaction_graph(one).empty());
  TreeProblem two = one;
  two.n_x = 2;
  two.subsystems.push_back(box_subsystem(2, {2}, 0.0, 1.0));
  EXPECT_TRUE(build_interaction_graph(two).empty());
}

TEST(VerifyTree, ExampleWithoutCycleIsPath) {
  const auto p = example_problem(false);
  const auto topo = verify_tree(p, build_interaction_graph(p), 1);
  EXPECT_EQ(topo.parent.at(2), 1);
  EXPECT_EQ(topo.parent.at(3), 2);
  EXPECT_EQ(topo.coupling.at(2), VariableIndexSet({2}));
  EXPECT_EQ(topo.coupling.at(3), VariableIndexSet({4}));
  EXPECT_EQ(topo.local.at(2), VariableIndexSet({3}));
  EXPECT_EQ(topo.depth(), 2);
}

TEST(VerifyTree, CycleMessageNamesSubsystems) {
  const auto p = example_problem(true);
  try {
    verify_tree(p, build_interaction_graph(p), 1);
    FAIL();
  } catch (const NotATree& e) {
    EXPECT_NE(std::string(e.what()).find("cycle"), std::string::npos);
  }
}

TEST(VerifyTree, Star) {
  TreeProblem p;
  p.n_x = 4;
  p.subsystems.push_back(box_subsystem(1, {1, 2, 3, 4}, -1.0, 1.0));
  for (int k = 0; k < 4; ++k) p.subsystems.push_back(box_subsystem(k + 2, {k + 1}, -1.0, 1.0));
  const auto topo = verify_tree(p, build_interaction_graph(p), 1);
  EXPECT_EQ(topo.depth(), 1);
  EXPECT_EQ(topo.children.at(1).size(), 4u);
}

TEST(Monolithic, SharedColumn) {
  TreeProblem p;
  p.n_x = 3;
  p.subsystems.push_back(box_subsystem(1, {1, 2}, 0.0, 1.0));
  p.subsystems.push_back(box_subsystem(2, {2, 3}, 0.0, 1.0));
  const auto mono = assemble_monolithic(p);
  EXPECT_EQ(mono.qp.Q.rows(), 3);
  EXPECT_EQ(mono.qp.constraints.num_in(), 8);
  EXPECT_EQ(mono.variables, VariableIndexSet({1, 2, 3}));
}

TEST(Monolithic, SeparableBlocks) {
  TreeProblem p;
  p.n_x = 2;
  p.subsystems.push_back(box_subsystem(1, {1}, 0.0, 1.0));
  p.subsystems.push_back(box_subsystem(2, {2}, 0.0, 1.0));
  p.subsystems[0].objective.Q = Matrix::Constant(1, 1, 2.0);
  p.subsystems[1].objective.Q = Matrix::Constant(1, 1, 3.0);
  const auto mono = assemble_monolithic(p);
  EXPECT_DOUBLE_EQ(mono.qp.Q(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(mono.qp.Q(1, 1), 3.0);
}

TEST(BackwardSweep, LeafIntervalIsItsBox) {
  TreeProblem p;
  p.n_x = 2;
  p.subsystems.push_back(box_subsystem(1, {1, 2}, -5.0, 5.0));
  p.subsystems.push_back(box_subsystem(2, {2}, 0.0, 1.0));
  const auto topo = verify_tree(p, build_interaction_graph(p), 1);
  const auto art = backward_sweep(p, topo);
  const auto box = bounding_box(art.by_id.at(2).set.polyhedron);
  EXPECT_NEAR(box.lower(0), 0.0, 1e-9);
  EXPECT_NEAR(box.upper(0), 1.0, 1e-9);
}

TEST(BackwardSweep, EmptyLeaf) {
  TreeProblem p;
  p.n_x = 3;
  p.subsystems.push_back(box_subsystem(1, {1, 2}, -5.0, 5.0));
  p.subsystems.push_back(box_subsystem(2, {2, 3}, 0.0, 1.0));
  auto& P = std::get<HPolyhedron>(p.subsystems[1].constraints);
  P.bin(0) = -1.0;
  const auto topo = verify_tree(p, build_interaction_graph(p), 1);
  try {
    backward_sweep(p, topo);
    FAIL();
  } catch (const EmptyCouplingSet& e) {
    EXPECT_EQ(e.id(), 2);
  }
}

TEST(ForwardSweep, RandomTreesAreFeasible) {
  std::mt19937_64 rng(31);
  for (auto mode : {SetMode::Exact, SetMode::InnerBox, SetMode::InnerEllipsoid}) {
    for (auto value : {ValueMode::Zero, ValueMode::QuadraticFit, ValueMode::PiecewiseLinear}) {
      for (int k = 0; k < 4; ++k) {
        const auto inst = testkit::random_tree_qp(rng);
        SweepConfig cfg;
        cfg.default_set = mode;
        cfg.value_mode = value;
        BackwardArtifacts art;
        try {
          art = backward_sweep(inst.problem, inst.topology, cfg);
        } catch (const DomainError&) {
          continue;
        }
        const auto fwd = forward_sweep(inst.problem, inst.topology, art, cfg);
        EXPECT_TRUE(check_feasibility(inst.problem, fwd.x).feasible);
        EXPECT_GE(fwd.total_cost, monolithic_cost(inst.problem) - 1e-6);
      }
    }
  }
}

TEST(ForwardSweep, ExactSetsAreSupersetsOfInner) {
  std::mt19937_64 rng(41);
  const auto inst = testkit::random_tree_qp(rng);
  SweepConfig exact;
  SweepConfig box;
  box.default_set = SetMode::InnerBox;
  const auto a = backward_sweep(inst.problem, inst.topology, exact);
  const auto b = backward_sweep(inst.problem, inst.topology, box);
  for (const auto& [id, art] : b.by_id) {
    if (id == inst.topology.root) continue;
    ASSERT_TRUE(art.set.box.has_value());
    const auto& exact_set = a.by_id.at(id).set.polyhedron;
    EXPECT_TRUE(exact_set.contains(art.set.box->lower, 1e-7));
    EXPECT_TRUE(exact_set.contains(art.set.box->upper, 1e-7));
  }
}

TEST(ClassicDp, ScalarRiccati) {
  const double a = 1.2, b = 0.7, q = 1.0, r = 0.3, p = 2.0, z0 = 0.8;
  const auto spec = scalar_lq(a, b, q, r, p, z0, 2);
  double P = p;
  for (int t = 0; t < 2; ++t) P = q + a * a * P * r / (r + b * b * P);
  const auto [problem, topo] = ocp_to_tree(spec);
  const auto dp = classic_dp(problem, topo);
  EXPECT_NEAR(dp.forward.total_cost, P * z0 * z0, 1e-9);
}

TEST(ClassicDp, PaperSystemWithoutConstraints) {
  auto spec = LtiOcpSpec::reference_instance();
  spec.Z = HPolyhedron(2);
  spec.U = HPolyhedron(1);
  spec.ZT = HPolyhedron(2);
  const auto [problem, topo] = ocp_to_tree(spec);
  const auto dp = classic_dp(problem, topo);
  EXPECT_NEAR(dp.forward.total_cost, monolithic_cost(problem), 1e-8);
}

TEST(ClassicDp, RejectsInequalities) {
  const auto [problem, topo] = ocp_to_tree(LtiOcpSpec::reference_instance());
  EXPECT_THROW(classic_dp(problem, topo), Unsupported);
}

TEST(ClassicDp, ZeroCost) {
  auto spec = scalar_lq(1.0, 1.0, 0.0, 0.0, 0.0, 0.5, 3);
  const auto [problem, topo] = ocp_to_tree(spec);
  const auto dp = classic_dp(problem, topo);
  EXPECT_NEAR(dp.forward.total_cost, 0.0, 1e-12);
  for (const auto& [id, v] : dp.value_functions) EXPECT_LE(v.H.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ClassicDp, ProvidedValuesMatchMonolithic) {
  std::mt19937_64 rng(43);
  for (int k = 0; k < 5; ++k) {
    const auto spec = testkit::random_unconstrained_lq(rng, 3, 5);
    const auto [problem, topo] = ocp_to_tree(spec);
    const auto dp = classic_dp(problem, topo);
    const double mono = monolithic_cost(problem);
    EXPECT_NEAR(dp.forward.total_cost, mono, 1e-6 * std::max(1.0, std::abs(mono)));
  }
}

TEST(ValueFunction, OutsideDomainIsInfeasible) {
  TreeProblem p;
  p.n_x = 2;
  p.subsystems.push_back(box_subsystem(1, {1, 2}, -5.0, 5.0));
  p.subsystems.push_back(box_subsystem(2, {2}, 0.0, 1.0));
  p.subsystems[1].objective.Q = Matrix::Constant(1, 1, 2.0);
  const auto topo = verify_tree(p, build_interaction_graph(p), 1);
  const auto table =
      evaluate_value_function(p, topo, 2, {Vector::Constant(1, 0.5), Vector::Constant(1, 2.0)});
  ASSERT_TRUE(table[0].value.has_value());
  EXPECT_NEAR(*table[0].value, 0.25, 1e-9);
  EXPECT_FALSE(table[1].value.has_value());
}

TEST(CheckFeasibility, PerturbedBound) {
  TreeProblem p;
  p.n_x = 2;
  p.subsystems.push_back(box_subsystem(1, {1, 2}, 0.0, 1.0));
  p.subsystems.push_back(box_subsystem(2, {2}, 0.0, 1.0));
  Vector x(2);
  x << 0.0, 1.0;
  EXPECT_TRUE(check_feasibility(p, x).feasible);
  x(1) += 0.1;
  const auto r = check_feasibility(p, x);
  EXPECT_FALSE(r.feasible);
  EXPECT_NEAR(r.max_violation, 0.1, 1e-12);
}

TEST(ValueApprox, Evaluation) {
  QuadraticValue q{Matrix::Identity(1, 1) * 2.0, Vector::Constant(1, 1.0), 0.5};
  const auto v = ValueFunctionApprox::quadratic(q);
  EXPECT_NEAR(v(Vector::Constant(1, 1.0)), 2.5, 1e-12);
  PiecewiseLinearValue pw{Matrix::Constant(2, 1, 0.0), Vector::Zero(2), (Matrix(2, 1) << 1, -1).finished()};
  const auto w = ValueFunctionApprox::piecewise_linear(pw);
  EXPECT_NEAR(w(Vector::Constant(1, -2.0)), 2.0, 1e-12);
  EXPECT_NEAR(ValueFunctionApprox::zero(1)(Vector::Constant(1, 3.0)), 0.0, 0.0);
}
