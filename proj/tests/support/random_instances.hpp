#pragma once

#include "treedp/model.hpp"
#include "treedp/ocp.hpp"

#include <random>

namespace treedp::testkit {

struct RandomTreeOptions {
  int max_depth = 3;
  int max_branching = 3;
  Index max_local = 3;
  Index max_coupling = 2;
  Index extra_rows = 3;
  double equality_probability = 0.15;
};

struct RandomTree {
  TreeProblem problem;
  TreeTopology topology;
  Vector feasible_point;  // global, contained in every subsystem's set
};

// Convex tree-structured QP whose constraint sets all contain one known point.
RandomTree random_tree_qp(std::mt19937_64& rng, const RandomTreeOptions& opt = {});

// Bounded polytope: a box of half-width 3 around the origin plus random rows
// with the origin strictly inside.
HPolyhedron random_polytope(std::mt19937_64& rng, Index dim, Index extra_rows);

// Unconstrained LQ instance on a path graph (no state or input sets).
LtiOcpSpec random_unconstrained_lq(std::mt19937_64& rng, Index max_state = 3, Index max_horizon = 8);

Vector uniform_vector(std::mt19937_64& rng, Index n, double lo, double hi);
Matrix random_spd(std::mt19937_64& rng, Index n, double floor = 0.1);

}  // namespace treedp::testkit
