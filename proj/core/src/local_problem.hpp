#pragma once

#include "treedp/dp.hpp"

namespace treedp::detail {

// Subproblem of one subsystem given its children's artifacts, over the
// native local vector x_{I_i} followed by epigraph variables.
struct LocalProblem {
  QuadraticProgram qp;
  std::vector<QuadraticConstraint> quad;
  double constant = 0.0;
  Index n_native = 0;
  // Native-variable domain with ellipsoid children replaced by inner polytopes.
  HPolyhedron projection_domain;
};

LocalProblem build_local_problem(const TreeProblem& problem, const TreeTopology& topo,
                                 const BackwardArtifacts& artifacts, int id, bool with_values);

struct FixedProblem {
  QuadraticProgram qp;
  std::vector<QuadraticConstraint> quad;
  double constant = 0.0;
  Positions free;  // columns of the local problem kept as variables
};

// Substitutes columns `fixed` by `values`.
FixedProblem fix_columns(const LocalProblem& lp, const Positions& fixed, const Vector& values);

Solution solve_local(const QuadraticProgram& qp, const std::vector<QuadraticConstraint>& quad);

QuadraticConstraint ellipsoid_constraint(const Ellipsoid& E, Index n, const Positions& pos);

}  // namespace treedp::detail
