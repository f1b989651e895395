#pragma once

#include "treedp/hpolyhedron.hpp"
#include "treedp/index_set.hpp"
#include "treedp/solvers.hpp"

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace treedp {

struct NlpConstraintSpec;

// 1/2 x'Qx + q'x + constant over the subsystem's local vector x_{I_i}
struct QuadraticObjective {
  Matrix Q;
  Vector q;
  double constant = 0.0;

  static QuadraticObjective zero(Index n);
  double value(const Vector& x) const { return 0.5 * x.dot(Q * x) + q.dot(x) + constant; }
};

// Constraint set given by equality/inequality maps over (z, y). The local
// vector x_{I_i} is laid out so that z sits at z_positions and y fills the
// remaining positions in ascending order.
struct NlpRef {
  std::string name;
  std::shared_ptr<const NlpConstraintSpec> spec;
  Positions z_positions;
};

using ConstraintSet = std::variant<HPolyhedron, NlpRef>;

struct Subsystem {
  int id = 0;
  VariableIndexSet indices;
  QuadraticObjective objective;
  ConstraintSet constraints;

  bool polyhedral() const { return std::holds_alternative<HPolyhedron>(constraints); }
  const HPolyhedron& polyhedron() const;
  const NlpRef& nlp() const;
  Index size() const { return indices.size(); }
};

struct TreeProblem {
  Index n_x = 0;
  std::vector<Subsystem> subsystems;

  // Throws DimensionMismatch / InvalidArgument on malformed data.
  void validate() const;
  const Subsystem& subsystem(int id) const;
  VariableIndexSet referenced() const;
};

struct Edge {
  int a = 0;
  int b = 0;
  bool operator==(const Edge&) const = default;
};

struct TreeTopology {
  int root = 1;
  std::map<int, int> parent;
  std::map<int, std::vector<int>> children;
  std::map<int, VariableIndexSet> coupling;  // W_i
  std::map<int, VariableIndexSet> local;     // L_i

  // Subsystems grouped by depth, root first.
  std::vector<std::vector<int>> levels() const;
  std::vector<int> preorder() const;
  int depth() const;
};

std::vector<Edge> build_interaction_graph(const TreeProblem& problem);
TreeTopology verify_tree(const TreeProblem& problem, const std::vector<Edge>& edges, int root = 1);

struct MonolithicProblem {
  QuadraticProgram qp;
  double constant = 0.0;
  VariableIndexSet variables;  // global index of each column
};

// Stacks every subsystem into one QP over the referenced variables.
MonolithicProblem assemble_monolithic(const TreeProblem& problem);
// Same, restricted to a subset of subsystems.
MonolithicProblem assemble_subset(const TreeProblem& problem, const std::vector<int>& ids);

// Ids of the subtree rooted at id (id first, preorder).
std::vector<int> subtree_ids(const TreeTopology& topo, int id);

}  // namespace treedp
