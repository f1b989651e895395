#pragma once

#include "treedp/centering.hpp"
#include "treedp/model.hpp"
#include "treedp/sampling.hpp"

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace treedp {

// 1/2 z'Hz + h'z + constant
struct QuadraticValue {
  Matrix H;
  Vector h;
  double constant = 0.0;
};

// max_l values_l + slopes_l'(z - points_l)
struct PiecewiseLinearValue {
  Matrix points;  // one row per sample
  Vector values;
  Matrix slopes;
};

struct ValueFunctionApprox {
  std::variant<std::monostate, QuadraticValue, PiecewiseLinearValue> form;
  Index domain_dim = 0;

  static ValueFunctionApprox zero(Index dim);
  static ValueFunctionApprox quadratic(QuadraticValue q);
  static ValueFunctionApprox piecewise_linear(PiecewiseLinearValue p);

  std::string variant_name() const;
  double operator()(const Vector& z) const;
};

enum class SetMode { Exact, InnerEllipsoid, InnerBox, SampleHull };
enum class ValueMode { Zero, QuadraticFit, PiecewiseLinear, Provided };

std::string to_string(SetMode m);
std::string to_string(ValueMode m);

struct CouplingSetApprox {
  SetMode kind = SetMode::Exact;
  // Exact / box / hull set, or a polytope inside the ellipsoid used when a
  // parent projection needs a polyhedral child.
  HPolyhedron polyhedron;
  std::optional<Ellipsoid> ellipsoid;
  std::optional<Box> box;
  std::optional<HPolyhedron> exact;  // exact projection when it was computed
  bool certified_inner = true;

  bool contains(const Vector& z, double tol = 1e-9) const;
};

struct SubsystemArtifact {
  int id = 0;
  CouplingSetApprox set;
  ValueFunctionApprox value;
};

struct BackwardArtifacts {
  std::map<int, SubsystemArtifact> by_id;
  double runtime_s = 0.0;
};

struct SweepConfig {
  SetMode default_set = SetMode::Exact;
  std::map<int, SetMode> set_mode;
  ValueMode value_mode = ValueMode::Zero;
  std::map<int, ValueFunctionApprox> provided;
  // Sample-based sets for NLP subsystems, keyed by id.
  std::map<int, SampleSet> samples;
  bool allow_uncertified_hull = false;
  Index fit_samples = 0;  // 0: 4 x number of quadratic coefficients
  std::uint64_t seed = 42;
  int threads = 1;
  double feasibility_tol = 1e-6;

  SetMode mode_for(int id) const;
};

struct FeasibilityReport {
  std::map<int, double> equality_violation;
  std::map<int, double> inequality_violation;
  double max_violation = 0.0;
  bool feasible = true;
  double tol = 1e-6;
};

struct SubsystemDispatch {
  int id = 0;
  Vector x;  // over I_i
  double cost = 0.0;
  double kkt_residual = 0.0;
  Index iterations = 0;
};

struct ForwardResult {
  std::map<int, SubsystemDispatch> subsystems;
  Vector x;  // global, NaN at unreferenced indices
  double total_cost = 0.0;
  FeasibilityReport audit;
  double runtime_s = 0.0;
};

BackwardArtifacts backward_sweep(const TreeProblem& problem, const TreeTopology& topo, const SweepConfig& config = {});
ForwardResult forward_sweep(const TreeProblem& problem, const TreeTopology& topo, const BackwardArtifacts& artifacts,
                            const SweepConfig& config = {});

struct ClassicDpResult {
  std::map<int, QuadraticValue> value_functions;
  ForwardResult forward;
};

// Exact quadratic value recursion for equality-constrained convex quadratic
// trees; throws Unsupported when inequalities are present.
ClassicDpResult classic_dp(const TreeProblem& problem, const TreeTopology& topo);

struct ValueTableEntry {
  Vector z;
  std::optional<double> value;  // nullopt: z outside the domain
  double kkt_residual = 0.0;
};

// Subtree optimum with W_id fixed to each grid point.
std::vector<ValueTableEntry> evaluate_value_function(const TreeProblem& problem, const TreeTopology& topo, int id,
                                                     const std::vector<Vector>& grid, int threads = 1);

FeasibilityReport check_feasibility(const TreeProblem& problem, const Vector& x, double tol = 1e-6);

// Builds the global vector from per-subsystem dispatches.
Vector assemble_point(const TreeProblem& problem, const std::map<int, SubsystemDispatch>& parts);

}  // namespace treedp
