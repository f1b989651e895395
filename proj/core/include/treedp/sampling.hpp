#pragma once

#include "treedp/hpolyhedron.hpp"
#include "treedp/solvers.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace treedp {

// dom = {(z, y) : g(z, y) = 0, h(z, y) <= 0, lower <= (z, y) <= upper}
struct NlpConstraintSpec {
  std::string name;
  Index nz = 0;
  Index ny = 0;
  std::function<Vector(const Vector&)> g;           // over zy = (z, y)
  std::function<Matrix(const Vector&)> g_jacobian;  // rows(g) x (nz + ny)
  std::function<Vector(const Vector&)> h;
  Vector lower;  // may hold -inf / +inf
  Vector upper;
  // Positions in zy drawn by decision-variable sampling; the remaining
  // positions are solved from g = 0 and must match the number of equations.
  std::vector<Index> sampled;
  Vector initial_guess;
  bool convex = false;
  // Per z component, the sampled position released when that component is
  // held fixed during gridding (-1 if none).
  std::vector<Index> partner;
  std::vector<std::string> names;

  Index dim() const { return nz + ny; }
  void validate() const;
  // max(|g|_inf, max(h)+, bound violation)
  double violation(const Vector& zy) const;
  double equality_residual(const Vector& zy) const;
  double inequality_violation(const Vector& zy) const;
};

enum class Provenance { DecisionSampled, BoundaryLP, GridRefined };

std::string to_string(Provenance p);

struct SamplePoint {
  Vector z;
  Vector witness;  // full (z, y)
  double residual = 0.0;
  Provenance provenance = Provenance::DecisionSampled;
  Vector cost;               // BoundaryLP / GridRefined objective
  Index component = -1;      // GridRefined fixed component
  double fixed_value = 0.0;  // GridRefined fixed value
  int direction = 0;         // GridRefined: -1 minimize, +1 maximize
  Index sample_index = 0;
};

struct SampleSet {
  Index dim = 0;
  std::vector<SamplePoint> points;
  Index attempted = 0;
  Index rejected = 0;
  Index failed_directions = 0;

  std::vector<Vector> coordinates() const;
  void append(const SampleSet& other);
};

// Convex (polyhedral plus convex quadratic) set over (z, y).
struct ConvexSetSpec {
  HPolyhedron polyhedron;
  std::vector<QuadraticConstraint> quadratic;
  Index nz = 0;

  void validate() const;
};

struct SamplingOptions {
  double tol = 1e-8;
  Index newton_max_iter = 40;
  int threads = 1;
};

SampleSet decision_variable_sampling(const NlpConstraintSpec& spec, Index n_samples, std::uint64_t seed,
                                     const SamplingOptions& opt = {});

// {-1, 0, 1}^n without the zero vector, lexicographic.
std::vector<Vector> default_cost_directions(Index n);

SampleSet optimization_based_sampling(const ConvexSetSpec& spec, const std::vector<Vector>& costs);

// For n_grid equi-distant values of z_m between its extremes, minimizes each
// direction (a cost over z) with z_m held fixed.
SampleSet gridding_refinement(const ConvexSetSpec& spec, const SampleSet& base, Index m, Index n_grid,
                              const std::vector<Vector>& directions);
SampleSet gridding_refinement(const NlpConstraintSpec& spec, const SampleSet& base, Index m, Index n_grid,
                              const std::vector<Vector>& directions, const SamplingOptions& opt = {});

struct SampleHull {
  HPolyhedron polyhedron;
  bool certified_inner = false;
};

// certified_inner is true only for samples of a convex set.
SampleHull hull_of_samples(const SampleSet& samples, bool convex_source);

// Re-evaluates every stored witness; returns the worst violation.
double certify_samples(const NlpConstraintSpec& spec, const SampleSet& samples);

// Newton completion: positions in `fixed` keep their values in zy, the
// remaining positions are solved from g = 0. Returns the completed point when
// it converges to tol.
std::optional<Vector> nlp_complete(const NlpConstraintSpec& spec, const Vector& zy, const std::vector<Index>& fixed,
                                   const SamplingOptions& opt = {});

struct LocalSearchResult {
  Vector zy;
  double objective = 0.0;
  Index evaluations = 0;
};

// Derivative-free pattern search over the `search` positions (within bounds),
// every trial completed by Newton over the non-fixed positions and accepted
// only when certified feasible. `start` must be feasible.
std::optional<LocalSearchResult> nlp_local_search(const NlpConstraintSpec& spec, const Vector& start,
                                                  const std::vector<Index>& fixed, const std::vector<Index>& search,
                                                  const std::function<double(const Vector&)>& objective,
                                                  const SamplingOptions& opt = {});

// Minimizes objective over the set with z held at the given value: completes
// from the stored witnesses nearest to z (z components and sampled positions
// fixed except the partners of z), then runs the local search over the
// remaining sampled positions. nullopt when no start completes.
std::optional<LocalSearchResult> nlp_minimize_at(const NlpConstraintSpec& spec, const std::vector<Vector>& starts,
                                                 const Vector& z,
                                                 const std::function<double(const Vector&)>& objective,
                                                 const SamplingOptions& opt = {});

// Witnesses of the samples, nearest to z first.
std::vector<Vector> nearest_witnesses(const SampleSet& samples, const Vector& z, Index count);

// Runs f(i) for i in [0, n) on up to `threads` workers.
void parallel_for(Index n, int threads, const std::function<void(Index)>& f);

// Per-sample seed derivation (splitmix64).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace treedp
