#pragma once

#include "treedp/centering.hpp"
#include "treedp/dp.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace treedp {

// min sum_{t<T} z_t'Qz z_t + u_t'Ru u_t + z_T'P z_T
// s.t. z_{t+1} = A z_t + B u_t, u_t in U, z_t in Z (0 < t < T), z_T in Z_T, z_0 fixed
struct LtiOcpSpec {
  Matrix A;
  Matrix B;
  Matrix Qz;
  Matrix Ru;
  HPolyhedron Z;
  HPolyhedron U;
  Matrix P;
  HPolyhedron ZT;
  Vector z0;
  Index T = 0;

  Index nz() const { return A.rows(); }
  Index nu() const { return B.cols(); }
  void validate() const;

  static LtiOcpSpec reference_instance();
  // Same instance with U, Z and Z_T replaced by boxes of the given half-width.
  LtiOcpSpec widened(double half_width = 1e6) const;
};

// Global layout x = (z_0, u_0, z_1, u_1, ..., u_{T-1}, z_T), 1-based indices.
struct OcpLayout {
  Index nz = 0;
  Index nu = 0;
  Index T = 0;

  VariableIndexSet state(Index t) const;
  VariableIndexSet input(Index t) const;
  Index n_x() const { return (T + 1) * nz + T * nu; }
};

std::pair<TreeProblem, TreeTopology> ocp_to_tree(const LtiOcpSpec& spec);

// R_0 = Z_T, R_1 = Pre(Z_T), R_k = Pre(R_{k-1} and Z); the set of subsystem t is R_{T-t+1}.
std::vector<HPolyhedron> backward_reachable_sets(const LtiOcpSpec& spec, Index N);

struct Trajectory {
  Matrix z;  // (T+1) x nz
  Matrix u;  // T x nu
  double cost = 0.0;
  double dynamics_residual = 0.0;
};

Trajectory extract_trajectory(const LtiOcpSpec& spec, const Vector& x);

enum class OcpVariant { ExactAllStages, EllipsoidAtStage };
enum class OcpValueFn { Zero, TerminalQuadratic };

struct OcpDemoConfig {
  OcpVariant variant = OcpVariant::ExactAllStages;
  OcpValueFn value_fn = OcpValueFn::Zero;
  Index ellipsoid_stage = 1;
  int threads = 1;
};

struct OcpReport {
  std::map<Index, HPolyhedron> stage_sets;  // subsystem t -> set over z_{t-1}
  std::optional<Ellipsoid> ellipsoid;
  double ellipsoid_certificate = 0.0;
  Trajectory monolithic;
  Trajectory fpadp;
  FeasibilityReport audit;
  bool initial_state_admissible = false;
  double terminal_violation = 0.0;
  double backward_runtime_s = 0.0;
  double forward_runtime_s = 0.0;
  double monolithic_runtime_s = 0.0;
};

OcpReport run_ocp_demo(const LtiOcpSpec& spec, const OcpDemoConfig& config = {});

}  // namespace treedp
