#pragma once

#include "treedp/common.hpp"

#include <string>
#include <utility>
#include <vector>

namespace treedp {

struct Bus {
  int id = 0;
  double demand_p = 0.0;
  double demand_q = 0.0;
  double v_min = 0.95;
  double v_max = 1.05;
};

// y = g + j b
struct Branch {
  int from = 0;
  int to = 0;
  double g = 0.0;
  double b = 0.0;
  double s_max = 0.0;
};

// s_max <= 0 disables the apparent-power cap, alpha <= 0 the power-factor band.
struct Generator {
  int bus = 0;
  double p_min = 0.0;
  double p_max = 0.0;
  double s_max = 0.0;
  double alpha = 0.0;
  double cost_c = 0.0;
  double cost_d = 0.0;
};

struct GridModel {
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  int reference_bus = 0;

  void validate() const;
  Index n_bus() const { return static_cast<Index>(buses.size()); }
  // Position of a bus id in buses; throws InvalidArgument when absent.
  Index bus_index(int id) const;
  std::vector<Index> generators_at(int bus) const;
};

Branch branch_from_impedance(int from, int to, double r, double x, double s_max);

struct Admittance {
  Matrix G;
  Matrix B;
};

// [Y]_kk = sum of incident y, [Y]_kl = -y_kl; rows follow GridModel::buses.
Admittance build_admittance(const GridModel& grid);

// Net injections p_k = sum_l v_k v_l (G_kl cos t_kl + B_kl sin t_kl), likewise q_k.
std::pair<Vector, Vector> bus_injections(const Admittance& Y, const Vector& v, const Vector& theta);

// (p_k - sum_l p_kl, q_k - sum_l q_kl) stacked, with p_k, q_k the given net injections.
Vector ac_power_flow_residual(const GridModel& grid, const Vector& v, const Vector& theta, const Vector& p,
                              const Vector& q);

// Physical flow leaving bus k towards l over a branch with admittance g + j b.
struct BranchFlow {
  double p = 0.0;
  double q = 0.0;
};
BranchFlow ac_branch_flow(double g, double b, double vk, double vl, double theta_kl);

// Net injections from generation minus demand.
std::pair<Vector, Vector> net_injections(const GridModel& grid, const Vector& pg, const Vector& qg);

}  // namespace treedp
