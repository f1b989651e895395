#include "treedp/grid.hpp"

#include "treedp/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <set>

namespace treedp {

void GridModel::validate() const {
  std::set<int> ids;
  for (const auto& b : buses) {
    if (!ids.insert(b.id).second) throw InvalidArgument(fmt::format("duplicate bus {}", b.id));
    if (!(b.v_min <= b.v_max) || b.v_min <= 0.0) throw InvalidArgument(fmt::format("bus {} has invalid voltage bounds", b.id));
  }
  if (!ids.count(reference_bus)) throw InvalidArgument(fmt::format("reference bus {} does not exist", reference_bus));
  std::set<std::pair<int, int>> seen;
  for (const auto& br : branches) {
    if (!ids.count(br.from) || !ids.count(br.to) || br.from == br.to)
      throw InvalidArgument(fmt::format("branch {}-{} has invalid endpoints", br.from, br.to));
    if (!std::isfinite(br.g) || !std::isfinite(br.b)) throw InvalidArgument(fmt::format("branch {}-{} admittance is not finite", br.from, br.to));
    if (!seen.insert({std::min(br.from, br.to), std::max(br.from, br.to)}).second)
      throw InvalidArgument(fmt::format("parallel branch {}-{}", br.from, br.to));
  }
  for (const auto& g : generators) {
    if (!ids.count(g.bus)) throw InvalidArgument(fmt::format("generator at unknown bus {}", g.bus));
    if (!(g.p_min <= g.p_max)) throw InvalidArgument(fmt::format("generator at bus {} has p_min > p_max", g.bus));
    if (g.cost_c < 0.0) throw InvalidArgument(fmt::format("generator at bus {} has a concave cost", g.bus));
  }
}

Index GridModel::bus_index(int id) const {
  for (size_t k = 0; k < buses.size(); ++k)
    if (buses[k].id == id) return static_cast<Index>(k);
  throw InvalidArgument(fmt::format("unknown bus {}", id));
}

std::vector<Index> GridModel::generators_at(int bus) const {
  std::vector<Index> out;
  for (size_t k = 0; k < generators.size(); ++k)
    if (generators[k].bus == bus) out.push_back(static_cast<Index>(k));
  return out;
}

Branch branch_from_impedance(int from, int to, double r, double x, double s_max) {
  const double d = r * r + x * x;
  if (d <= 0.0) throw InvalidArgument(fmt::format("branch {}-{} has zero impedance", from, to));
  return {from, to, r / d, -x / d, s_max};
}

Admittance build_admittance(const GridModel& grid) {
  const Index n = grid.n_bus();
  Admittance Y{Matrix::Zero(n, n), Matrix::Zero(n, n)};
  for (const auto& br : grid.branches) {
    const Index a = grid.bus_index(br.from), c = grid.bus_index(br.to);
    Y.G(a, a) += br.g;
    Y.G(c, c) += br.g;
    Y.G(a, c) -= br.g;
    Y.G(c, a) -= br.g;
    Y.B(a, a) += br.b;
    Y.B(c, c) += br.b;
    Y.B(a, c) -= br.b;
    Y.B(c, a) -= br.b;
  }
  return Y;
}

std::pair<Vector, Vector> bus_injections(const Admittance& Y, const Vector& v, const Vector& theta) {
  const Index n = Y.G.rows();
  if (v.size() != n || theta.size() != n) throw DimensionMismatch("voltage vectors have wrong size");
  Vector P = Vector::Zero(n), Q = Vector::Zero(n);
  for (Index k = 0; k < n; ++k)
    for (Index l = 0; l < n; ++l) {
      if (Y.G(k, l) == 0.0 && Y.B(k, l) == 0.0) continue;
      const double t = theta(k) - theta(l);
      P(k) += v(k) * v(l) * (Y.G(k, l) * std::cos(t) + Y.B(k, l) * std::sin(t));
      Q(k) += v(k) * v(l) * (Y.G(k, l) * std::sin(t) - Y.B(k, l) * std::cos(t));
    }
  return {P, Q};
}

Vector ac_power_flow_residual(const GridModel& grid, const Vector& v, const Vector& theta, const Vector& p,
                              const Vector& q) {
  const Index n = grid.n_bus();
  if (p.size() != n || q.size() != n) throw DimensionMismatch("injection vectors have wrong size");
  const auto [P, Q] = bus_injections(build_admittance(grid), v, theta);
  Vector r(2 * n);
  r << p - P, q - Q;
  return r;
}

BranchFlow ac_branch_flow(double g, double b, double vk, double vl, double t) {
  const double c = std::cos(t), s = std::sin(t);
  return {g * vk * vk - vk * vl * (g * c + b * s), -b * vk * vk - vk * vl * (g * s - b * c)};
}

std::pair<Vector, Vector> net_injections(const GridModel& grid, const Vector& pg, const Vector& qg) {
  const Index n = grid.n_bus();
  if (pg.size() != static_cast<Index>(grid.generators.size()) || qg.size() != pg.size())
    throw DimensionMismatch("generator vectors have wrong size");
  Vector p(n), q(n);
  for (Index k = 0; k < n; ++k) {
    p(k) = -grid.buses[static_cast<size_t>(k)].demand_p;
    q(k) = -grid.buses[static_cast<size_t>(k)].demand_q;
  }
  for (size_t j = 0; j < grid.generators.size(); ++j) {
    const Index k = grid.bus_index(grid.generators[j].bus);
    p(k) += pg(static_cast<Index>(j));
    q(k) += qg(static_cast<Index>(j));
  }
  return {p, q};
}

}  // namespace treedp
