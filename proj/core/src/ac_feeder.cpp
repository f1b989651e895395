#include "detail_log.hpp"
#include "opf_detail.hpp"
#include "treedp/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <map>
#include <memory>

namespace treedp {

namespace detail {

AcLayout ac_layout(const GridModel& grid, const LeafCoupling& leaf, bool fixed_voltage) {
  AcLayout L;
  L.fixed_voltage = fixed_voltage;
  Index k = 0;
  if (fixed_voltage) {
    L.nz = 2;
    L.p = k++;
    L.q = k++;
    L.vc = k++;
  } else {
    L.nz = 3;
    L.vc = k++;
    L.p = k++;
    L.q = k++;
  }
  for (size_t b = 0; b < leaf.buses.size(); ++b) L.v.push_back(k++);
  for (size_t b = 0; b < leaf.buses.size(); ++b) L.th.push_back(k++);
  for (int b : leaf.buses)
    for (Index j : grid.generators_at(b)) {
      L.gens.push_back(j);
      L.pg.push_back(k++);
      L.qg.push_back(k++);
    }
  L.dim = k;
  return L;
}

}  // namespace detail

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct LeafModel {
  detail::AcLayout lay;
  std::vector<Index> grid_bus;  // grid position per leaf bus
  Index coupling_grid_bus = 0;
  std::map<Index, Index> local_of;  // grid position -> leaf bus position
  std::vector<std::vector<Index>> nbrs;  // grid positions adjacent to each leaf bus
  Admittance Y;
  Branch coupling;
  std::vector<Branch> limited;  // branches with apparent-power limits
  std::vector<std::vector<Index>> gens_at;  // per leaf bus, positions into lay.gens
  std::vector<double> pd;
  std::vector<double> qd;
  Index feeder_grid_bus = 0;
  double vc_min = 0.0;
  double vc_max = 0.0;
  std::vector<double> alpha;
  std::vector<double> smax;
  std::map<int, Index> grid_index;  // bus id -> grid position
};

LeafModel leaf_model(const GridModel& grid, const LeafCoupling& leaf, bool fixed_voltage) {
  LeafModel M;
  M.lay = detail::ac_layout(grid, leaf, fixed_voltage);
  M.Y = build_admittance(grid);
  M.coupling_grid_bus = grid.bus_index(leaf.coupling_bus);
  for (size_t b = 0; b < leaf.buses.size(); ++b) {
    const Index g = grid.bus_index(leaf.buses[b]);
    M.grid_bus.push_back(g);
    M.local_of[g] = static_cast<Index>(b);
    M.pd.push_back(grid.buses[static_cast<size_t>(g)].demand_p);
    M.qd.push_back(grid.buses[static_cast<size_t>(g)].demand_q);
  }
  M.nbrs.resize(leaf.buses.size());
  M.gens_at.resize(leaf.buses.size());
  for (size_t b = 0; b < leaf.buses.size(); ++b)
    for (Index l = 0; l < grid.n_bus(); ++l)
      if (l != M.grid_bus[b] && (M.Y.G(M.grid_bus[b], l) != 0.0 || M.Y.B(M.grid_bus[b], l) != 0.0)) M.nbrs[b].push_back(l);
  for (size_t j = 0; j < M.lay.gens.size(); ++j) {
    const Index g = grid.bus_index(grid.generators[static_cast<size_t>(M.lay.gens[j])].bus);
    M.gens_at[static_cast<size_t>(M.local_of.at(g))].push_back(static_cast<Index>(j));
  }
  M.coupling = grid.branches[static_cast<size_t>(leaf.branch)];
  if (M.coupling.from != leaf.coupling_bus) std::swap(M.coupling.from, M.coupling.to);
  for (Index j : leaf.internal_branches) M.limited.push_back(grid.branches[static_cast<size_t>(j)]);
  M.limited.push_back(M.coupling);
  M.feeder_grid_bus = grid.bus_index(leaf.feeder_bus);
  M.vc_min = grid.buses[static_cast<size_t>(M.coupling_grid_bus)].v_min;
  M.vc_max = grid.buses[static_cast<size_t>(M.coupling_grid_bus)].v_max;
  for (Index j : M.lay.gens) {
    M.alpha.push_back(grid.generators[static_cast<size_t>(j)].alpha);
    M.smax.push_back(grid.generators[static_cast<size_t>(j)].s_max);
  }
  for (const auto& bus : grid.buses) M.grid_index[bus.id] = grid.bus_index(bus.id);
  return M;
}

// Voltage magnitude and angle position of a grid bus inside (z, y); angle -1 means fixed at zero.
std::pair<Index, Index> vt_pos(const LeafModel& M, Index grid_bus) {
  if (grid_bus == M.coupling_grid_bus) return {M.lay.vc, -1};
  const Index b = M.local_of.at(grid_bus);
  return {M.lay.v[static_cast<size_t>(b)], M.lay.th[static_cast<size_t>(b)]};
}

double val(const Vector& zy, Index p) { return p < 0 ? 0.0 : zy(p); }

Vector ac_residual(const LeafModel& M, const Vector& zy, Matrix* J) {
  const auto& lay = M.lay;
  const Index nb = static_cast<Index>(M.grid_bus.size());
  Vector r(2 * nb + 2);
  if (J) *J = Matrix::Zero(2 * nb + 2, lay.dim);
  for (Index b = 0; b < nb; ++b) {
    const Index k = M.grid_bus[static_cast<size_t>(b)];
    const Index iv = lay.v[static_cast<size_t>(b)], it = lay.th[static_cast<size_t>(b)];
    const double vk = zy(iv), tk = zy(it);
    double P = vk * vk * M.Y.G(k, k), Q = -vk * vk * M.Y.B(k, k);
    double dPv = 2.0 * vk * M.Y.G(k, k), dQv = -2.0 * vk * M.Y.B(k, k), dPt = 0.0, dQt = 0.0;
    for (Index l : M.nbrs[static_cast<size_t>(b)]) {
      const auto [pv, pt] = vt_pos(M, l);
      const double vl = zy(pv), t = tk - val(zy, pt);
      const double G = M.Y.G(k, l), B = M.Y.B(k, l), c = std::cos(t), s = std::sin(t);
      const double a1 = G * c + B * s, a2 = G * s - B * c;
      P += vk * vl * a1;
      Q += vk * vl * a2;
      if (!J) continue;
      dPv += vl * a1;
      dQv += vl * a2;
      dPt += vk * vl * (-G * s + B * c);
      dQt += vk * vl * a1;
      (*J)(2 * b, pv) -= vk * a1;
      (*J)(2 * b + 1, pv) -= vk * a2;
      if (pt >= 0) {
        (*J)(2 * b, pt) += vk * vl * (-G * s + B * c);
        (*J)(2 * b + 1, pt) += vk * vl * a1;
      }
    }
    double pg = 0.0, qg = 0.0;
    for (Index j : M.gens_at[static_cast<size_t>(b)]) {
      pg += zy(lay.pg[static_cast<size_t>(j)]);
      qg += zy(lay.qg[static_cast<size_t>(j)]);
      if (J) {
        (*J)(2 * b, lay.pg[static_cast<size_t>(j)]) += 1.0;
        (*J)(2 * b + 1, lay.qg[static_cast<size_t>(j)]) += 1.0;
      }
    }
    r(2 * b) = pg - M.pd[static_cast<size_t>(b)] - P;
    r(2 * b + 1) = qg - M.qd[static_cast<size_t>(b)] - Q;
    if (J) {
      (*J)(2 * b, iv) -= dPv;
      (*J)(2 * b + 1, iv) -= dQv;
      (*J)(2 * b, it) -= dPt;
      (*J)(2 * b + 1, it) -= dQt;
    }
  }
  const Index f = M.local_of.at(M.feeder_grid_bus);
  const Index ivf = lay.v[static_cast<size_t>(f)], itf = lay.th[static_cast<size_t>(f)];
  const double g = M.coupling.g, bb = M.coupling.b;
  const double vc = zy(lay.vc), vf = zy(ivf), t = -zy(itf), c = std::cos(t), s = std::sin(t);
  const BranchFlow fl = ac_branch_flow(g, bb, vc, vf, t);
  const Index rp = 2 * nb, rq = 2 * nb + 1;
  r(rp) = zy(lay.p) - fl.p;
  r(rq) = zy(lay.q) - fl.q;
  if (J) {
    (*J)(rp, lay.p) = 1.0;
    (*J)(rq, lay.q) = 1.0;
    (*J)(rp, lay.vc) -= 2.0 * g * vc - vf * (g * c + bb * s);
    (*J)(rp, ivf) -= -vc * (g * c + bb * s);
    (*J)(rp, itf) -= vc * vf * (-g * s + bb * c);
    (*J)(rq, lay.vc) -= -2.0 * bb * vc - vf * (g * s - bb * c);
    (*J)(rq, ivf) -= -vc * (g * s - bb * c);
    (*J)(rq, itf) -= vc * vf * (g * c + bb * s);
  }
  return r;
}

Vector ac_inequalities(const LeafModel& M, const Vector& zy) {
  const auto& lay = M.lay;
  std::vector<double> h;
  h.push_back(zy(lay.vc) - M.vc_max);
  h.push_back(M.vc_min - zy(lay.vc));
  for (size_t j = 0; j < lay.gens.size(); ++j) {
    const double pg = zy(lay.pg[j]), qg = zy(lay.qg[j]);
    const double alpha = M.alpha[j], smax = M.smax[j];
    if (alpha > 0.0) {
      h.push_back(-pg - alpha * qg);
      h.push_back(alpha * qg - pg);
    }
    if (smax > 0.0) h.push_back(pg * pg + qg * qg - smax * smax);
  }
  for (const Branch& br : M.limited) {
    if (br.s_max <= 0.0) continue;
    const auto [va, ta] = vt_pos(M, M.grid_index.at(br.from));
    const auto [vb, tb] = vt_pos(M, M.grid_index.at(br.to));
    const double t = val(zy, ta) - val(zy, tb);
    const BranchFlow ab = ac_branch_flow(br.g, br.b, zy(va), zy(vb), t);
    const BranchFlow ba = ac_branch_flow(br.g, br.b, zy(vb), zy(va), -t);
    h.push_back(ab.p * ab.p + ab.q * ab.q - br.s_max * br.s_max);
    h.push_back(ba.p * ba.p + ba.q * ba.q - br.s_max * br.s_max);
  }
  return Eigen::Map<const Vector>(h.data(), static_cast<Index>(h.size()));
}

}  // namespace

NlpConstraintSpec ac_leaf_spec(const GridModel& grid, const LeafCoupling& leaf, std::optional<double> fixed_voltage) {
  auto M = std::make_shared<LeafModel>(leaf_model(grid, leaf, fixed_voltage.has_value()));
  const auto& lay = M->lay;
  const Index nb = static_cast<Index>(leaf.buses.size());
  const Index n = lay.dim;
  const Index ng = static_cast<Index>(lay.gens.size());

  NlpConstraintSpec s;
  s.name = fmt::format("ac_feeder_{}", leaf.subsystem);
  s.nz = lay.nz;
  s.ny = n - lay.nz;
  s.names.resize(static_cast<size_t>(n));
  s.names[static_cast<size_t>(lay.vc)] = fmt::format("v_{}", leaf.coupling_bus);
  s.names[static_cast<size_t>(lay.p)] = fmt::format("p_{}_{}", leaf.coupling_bus, leaf.feeder_bus);
  s.names[static_cast<size_t>(lay.q)] = fmt::format("q_{}_{}", leaf.coupling_bus, leaf.feeder_bus);
  for (Index b = 0; b < nb; ++b) {
    s.names[static_cast<size_t>(lay.v[static_cast<size_t>(b)])] = fmt::format("v_{}", leaf.buses[static_cast<size_t>(b)]);
    s.names[static_cast<size_t>(lay.th[static_cast<size_t>(b)])] = fmt::format("theta_{}", leaf.buses[static_cast<size_t>(b)]);
  }
  for (Index j = 0; j < ng; ++j) {
    const int bus = grid.generators[static_cast<size_t>(lay.gens[static_cast<size_t>(j)])].bus;
    s.names[static_cast<size_t>(lay.pg[static_cast<size_t>(j)])] = fmt::format("pg_{}", bus);
    s.names[static_cast<size_t>(lay.qg[static_cast<size_t>(j)])] = fmt::format("qg_{}", bus);
  }

  s.lower = Vector::Constant(n, -kInf);
  s.upper = Vector::Constant(n, kInf);
  const auto& cbus = grid.buses[static_cast<size_t>(M->coupling_grid_bus)];
  if (fixed_voltage) {
    s.lower(lay.vc) = *fixed_voltage;
    s.upper(lay.vc) = *fixed_voltage;
  } else {
    s.lower(lay.vc) = cbus.v_min;
    s.upper(lay.vc) = cbus.v_max;
  }
  for (Index b = 0; b < nb; ++b) {
    const auto& bus = grid.buses[static_cast<size_t>(M->grid_bus[static_cast<size_t>(b)])];
    s.lower(lay.v[static_cast<size_t>(b)]) = bus.v_min;
    s.upper(lay.v[static_cast<size_t>(b)]) = bus.v_max;
  }
  for (Index j = 0; j < ng; ++j) {
    const auto& gen = grid.generators[static_cast<size_t>(lay.gens[static_cast<size_t>(j)])];
    s.lower(lay.pg[static_cast<size_t>(j)]) = gen.p_min;
    s.upper(lay.pg[static_cast<size_t>(j)]) = gen.p_max;
    double qmax = kInf;
    if (gen.s_max > 0.0) qmax = gen.s_max;
    if (gen.alpha > 0.0) qmax = std::min(qmax, std::max(std::abs(gen.p_min), std::abs(gen.p_max)) / gen.alpha);
    s.lower(lay.qg[static_cast<size_t>(j)]) = -qmax;
    s.upper(lay.qg[static_cast<size_t>(j)]) = qmax;
  }

  s.g = [M](const Vector& zy) { return ac_residual(*M, zy, nullptr); };
  s.g_jacobian = [M](const Vector& zy) {
    Matrix J;
    ac_residual(*M, zy, &J);
    return J;
  };
  s.h = [M](const Vector& zy) { return ac_inequalities(*M, zy); };

  s.sampled.push_back(lay.vc);
  for (Index j = 0; j < ng; ++j) {
    s.sampled.push_back(lay.pg[static_cast<size_t>(j)]);
    s.sampled.push_back(lay.qg[static_cast<size_t>(j)]);
  }
  s.partner.assign(static_cast<size_t>(lay.nz), -1);
  if (ng > 0) {
    s.partner[static_cast<size_t>(lay.p)] = lay.pg.back();
    s.partner[static_cast<size_t>(lay.q)] = lay.qg.back();
  }
  s.initial_guess = Vector::Zero(n);
  s.initial_guess(lay.vc) = fixed_voltage ? *fixed_voltage : 1.0;
  for (Index b = 0; b < nb; ++b) s.initial_guess(lay.v[static_cast<size_t>(b)]) = 1.0;
  s.convex = false;
  s.validate();
  return s;
}

std::function<double(const Vector&)> ac_leaf_cost(const GridModel& grid, const LeafCoupling& leaf,
                                                  const NlpConstraintSpec& spec) {
  const detail::AcLayout lay = detail::ac_layout(grid, leaf, spec.nz == 2);
  if (lay.dim != spec.dim()) throw DimensionMismatch("spec does not match the distribution grid");
  std::vector<std::pair<double, double>> cd;
  for (Index j : lay.gens) cd.emplace_back(grid.generators[static_cast<size_t>(j)].cost_c, grid.generators[static_cast<size_t>(j)].cost_d);
  return [cd, pg = lay.pg](const Vector& zy) {
    double f = 0.0;
    for (size_t j = 0; j < pg.size(); ++j) {
      const double p = zy(pg[j]);
      f += cd[j].first * p * p + cd[j].second * p;
    }
    return f;
  };
}

AcRegion ac_feasible_region(const GridModel& grid, const LeafCoupling& leaf, double voltage,
                            const AcSamplingConfig& config) {
  AcRegion R;
  R.voltage = voltage;
  auto spec = std::make_shared<NlpConstraintSpec>(ac_leaf_spec(grid, leaf, voltage));
  R.spec = spec;
  SamplingOptions opt;
  opt.threads = config.threads;
  R.decision = decision_variable_sampling(*spec, config.n_samples, config.seed, opt);
  const Vector up = (Vector(2) << 0.0, 1.0).finished();
  const Vector right = (Vector(2) << 1.0, 0.0).finished();
  R.grid_p = gridding_refinement(*spec, R.decision, 0, config.n_grid, {up, -up}, opt);
  R.grid_q = gridding_refinement(*spec, R.decision, 1, config.n_grid, {right, -right}, opt);
  R.all = R.decision;
  R.all.append(R.grid_p);
  R.all.append(R.grid_q);
  R.hull = hull_of_samples(R.all, spec->convex);
  R.worst_violation = certify_samples(*spec, R.all);
  log::info("ac region at v = {}: {} decision samples, {} + {} gridded, worst violation {:.2e}", voltage,
            R.decision.points.size(), R.grid_p.points.size(), R.grid_q.points.size(), R.worst_violation);
  return R;
}

std::vector<ValueGridPoint> ac_value_table(const GridModel& grid, const LeafCoupling& leaf, const AcRegion& region,
                                           Index n_per_axis, int threads) {
  if (n_per_axis < 2) throw InvalidArgument("value grid needs at least 2 points per axis");
  const NlpConstraintSpec& spec = *region.spec;
  const auto cost = ac_leaf_cost(grid, leaf, spec);
  Vector lo = Vector::Constant(2, kInf), hi = Vector::Constant(2, -kInf);
  for (const auto& p : region.all.points) {
    lo = lo.cwiseMin(p.z);
    hi = hi.cwiseMax(p.z);
  }
  std::vector<ValueGridPoint> out(static_cast<size_t>(n_per_axis * n_per_axis));
  SamplingOptions opt;
  parallel_for(n_per_axis * n_per_axis, threads, [&](Index k) {
    const Index i = k / n_per_axis, j = k % n_per_axis;
    Vector z(2);
    z(0) = lo(0) + (hi(0) - lo(0)) * static_cast<double>(i) / static_cast<double>(n_per_axis - 1);
    z(1) = lo(1) + (hi(1) - lo(1)) * static_cast<double>(j) / static_cast<double>(n_per_axis - 1);
    ValueGridPoint v;
    v.z = z;
    if (const auto r = nlp_minimize_at(spec, nearest_witnesses(region.all, z, 8), z, cost, opt)) v.value = r->objective;
    out[static_cast<size_t>(k)] = std::move(v);
  });
  return out;
}

}  // namespace treedp
