#include "treedp/opf.hpp"

#include "detail_log.hpp"
#include "opf_detail.hpp"
#include "treedp/errors.hpp"
#include "treedp/polyhedra.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace treedp {

std::string to_string(OpfModel m) { return m == OpfModel::AC ? "AC" : "DC"; }

std::vector<LeafCoupling> analyze_partition(const GridModel& grid, const PartitionSpec& partition) {
  grid.validate();
  if (partition.bus_sets.size() < 2) throw InvalidArgument("partition needs an upper level and at least one lower level");
  std::map<int, size_t> owner;
  for (size_t k = 0; k < partition.bus_sets.size(); ++k) {
    if (partition.bus_sets[k].empty()) throw InvalidArgument(fmt::format("bus set {} is empty", k + 1));
    for (int b : partition.bus_sets[k]) {
      grid.bus_index(b);
      if (!owner.emplace(b, k).second) throw InvalidArgument(fmt::format("bus {} appears in two partitions", b));
    }
  }
  if (owner.size() != grid.buses.size()) throw InvalidArgument("partition does not cover every bus");

  std::vector<LeafCoupling> leaves(partition.bus_sets.size() - 1);
  for (size_t k = 1; k < partition.bus_sets.size(); ++k) {
    leaves[k - 1].subsystem = static_cast<int>(k + 1);
    leaves[k - 1].buses = partition.bus_sets[k];
  }
  std::vector<int> n_coupling(leaves.size(), 0);
  for (size_t j = 0; j < grid.branches.size(); ++j) {
    const auto& br = grid.branches[j];
    const size_t a = owner.at(br.from), b = owner.at(br.to);
    if (a == b) {
      if (a > 0) leaves[a - 1].internal_branches.push_back(static_cast<Index>(j));
      continue;
    }
    if (a != 0 && b != 0)
      throw InvalidArgument(fmt::format("branch {}-{} connects two lower-level grids", br.from, br.to));
    LeafCoupling& L = leaves[(a == 0 ? b : a) - 1];
    if (++n_coupling[(a == 0 ? b : a) - 1] > 1)
      throw MultipleInterconnections(fmt::format("lower-level grid {} has more than one coupling branch", L.subsystem));
    L.branch = static_cast<Index>(j);
    L.coupling_bus = a == 0 ? br.from : br.to;
    L.feeder_bus = a == 0 ? br.to : br.from;
  }
  for (size_t k = 0; k < leaves.size(); ++k)
    if (n_coupling[k] == 0)
      throw InvalidArgument(fmt::format("lower-level grid {} is not connected to the upper level", leaves[k].subsystem));
  return leaves;
}

namespace {

struct VarTable {
  std::vector<std::string> names;
  std::map<std::string, Index> index;  // 1-based

  Index add(const std::string& name) {
    names.push_back(name);
    const Index id = static_cast<Index>(names.size());
    if (!index.emplace(name, id).second) throw InvalidArgument(fmt::format("duplicate variable {}", name));
    return id;
  }
  Index at(const std::string& name) const { return index.at(name); }
};

struct Row {
  std::vector<std::pair<Index, double>> terms;  // global 1-based
  double rhs = 0.0;
};

struct SubsystemBuilder {
  std::vector<Index> vars;
  std::vector<Row> eq;
  std::vector<Row> in;
  std::vector<std::pair<Index, std::pair<double, double>>> quad;  // global index -> (c, d)

  Subsystem build(int id) const {
    Subsystem s;
    s.id = id;
    s.indices = VariableIndexSet::from_unsorted(vars);
    const Index n = s.size();
    const auto pos = [&](Index g) { return s.indices.position(g); };
    HPolyhedron P(n);
    for (const Row& r : eq) {
      Vector a = Vector::Zero(n);
      for (const auto& [g, c] : r.terms) a(pos(g)) += c;
      P.add_equality(a, r.rhs);
    }
    for (const Row& r : in) {
      Vector a = Vector::Zero(n);
      for (const auto& [g, c] : r.terms) a(pos(g)) += c;
      P.add_inequality(a, r.rhs);
    }
    s.objective = QuadraticObjective::zero(n);
    for (const auto& [g, cd] : quad) {
      s.objective.Q(pos(g), pos(g)) += 2.0 * cd.first;
      s.objective.q(pos(g)) += cd.second;
    }
    s.constraints = P;
    return s;
  }
};

std::string gen_name(const GridModel& grid, Index j, const char* prefix) {
  const int bus = grid.generators[static_cast<size_t>(j)].bus;
  const auto at = grid.generators_at(bus);
  if (at.size() == 1) return fmt::format("{}_{}", prefix, bus);
  return fmt::format("{}_{}_{}", prefix, bus, std::find(at.begin(), at.end(), j) - at.begin() + 1);
}

std::string flow_name(const char* prefix, int a, int b) { return fmt::format("{}_{}_{}", prefix, a, b); }

void add_bounds(SubsystemBuilder& S, Index g, double lo, double hi) {
  if (std::isfinite(hi)) S.in.push_back({{{g, 1.0}}, hi});
  if (std::isfinite(lo)) S.in.push_back({{{g, -1.0}}, -lo});
}

void add_generators(const GridModel& grid, VarTable& V, SubsystemBuilder& S, const std::vector<int>& buses, bool reactive) {
  for (int b : buses)
    for (Index j : grid.generators_at(b)) {
      const auto& gen = grid.generators[static_cast<size_t>(j)];
      const Index pg = V.add(gen_name(grid, j, "pg"));
      S.vars.push_back(pg);
      add_bounds(S, pg, gen.p_min, gen.p_max);
      S.quad.push_back({pg, {gen.cost_c, gen.cost_d}});
      if (!reactive) continue;
      const Index qg = V.add(gen_name(grid, j, "qg"));
      S.vars.push_back(qg);
      if (gen.s_max > 0.0) throw Unsupported(fmt::format("apparent-power cap of the upper-level generator at bus {}", b));
      if (gen.alpha > 0.0) {
        S.in.push_back({{{pg, -1.0}, {qg, -gen.alpha}}, 0.0});
        S.in.push_back({{{pg, -1.0}, {qg, gen.alpha}}, 0.0});
      }
    }
}

// Generation terms of the balance row at one bus.
void add_generation(const GridModel& grid, const VarTable& V, Row& r, int bus, const char* prefix) {
  for (Index j : grid.generators_at(bus)) r.terms.push_back({V.at(gen_name(grid, j, prefix)), 1.0});
}

OpfTree dc_tree(const GridModel& grid, const PartitionSpec& part, const std::vector<LeafCoupling>& leaves) {
  OpfTree T;
  VarTable V;
  SubsystemBuilder root;
  const auto& rb = part.bus_sets[0];
  const std::set<int> root_set(rb.begin(), rb.end());
  std::vector<Index> root_branches;
  for (size_t j = 0; j < grid.branches.size(); ++j)
    if (root_set.count(grid.branches[j].from) && root_set.count(grid.branches[j].to)) root_branches.push_back(static_cast<Index>(j));

  const auto flow_def = [&](SubsystemBuilder& S, Index f, Index ta, Index tb, const Branch& br) {
    S.eq.push_back({{{f, 1.0}, {ta, br.b}, {tb, -br.b}}, 0.0});  // f = -b (ta - tb)
    if (br.s_max > 0.0) add_bounds(S, f, -br.s_max, br.s_max);
  };

  for (int b : rb) root.vars.push_back(V.add(fmt::format("theta_{}", b)));
  add_generators(grid, V, root, rb, false);
  for (Index j : root_branches) {
    const auto& br = grid.branches[static_cast<size_t>(j)];
    const Index f = V.add(flow_name("p", br.from, br.to));
    root.vars.push_back(f);
    flow_def(root, f, V.at(fmt::format("theta_{}", br.from)), V.at(fmt::format("theta_{}", br.to)), br);
  }
  for (const auto& L : leaves) {
    const Index f = V.add(flow_name("p", L.coupling_bus, L.feeder_bus));
    root.vars.push_back(f);
    T.coupling[L.subsystem] = VariableIndexSet{f};
    T.coupling_names[L.subsystem] = {flow_name("p", L.coupling_bus, L.feeder_bus)};
  }
  if (root_set.count(grid.reference_bus)) root.eq.push_back({{{V.at(fmt::format("theta_{}", grid.reference_bus)), 1.0}}, 0.0});
  for (int b : rb) {
    Row r;
    add_generation(grid, V, r, b, "pg");
    r.rhs = grid.buses[static_cast<size_t>(grid.bus_index(b))].demand_p;
    for (Index j : root_branches) {
      const auto& br = grid.branches[static_cast<size_t>(j)];
      const Index f = V.at(flow_name("p", br.from, br.to));
      if (br.from == b) r.terms.push_back({f, -1.0});
      if (br.to == b) r.terms.push_back({f, 1.0});
    }
    for (const auto& L : leaves)
      if (L.coupling_bus == b) r.terms.push_back({V.at(flow_name("p", L.coupling_bus, L.feeder_bus)), -1.0});
    root.eq.push_back(r);
  }
  T.problem.subsystems.push_back(root.build(1));

  for (const auto& L : leaves) {
    SubsystemBuilder S;
    const Index fc = V.at(flow_name("p", L.coupling_bus, L.feeder_bus));
    S.vars.push_back(fc);
    const Index tc = V.add(fmt::format("theta_{}@{}", L.coupling_bus, L.subsystem));
    S.vars.push_back(tc);
    S.eq.push_back({{{tc, 1.0}}, 0.0});
    for (int b : L.buses) S.vars.push_back(V.add(fmt::format("theta_{}", b)));
    add_generators(grid, V, S, L.buses, false);
    const auto theta = [&](int b) { return b == L.coupling_bus ? tc : V.at(fmt::format("theta_{}", b)); };
    {
      const auto& br = grid.branches[static_cast<size_t>(L.branch)];
      flow_def(S, fc, tc, theta(L.feeder_bus), br);
    }
    for (Index j : L.internal_branches) {
      const auto& br = grid.branches[static_cast<size_t>(j)];
      const Index f = V.add(flow_name("p", br.from, br.to));
      S.vars.push_back(f);
      flow_def(S, f, theta(br.from), theta(br.to), br);
    }
    for (int b : L.buses) {
      Row r;
      add_generation(grid, V, r, b, "pg");
      r.rhs = grid.buses[static_cast<size_t>(grid.bus_index(b))].demand_p;
      for (Index j : L.internal_branches) {
        const auto& br = grid.branches[static_cast<size_t>(j)];
        const Index f = V.at(flow_name("p", br.from, br.to));
        if (br.from == b) r.terms.push_back({f, -1.0});
        if (br.to == b) r.terms.push_back({f, 1.0});
      }
      if (b == L.feeder_bus) r.terms.push_back({fc, 1.0});
      S.eq.push_back(r);
    }
    T.problem.subsystems.push_back(S.build(L.subsystem));
  }
  T.names = V.names;
  T.problem.n_x = static_cast<Index>(V.names.size());
  return T;
}

OpfTree ac_tree(const GridModel& grid, const PartitionSpec& part, const std::vector<LeafCoupling>& leaves,
                std::optional<double> fixed_voltage) {
  OpfTree T;
  VarTable V;
  SubsystemBuilder root;
  const auto& rb = part.bus_sets[0];
  const std::set<int> root_set(rb.begin(), rb.end());
  for (const auto& br : grid.branches)
    if (root_set.count(br.from) && root_set.count(br.to))
      throw Unsupported("AC trees need an upper level without internal branches");
  std::set<int> used;
  for (const auto& L : leaves)
    if (!used.insert(L.coupling_bus).second)
      throw Unsupported(fmt::format("two lower-level grids share coupling bus {} in the AC model", L.coupling_bus));

  add_generators(grid, V, root, rb, true);
  for (const auto& L : leaves) {
    std::vector<std::string> nm;
    std::vector<Index> w;
    if (!fixed_voltage) nm.push_back(fmt::format("v_{}", L.coupling_bus));
    nm.push_back(flow_name("p", L.coupling_bus, L.feeder_bus));
    nm.push_back(flow_name("q", L.coupling_bus, L.feeder_bus));
    for (const auto& s : nm) {
      w.push_back(V.add(s));
      root.vars.push_back(w.back());
    }
    T.coupling[L.subsystem] = VariableIndexSet(w);
    T.coupling_names[L.subsystem] = nm;
    if (!fixed_voltage) {
      const auto& bus = grid.buses[static_cast<size_t>(grid.bus_index(L.coupling_bus))];
      add_bounds(root, w[0], bus.v_min, bus.v_max);
      if (L.coupling_bus == grid.reference_bus) root.eq.push_back({{{w[0], 1.0}}, 1.0});
    }
  }
  for (int b : rb) {
    const auto& bus = grid.buses[static_cast<size_t>(grid.bus_index(b))];
    Row rp, rq;
    add_generation(grid, V, rp, b, "pg");
    add_generation(grid, V, rq, b, "qg");
    rp.rhs = bus.demand_p;
    rq.rhs = bus.demand_q;
    for (const auto& L : leaves)
      if (L.coupling_bus == b) {
        rp.terms.push_back({V.at(flow_name("p", L.coupling_bus, L.feeder_bus)), -1.0});
        rq.terms.push_back({V.at(flow_name("q", L.coupling_bus, L.feeder_bus)), -1.0});
      }
    root.eq.push_back(rp);
    root.eq.push_back(rq);
  }
  T.problem.subsystems.push_back(root.build(1));

  for (const auto& L : leaves) {
    auto spec = std::make_shared<NlpConstraintSpec>(ac_leaf_spec(grid, L, fixed_voltage));
    const Index nz = spec->nz;
    std::vector<Index> vars(T.coupling[L.subsystem].indices().begin(), T.coupling[L.subsystem].indices().end());
    for (Index k = nz; k < spec->dim(); ++k)
      vars.push_back(V.add(fmt::format("{}@{}", spec->names[static_cast<size_t>(k)], L.subsystem)));
    Subsystem s;
    s.id = L.subsystem;
    s.indices = VariableIndexSet(vars);
    s.objective = QuadraticObjective::zero(s.size());
    const detail::AcLayout lay = detail::ac_layout(grid, L, fixed_voltage.has_value());
    for (size_t j = 0; j < lay.gens.size(); ++j) {
      const auto& gen = grid.generators[static_cast<size_t>(lay.gens[j])];
      s.objective.Q(lay.pg[j], lay.pg[j]) = 2.0 * gen.cost_c;
      s.objective.q(lay.pg[j]) = gen.cost_d;
    }
    Positions zpos;
    for (Index k = 0; k < nz; ++k) zpos.push_back(k);
    s.constraints = NlpRef{spec->name, spec, zpos};
    T.problem.subsystems.push_back(std::move(s));
  }
  T.names = V.names;
  T.problem.n_x = static_cast<Index>(V.names.size());
  return T;
}

}  // namespace

OpfTree opf_to_tree(const GridModel& grid, const PartitionSpec& partition, OpfModel model,
                    std::optional<double> fixed_voltage) {
  const auto leaves = analyze_partition(grid, partition);
  OpfTree T = model == OpfModel::DC ? dc_tree(grid, partition, leaves) : ac_tree(grid, partition, leaves, fixed_voltage);
  T.leaves = leaves;
  T.problem.validate();
  T.topology = verify_tree(T.problem, build_interaction_graph(T.problem), 1);
  return T;
}

HPolyhedron dc_opf_polyhedron(const GridModel& grid, const PartitionSpec& partition, int subsystem) {
  return opf_to_tree(grid, partition, OpfModel::DC).problem.subsystem(subsystem).polyhedron();
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void run_dc(const GridModel& grid, const PartitionSpec& partition, const OpfDemoConfig& cfg, OpfReport& rep) {
  const OpfTree T = opf_to_tree(grid, partition, OpfModel::DC);
  const int leaf = T.leaves.front().subsystem;

  SweepConfig sc;
  const BackwardArtifacts arts = backward_sweep(T.problem, T.topology, sc);
  const HPolyhedron& interval = arts.by_id.at(leaf).set.polyhedron;
  rep.interval = interval;
  const BoundingBox bb = bounding_box(interval);
  rep.fm_lower = bb.lower(0);
  rep.fm_upper = bb.upper(0);

  const Subsystem& s = T.problem.subsystem(leaf);
  const Index pos = s.indices.position(T.coupling.at(leaf)[0]);
  for (double sign : {1.0, -1.0}) {
    Vector c = Vector::Zero(s.size());
    c(pos) = sign;
    const Solution sol = solve_lp({c, s.polyhedron()});
    if (!sol.optimal()) throw InfeasibleSet(fmt::format("boundary LP of subsystem {}: {}", leaf, to_string(sol.status)));
    (sign > 0 ? rep.lp_lower : rep.lp_upper) = sol.x(pos);
  }

  std::vector<Vector> grid_pts;
  const Index n = std::max<Index>(cfg.n_value_grid, 2);
  for (Index k = 0; k < n; ++k)
    grid_pts.push_back(Vector::Constant(1, rep.fm_lower + (rep.fm_upper - rep.fm_lower) * static_cast<double>(k) / static_cast<double>(n - 1)));
  rep.dc_values = evaluate_value_function(T.problem, T.topology, leaf, grid_pts, cfg.sampling.threads);

  SweepConfig vc;
  vc.value_mode = ValueMode::PiecewiseLinear;
  vc.fit_samples = 25;
  vc.seed = cfg.sampling.seed;
  const BackwardArtifacts va = backward_sweep(T.problem, T.topology, vc);
  rep.dispatch = forward_sweep(T.problem, T.topology, va, vc);

  const MonolithicProblem M = assemble_monolithic(T.problem);
  const Solution mono = solve_qp(M.qp);
  if (!mono.optimal()) throw InfeasibleSet("monolithic DC problem is infeasible");
  rep.monolithic_cost = mono.objective + M.constant;
}

}  // namespace

OpfReport run_opf_demo(const GridModel& grid, const PartitionSpec& partition, const OpfDemoConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  OpfReport rep;
  rep.model = cfg.model;
  if (cfg.model == OpfModel::DC) {
    run_dc(grid, partition, cfg, rep);
  } else {
    const auto leaves = analyze_partition(grid, partition);
    const LeafCoupling& leaf = leaves.front();
    rep.regions.push_back(ac_feasible_region(grid, leaf, cfg.voltage, cfg.sampling));
    for (double v : cfg.voltage_sweep)
      if (v != cfg.voltage) rep.regions.push_back(ac_feasible_region(grid, leaf, v, cfg.sampling));
    if (cfg.ac_value_grid > 0)
      rep.ac_values = ac_value_table(grid, leaf, rep.regions.front(), cfg.ac_value_grid, cfg.sampling.threads);
  }
  rep.runtime_s = seconds_since(t0);
  return rep;
}

GridModel feeder18() {
  GridModel g;
  const std::vector<std::pair<double, double>> loads = {
      {0.05, 0.02}, {0.08, 0.03}, {0.10, 0.04}, {0.06, 0.02}, {0.09, 0.03}, {0.05, 0.02},
      {0.12, 0.05}, {0.07, 0.03}, {0.08, 0.03}, {0.06, 0.02}, {0.09, 0.04}, {0.07, 0.02},
      {0.08, 0.03}, {0.06, 0.02}, {0.05, 0.02}, {0.04, 0.01}, {0.0, 0.0}};
  for (int k = 1; k <= 17; ++k) g.buses.push_back({k, loads[static_cast<size_t>(k - 1)].first, loads[static_cast<size_t>(k - 1)].second, 0.95, 1.05});
  g.buses.push_back({18, 0.0, 0.0, 0.95, 1.05});
  g.branches.push_back(branch_from_impedance(18, 17, 0.002, 0.02, 2.0));
  for (auto [a, b] : std::vector<std::pair<int, int>>{{17, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}})
    g.branches.push_back(branch_from_impedance(a, b, 0.006, 0.010, 1.5));
  for (auto [a, b] : std::vector<std::pair<int, int>>{
           {3, 7}, {7, 8}, {4, 9}, {9, 10}, {1, 11}, {11, 12}, {12, 13}, {13, 14}, {14, 15}, {15, 16}})
    g.branches.push_back(branch_from_impedance(a, b, 0.008, 0.010, 1.2));
  g.generators.push_back({6, 0.0, 1.0, 1.1, 0.48, 0.5, 0.2});
  g.generators.push_back({16, 0.0, 1.0, 1.1, 0.48, 0.5, 0.2});
  g.generators.push_back({18, -3.0, 3.0, 0.0, 0.0, 1.0, 2.0});
  g.reference_bus = 18;
  return g;
}

PartitionSpec feeder18_partition() {
  PartitionSpec p;
  p.bus_sets.push_back({18});
  std::vector<int> feeder;
  for (int k = 1; k <= 17; ++k) feeder.push_back(k);
  p.bus_sets.push_back(feeder);
  return p;
}

}  // namespace treedp
