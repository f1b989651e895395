#include "commands.hpp"

#include "treedp/centering.hpp"
#include "treedp/dp.hpp"
#include "treedp/errors.hpp"
#include "treedp/io.hpp"
#include "treedp/ocp.hpp"
#include "treedp/opf.hpp"
#include "treedp/polyhedra.hpp"

#include <fmt/format.h>

#include <chrono>
#include <filesystem>
#include <iostream>

namespace treedp::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

json num(double x) { return io::number_json(x); }

void emit(const std::string& out, const json& j) {
  if (out.empty())
    std::cout << io::dump(j);
  else
    io::write_text_file(out, io::dump(j));
}

void write_json(const fs::path& dir, const std::string& name, const json& j) { io::write_text_file(dir / name, io::dump(j)); }

void write_csv(const fs::path& dir, const std::string& name, const io::CsvTable& t) {
  io::write_text_file(dir / name, io::to_csv(t));
}

json timing(std::initializer_list<std::pair<const char*, double>> entries) {
  json j;
  for (const auto& [k, v] : entries) j[k] = v;
  return j;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json artifact_json(const SubsystemArtifact& a) {
  json j;
  j["set"] = to_string(a.set.kind);
  j["certified_inner"] = a.set.certified_inner;
  j["polyhedron"] = io::to_json(a.set.polyhedron);
  if (a.set.ellipsoid) j["ellipsoid"] = io::to_json(*a.set.ellipsoid);
  if (a.set.box) j["box"] = io::to_json(*a.set.box);
  j["value"] = io::to_json(a.value);
  return j;
}

SetMode set_mode(const std::string& v) {
  if (v == "exact") return SetMode::Exact;
  if (v == "box") return SetMode::InnerBox;
  if (v == "ellipsoid") return SetMode::InnerEllipsoid;
  throw InvalidArgument("unknown variant '" + v + "'");
}

ValueMode value_mode(const std::string& v) {
  if (v == "zero") return ValueMode::Zero;
  if (v == "quadratic") return ValueMode::QuadraticFit;
  if (v == "pwl") return ValueMode::PiecewiseLinear;
  throw InvalidArgument("unknown value approximation '" + v + "'");
}

std::pair<TreeProblem, TreeTopology> load_tree(const std::string& path) {
  const json j = io::read_json_file(path);
  TreeProblem problem = io::problem_from_json(j);
  const int root = io::root_from_json(j);
  TreeTopology topo = verify_tree(problem, build_interaction_graph(problem), root);
  return {std::move(problem), std::move(topo)};
}

bool is_grid_file(const json& j) { return j.is_object() && j.contains("buses"); }

std::vector<Vector> regular_grid(const Vector& lo, const Vector& hi, Index n) {
  std::vector<Vector> out;
  const Index d = lo.size();
  Index total = 1;
  for (Index k = 0; k < d; ++k) total *= n;
  for (Index flat = 0; flat < total; ++flat) {
    Vector z(d);
    Index rest = flat;
    for (Index k = d - 1; k >= 0; --k) {
      const Index i = rest % n;
      rest /= n;
      z(k) = n == 1 ? 0.5 * (lo(k) + hi(k)) : lo(k) + (hi(k) - lo(k)) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    out.push_back(z);
  }
  return out;
}

io::CsvTable value_table(const std::vector<std::string>& names, const std::vector<ValueTableEntry>& entries) {
  io::CsvTable t;
  t.header = names;
  t.header.emplace_back("value");
  for (const auto& e : entries) {
    std::vector<std::string> r;
    for (Index k = 0; k < e.z.size(); ++k) r.push_back(io::format_number(e.z(k)));
    r.push_back(e.value ? io::format_number(*e.value) : "");
    t.rows.push_back(std::move(r));
  }
  return t;
}

io::CsvTable trajectory_table(const Trajectory& tr) {
  io::CsvTable t;
  t.header.emplace_back("t");
  for (Index k = 0; k < tr.z.cols(); ++k) t.header.push_back(fmt::format("z{}", k + 1));
  for (Index k = 0; k < tr.u.cols(); ++k) t.header.push_back(fmt::format("u{}", k + 1));
  for (Index s = 0; s < tr.z.rows(); ++s) {
    std::vector<std::string> r{std::to_string(s)};
    for (Index k = 0; k < tr.z.cols(); ++k) r.push_back(io::format_number(tr.z(s, k)));
    for (Index k = 0; k < tr.u.cols(); ++k) r.push_back(s < tr.u.rows() ? io::format_number(tr.u(s, k)) : "");
    t.rows.push_back(std::move(r));
  }
  return t;
}

json trajectory_json(const Trajectory& tr) {
  return {{"cost", num(tr.cost)}, {"dynamics_residual", num(tr.dynamics_residual)}};
}

json region_json(const AcRegion& r) {
  json j;
  j["voltage"] = num(r.voltage);
  j["decision_attempted"] = r.decision.attempted;
  j["decision_retained"] = static_cast<Index>(r.decision.points.size());
  j["gridded_p"] = static_cast<Index>(r.grid_p.points.size());
  j["gridded_q"] = static_cast<Index>(r.grid_q.points.size());
  j["failed_directions"] = r.grid_p.failed_directions + r.grid_q.failed_directions;
  j["worst_violation"] = num(r.worst_violation);
  j["hull_certified_inner"] = r.hull.certified_inner;
  return j;
}

std::vector<std::string> z_names(const NlpConstraintSpec& spec) {
  std::vector<std::string> out;
  for (Index k = 0; k < spec.nz; ++k)
    out.push_back(static_cast<size_t>(k) < spec.names.size() ? spec.names[static_cast<size_t>(k)] : fmt::format("z{}", k + 1));
  return out;
}

}  // namespace

int run_solve(const SolveOptions& o, const Common& c) {
  const auto [problem, topo] = load_tree(o.in);
  SweepConfig cfg;
  cfg.default_set = set_mode(o.variant);
  cfg.value_mode = value_mode(o.value);
  cfg.seed = c.seed;
  cfg.threads = c.threads;
  cfg.feasibility_tol = c.tol;
  const auto artifacts = backward_sweep(problem, topo, cfg);
  const auto fwd = forward_sweep(problem, topo, artifacts, cfg);

  const fs::path dir(o.out);
  json sol;
  sol["x"] = io::to_json(fwd.x);
  sol["total_cost"] = num(fwd.total_cost);
  json subs = json::object();
  for (const auto& [id, d] : fwd.subsystems)
    subs[std::to_string(id)] = {{"x", io::to_json(d.x)}, {"cost", num(d.cost)}, {"kkt_residual", num(d.kkt_residual)}};
  sol["subsystems"] = subs;
  write_json(dir, "solution.json", sol);

  json arts = json::object();
  for (const auto& [id, a] : artifacts.by_id) arts[std::to_string(id)] = artifact_json(a);
  write_json(dir, "artifacts.json", arts);

  json rep;
  rep["variant"] = o.variant;
  rep["value"] = o.value;
  rep["seed"] = c.seed;
  rep["total_cost"] = num(fwd.total_cost);
  rep["feasibility"] = io::to_json(fwd.audit);
  write_json(dir, "report.json", rep);
  write_json(dir, "timing.json", timing({{"backward_s", artifacts.runtime_s}, {"forward_s", fwd.runtime_s}}));
  fmt::print("total_cost {} feasible {}\n", io::format_number(fwd.total_cost), fwd.audit.feasible);
  return fwd.audit.feasible ? 0 : 1;
}

int run_project(const ProjectOptions& o, const Common& c) {
  const HPolyhedron P = io::polyhedron_from_json(io::read_json_file(o.in));
  std::vector<Index> keep;
  for (long k : o.keep) {
    if (k < 1 || k > P.dim) throw InvalidArgument(fmt::format("keep index {} outside 1..{}", k, P.dim));
    keep.push_back(static_cast<Index>(k));
  }
  PolyhedronTolerances tol;
  tol.membership = c.tol;
  const HPolyhedron Q = fourier_motzkin_project(P, VariableIndexSet::from_unsorted(keep), tol);
  if (is_empty(Q)) throw EmptyPolyhedron("projection is empty");
  emit(o.out, io::to_json(Q));
  return 0;
}

int run_center(const CenterOptions& o, const Common&) {
  const HPolyhedron P = io::polyhedron_from_json(io::read_json_file(o.in));
  json j;
  if (o.variant == "ellipsoid") {
    const auto fit = max_volume_inscribed_ellipsoid(P);
    j = io::to_json(fit.ellipsoid);
    j["certificate"] = num(fit.max_row_certificate);
  } else if (o.variant == "box") {
    const auto fit = inscribed_box(P);
    j = io::to_json(fit.box);
    j["certificate"] = num(fit.max_row_certificate);
  } else {
    j = io::to_json(chebyshev_center(P));
  }
  emit(o.out, j);
  return 0;
}

int run_sample(const SampleOptions& o, const Common& c) {
  const json in = io::read_json_file(o.in);
  const fs::path dir(o.out);
  const auto t0 = std::chrono::steady_clock::now();
  json rep;
  rep["seed"] = c.seed;
  if (o.model == "ac") {
    if (!is_grid_file(in)) throw InvalidArgument("model ac needs a grid file");
    const GridModel grid = io::grid_from_json(in);
    const auto leaves = analyze_partition(grid, io::partition_from_json(in, grid));
    if (leaves.empty()) throw InvalidArgument("partition has no distribution grid");
    AcSamplingConfig cfg;
    cfg.n_samples = static_cast<Index>(o.n);
    cfg.n_grid = static_cast<Index>(o.grid);
    cfg.seed = c.seed;
    cfg.threads = c.threads;
    const AcRegion r = ac_feasible_region(grid, leaves.front(), o.voltage, cfg);
    write_csv(dir, "samples.csv", io::samples_table(r.all, z_names(*r.spec)));
    json hull = io::to_json(r.hull.polyhedron);
    hull["certified_inner"] = r.hull.certified_inner;
    write_json(dir, "hull.json", hull);
    rep["model"] = "ac";
    rep["region"] = region_json(r);
  } else {
    const HPolyhedron P = io::polyhedron_from_json(in);
    ConvexSetSpec spec;
    spec.polyhedron = P;
    spec.nz = P.dim;
    SampleSet s = optimization_based_sampling(spec, default_cost_directions(P.dim));
    for (Index m = 0; m < P.dim && P.dim > 1; ++m) {
      std::vector<Vector> dirs;
      for (Index k = 0; k < P.dim; ++k) {
        if (k == m) continue;
        dirs.push_back(Vector::Unit(P.dim, k));
        dirs.push_back(-Vector::Unit(P.dim, k));
      }
      s.append(gridding_refinement(spec, s, m, static_cast<Index>(o.grid), dirs));
    }
    const SampleHull h = hull_of_samples(s, true);
    write_csv(dir, "samples.csv", io::samples_table(s));
    json hull = io::to_json(h.polyhedron);
    hull["certified_inner"] = h.certified_inner;
    write_json(dir, "hull.json", hull);
    rep["model"] = "polyhedron";
    rep["samples"] = static_cast<Index>(s.points.size());
    rep["failed_directions"] = s.failed_directions;
  }
  write_json(dir, "report.json", rep);
  write_json(dir, "timing.json", timing({{"sampling_s", seconds_since(t0)}}));
  return 0;
}

int run_ocp(const OcpOptions& o, const Common& c) {
  LtiOcpSpec spec = LtiOcpSpec::reference_instance();
  if (o.widen) spec = spec.widened(1e6);
  OcpDemoConfig cfg;
  cfg.variant = o.variant == "ellipsoid" ? OcpVariant::EllipsoidAtStage : OcpVariant::ExactAllStages;
  cfg.value_fn = o.value == "terminal" ? OcpValueFn::TerminalQuadratic : OcpValueFn::Zero;
  cfg.ellipsoid_stage = static_cast<Index>(o.ellipsoid_stage);
  cfg.threads = c.threads;
  const OcpReport r = run_ocp_demo(spec, cfg);

  const fs::path dir(o.out);
  for (const auto& [t, P] : r.stage_sets) write_json(dir / "stage_sets", fmt::format("stage_{}.json", t), io::to_json(P));
  if (r.ellipsoid) {
    json e = io::to_json(*r.ellipsoid);
    e["stage"] = cfg.ellipsoid_stage;
    e["certificate"] = num(r.ellipsoid_certificate);
    write_json(dir, "ellipsoid.json", e);
  }
  write_csv(dir, "trajectory_monolithic.csv", trajectory_table(r.monolithic));
  write_csv(dir, "trajectory_fpadp.csv", trajectory_table(r.fpadp));

  json rep;
  rep["variant"] = o.variant;
  rep["value"] = o.value;
  rep["widened"] = o.widen;
  rep["seed"] = c.seed;
  rep["feasible"] = r.audit.feasible && r.initial_state_admissible;
  rep["initial_state_admissible"] = r.initial_state_admissible;
  rep["monolithic"] = trajectory_json(r.monolithic);
  rep["fpadp"] = trajectory_json(r.fpadp);
  rep["cost_ratio"] = num(r.fpadp.cost / r.monolithic.cost);
  rep["terminal_violation"] = num(r.terminal_violation);
  rep["feasibility"] = io::to_json(r.audit);
  write_json(dir, "report.json", rep);
  write_json(dir, "timing.json",
             timing({{"backward_s", r.backward_runtime_s},
                     {"forward_s", r.forward_runtime_s},
                     {"monolithic_s", r.monolithic_runtime_s}}));
  fmt::print("fpadp cost {} monolithic cost {} feasible {}\n", io::format_number(r.fpadp.cost),
             io::format_number(r.monolithic.cost), rep["feasible"].get<bool>());
  return 0;
}

int run_opf(const OpfOptions& o, const Common& c) {
  const json in = io::read_json_file(o.in);
  const GridModel grid = io::grid_from_json(in);
  const PartitionSpec partition = io::partition_from_json(in, grid);
  OpfDemoConfig cfg;
  cfg.model = o.model == "ac" ? OpfModel::AC : OpfModel::DC;
  cfg.voltage = o.voltage;
  cfg.voltage_sweep = o.sweep;
  cfg.sampling.n_samples = static_cast<Index>(o.n);
  cfg.sampling.seed = c.seed;
  cfg.sampling.threads = c.threads;
  if (o.points > 0 && cfg.model == OpfModel::DC) cfg.n_value_grid = static_cast<Index>(o.points);
  if (o.points > 0 && cfg.model == OpfModel::AC) cfg.ac_value_grid = static_cast<Index>(o.points);
  const OpfReport r = run_opf_demo(grid, partition, cfg);

  const fs::path dir(o.out);
  json rep;
  rep["model"] = to_string(r.model);
  rep["seed"] = c.seed;
  if (r.model == OpfModel::DC) {
    json iv = io::to_json(*r.interval);
    iv["lower"] = num(r.fm_lower);
    iv["upper"] = num(r.fm_upper);
    write_json(dir, "interval.json", iv);
    write_csv(dir, "value_function.csv", value_table({"p"}, r.dc_values));
    rep["interval"] = {{"fourier_motzkin", {num(r.fm_lower), num(r.fm_upper)}},
                       {"lp", {num(r.lp_lower), num(r.lp_upper)}}};
    rep["monolithic_cost"] = num(r.monolithic_cost);
    if (r.dispatch) {
      rep["dispatch_cost"] = num(r.dispatch->total_cost);
      rep["feasibility"] = io::to_json(r.dispatch->audit);
    }
  } else {
    json regions = json::array();
    for (size_t k = 0; k < r.regions.size(); ++k) {
      const AcRegion& reg = r.regions[k];
      const std::string suffix = k == 0 ? "" : fmt::format("_v{}", io::format_number(reg.voltage));
      write_csv(dir, "region" + suffix + ".csv", io::samples_table(reg.all, z_names(*reg.spec)));
      json hull = io::to_json(reg.hull.polyhedron);
      hull["certified_inner"] = reg.hull.certified_inner;
      hull["voltage"] = num(reg.voltage);
      write_json(dir, "hull" + suffix + ".json", hull);
      regions.push_back(region_json(reg));
    }
    rep["regions"] = regions;
    std::vector<ValueTableEntry> entries;
    Index finite = 0;
    for (const auto& v : r.ac_values) {
      entries.push_back({v.z, v.value, 0.0});
      if (v.value) ++finite;
    }
    write_csv(dir, "value_function.csv", value_table({"p", "q"}, entries));
    rep["value_grid_points"] = static_cast<Index>(r.ac_values.size());
    rep["value_grid_solved"] = finite;
  }
  write_json(dir, "report.json", rep);
  write_json(dir, "timing.json", timing({{"total_s", r.runtime_s}}));
  return 0;
}

int run_value_fn(const ValueFnOptions& o, const Common& c) {
  const json in = io::read_json_file(o.in);
  TreeProblem problem;
  TreeTopology topo;
  std::vector<std::string> names;
  if (is_grid_file(in)) {
    const GridModel grid = io::grid_from_json(in);
    OpfTree tree = opf_to_tree(grid, io::partition_from_json(in, grid), OpfModel::DC);
    if (!tree.coupling_names.count(o.subsystem)) throw InvalidArgument(fmt::format("subsystem {} is not a distribution grid", o.subsystem));
    names = tree.coupling_names.at(o.subsystem);
    problem = std::move(tree.problem);
    topo = std::move(tree.topology);
  } else {
    std::tie(problem, topo) = load_tree(o.in);
  }
  if (o.subsystem == topo.root || !topo.coupling.count(o.subsystem))
    throw InvalidArgument(fmt::format("subsystem {} has no coupling set", o.subsystem));
  const Index dw = topo.coupling.at(o.subsystem).size();
  for (Index k = static_cast<Index>(names.size()); k < dw; ++k)
    names.push_back(fmt::format("x{}", topo.coupling.at(o.subsystem)[k]));

  SweepConfig cfg;
  cfg.threads = c.threads;
  const auto artifacts = backward_sweep(problem, topo, cfg);
  const auto box = bounding_box(artifacts.by_id.at(o.subsystem).set.polyhedron);
  const auto grid = regular_grid(box.lower, box.upper, static_cast<Index>(o.points));
  const auto entries = evaluate_value_function(problem, topo, o.subsystem, grid, c.threads);
  const std::string csv = io::to_csv(value_table(names, entries));
  if (o.out.empty())
    std::cout << csv;
  else
    io::write_text_file(o.out, csv);
  return 0;
}

}  // namespace treedp::cli
