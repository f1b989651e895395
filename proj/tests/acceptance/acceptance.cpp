#include "random_instances.hpp"

#include "treedp/centering.hpp"
#include "treedp/dp.hpp"
#include "treedp/errors.hpp"
#include "treedp/io.hpp"
#include "treedp/ocp.hpp"
#include "treedp/opf.hpp"
#include "treedp/polyhedra.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

using namespace treedp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double monolithic_cost(const TreeProblem& p) {
  const auto mono = assemble_monolithic(p);
  const auto sol = solve_qp(mono.qp);
  if (!sol.optimal()) throw NumericalFailure("monolithic QP not optimal");
  return sol.objective + mono.constant;
}

Outcome ocp_feasibility() {
  const auto spec = LtiOcpSpec::reference_instance();
  std::string detail;
  bool pass = true;
  for (auto variant : {OcpVariant::ExactAllStages, OcpVariant::EllipsoidAtStage}) {
    OcpDemoConfig cfg;
    cfg.variant = variant;
    const auto t0 = Clock::now();
    const auto r = run_ocp_demo(spec, cfg);
    const double t = seconds_since(t0);
    const double umax = r.fpadp.u.cwiseAbs().maxCoeff();
    const double zT = r.fpadp.z.row(spec.T).cwiseAbs().maxCoeff();
    const bool ok = r.fpadp.dynamics_residual <= 1e-8 && umax <= 1.0 + 1e-9 && zT <= 0.19 + 1e-8 &&
                    r.fpadp.cost >= r.monolithic.cost - 1e-6 && t < 1.0;
    pass = pass && ok;
    detail += fmt::format("{}: residual {:.1e} |u| {:.4f} |z3| {:.4f} cost {:.6f} >= {:.6f} in {:.3f}s; ",
                          variant == OcpVariant::ExactAllStages ? "exact" : "ellipsoid", r.fpadp.dynamics_residual,
                          umax, zT, r.fpadp.cost, r.monolithic.cost, t);
  }
  return {pass, detail};
}

Outcome classic_equivalence() {
  std::mt19937_64 rng(2024);
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const auto spec = testkit::random_unconstrained_lq(rng, 3, 8);
    const auto [problem, topo] = ocp_to_tree(spec);
    const auto dp = classic_dp(problem, topo);
    const double mono = monolithic_cost(problem);
    worst = std::max(worst, std::abs(dp.forward.total_cost - mono) / std::max(1.0, std::abs(mono)));
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-6 && t < 5.0, fmt::format("50 instances, worst relative gap {:.2e} in {:.2f}s", worst, t)};
}

Outcome projection_oracle() {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<Index> dim(2, 6);
  const auto t0 = Clock::now();
  long disagreements = 0;
  long points = 0;
  for (int k = 0; k < 30; ++k) {
    const Index n = dim(rng);
    const Index extra = std::min<Index>(20 - 2 * n, 8);
    const auto P = testkit::random_polytope(rng, n, extra);
    std::uniform_int_distribution<Index> nkeep(1, n - 1);
    std::vector<Index> all(static_cast<size_t>(n));
    for (Index i = 0; i < n; ++i) all[static_cast<size_t>(i)] = i + 1;
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(static_cast<size_t>(nkeep(rng)));
    const auto keep = VariableIndexSet::from_unsorted(all);
    const auto Q = fourier_motzkin_project(P, keep);
    for (int s = 0; s < 1000; ++s) {
      const Vector z = testkit::uniform_vector(rng, keep.size(), -3.5, 3.5);
      const bool fm = Q.contains(z, 1e-8);
      const bool lp = membership_oracle_project(P, keep, z, 1e-8);
      if (fm != lp) ++disagreements;
      ++points;
    }
  }
  const double t = seconds_since(t0);
  return {disagreements == 0 && t < 10.0,
          fmt::format("30 polyhedra, {} points, {} disagreements in {:.2f}s", points, disagreements, t)};
}

Outcome inscribed_ellipsoid() {
  const auto square = HPolyhedron::box(Vector::Constant(2, -1.0), Vector::Constant(2, 1.0));
  const auto fit = max_volume_inscribed_ellipsoid(square);
  const double err = std::max((fit.ellipsoid.A - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(),
                              fit.ellipsoid.c.cwiseAbs().maxCoeff());
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<Index> dim(2, 4);
  double worst_cert = -1e300;
  long outside = 0;
  for (int k = 0; k < 20; ++k) {
    const auto P = testkit::random_polytope(rng, dim(rng), 6);
    const auto f = max_volume_inscribed_ellipsoid(P);
    worst_cert = std::max(worst_cert, ellipsoid_row_certificate(f.ellipsoid, P));
    for (const auto& x : ellipsoid_boundary(f.ellipsoid, 10000))
      if (!P.contains(x, 1e-7)) ++outside;
  }
  return {err <= 1e-6 && worst_cert <= 1e-7 && outside == 0,
          fmt::format("square error {:.1e}; 20 polytopes, worst row certificate {:.1e}, {} boundary points outside", err,
                      worst_cert, outside)};
}

Outcome fpadp_feasibility() {
  const auto t0 = Clock::now();
  std::string detail;
  bool pass = true;
  for (auto mode : {SetMode::Exact, SetMode::InnerBox, SetMode::InnerEllipsoid}) {
    std::mt19937_64 rng(1000 + static_cast<int>(mode));
    int succeeded = 0;
    int failures = 0;
    for (int k = 0; k < 100; ++k) {
      const auto inst = testkit::random_tree_qp(rng);
      SweepConfig cfg;
      cfg.default_set = mode;
      cfg.value_mode = k % 2 == 0 ? ValueMode::Zero : ValueMode::QuadraticFit;
      cfg.seed = static_cast<std::uint64_t>(k);
      BackwardArtifacts art;
      try {
        art = backward_sweep(inst.problem, inst.topology, cfg);
      } catch (const Error&) {
        continue;
      }
      ++succeeded;
      try {
        const auto fwd = forward_sweep(inst.problem, inst.topology, art, cfg);
        if (!check_feasibility(inst.problem, fwd.x, 1e-6).feasible) ++failures;
      } catch (const Error&) {
        ++failures;
      }
    }
    pass = pass && failures == 0 && succeeded >= 80;
    detail += fmt::format("{}: {}/100 swept, {} infeasible; ", to_string(mode), succeeded, failures);
  }
  const double t = seconds_since(t0);
  pass = pass && t < 30.0;
  return {pass, detail + fmt::format("{:.2f}s", t)};
}

GridModel shipped_grid(PartitionSpec& partition) {
  const auto j = io::read_json_file(fs::path(TREEDP_DATA_DIR) / "feeder18.json");
  GridModel g = io::grid_from_json(j);
  partition = io::partition_from_json(j, g);
  return g;
}

Outcome dc_projection() {
  PartitionSpec partition;
  const GridModel grid = shipped_grid(partition);
  OpfDemoConfig cfg;
  cfg.model = OpfModel::DC;
  cfg.n_value_grid = 50;
  const auto r = run_opf_demo(grid, partition, cfg);
  const double gap = std::max(std::abs(r.fm_lower - r.lp_lower), std::abs(r.fm_upper - r.lp_upper));
  std::vector<double> v;
  bool complete = r.dc_values.size() == 50;
  for (const auto& e : r.dc_values) {
    if (!e.value) complete = false;
    v.push_back(e.value.value_or(0.0));
  }
  double worst = -1e300;
  for (size_t a = 0; a < v.size(); ++a)
    for (size_t b = a + 2; b < v.size(); b += 2) worst = std::max(worst, v[(a + b) / 2] - 0.5 * (v[a] + v[b]));
  return {gap <= 1e-6 && complete && worst <= 1e-7,
          fmt::format("interval [{:.6f}, {:.6f}], LP gap {:.1e}, midpoint excess {:.1e} (reference interval [-0.76, 1.04])",
                      r.fm_lower, r.fm_upper, gap, worst)};
}

Outcome ac_certification() {
  PartitionSpec partition;
  const GridModel grid = shipped_grid(partition);
  const auto leaves = analyze_partition(grid, partition);
  const auto t0 = Clock::now();
  const auto region = ac_feasible_region(grid, leaves.front(), 1.0, {});
  const double t = seconds_since(t0);
  const auto& spec = *region.spec;
  long bad = 0;
  for (const auto& p : region.all.points)
    if (spec.equality_residual(p.witness) > 1e-8 || spec.inequality_violation(p.witness) > 1e-8) ++bad;
  const Index retained = static_cast<Index>(region.decision.points.size());
  std::map<double, std::pair<bool, bool>> slices;
  for (const auto& p : region.grid_p.points) {
    auto& s = slices[p.fixed_value];
    (p.direction < 0 ? s.first : s.second) = true;
  }
  long complete = 0;
  for (const auto& [v, s] : slices)
    if (s.first && s.second) ++complete;
  return {retained >= 200 && bad == 0 && complete == 19 && t < 60.0,
          fmt::format("{} retained of {}, {} samples over 1e-8, {}/19 slices with min and max q, {:.2f}s", retained,
                      region.decision.attempted, bad, complete, t)};
}

std::string slurp(const fs::path& p) { return io::read_text_file(p); }

bool run_cli(const std::string& args) {
  const std::string cmd = fmt::format("\"{}\" {} > /dev/null 2>&1", TREEDP_CLI, args);
  return std::system(cmd.c_str()) == 0;
}

Outcome determinism() {
  const fs::path base = fs::temp_directory_path() / fmt::format("treedp_acceptance_{}", ::getpid());
  const std::string grid = (fs::path(TREEDP_DATA_DIR) / "feeder18.json").string();
  const std::vector<std::string> runs = {"ocp-demo --variant exact", "ocp-demo --variant ellipsoid",
                                         "opf-demo --model dc --in " + grid, "opf-demo --model ac --in " + grid};
  long files = 0;
  long differing = 0;
  bool ran = true;
  for (size_t k = 0; k < runs.size(); ++k) {
    const fs::path a = base / fmt::format("run{}a", k);
    const fs::path b = base / fmt::format("run{}b", k);
    ran = ran && run_cli(fmt::format("{} --seed 42 --out {}", runs[k], a.string()));
    ran = ran && run_cli(fmt::format("{} --seed 42 --out {}", runs[k], b.string()));
    if (!ran) break;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
      if (!e.is_regular_file() || e.path().filename() == "timing.json") continue;
      const fs::path other = b / fs::relative(e.path(), a);
      ++files;
      if (!fs::exists(other) || slurp(e.path()) != slurp(other)) ++differing;
    }
  }
  fs::remove_all(base);
  return {ran && files > 0 && differing == 0,
          fmt::format("{} output files compared across repeated runs, {} differ{}", files, differing,
                      ran ? "" : ", a CLI run failed")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"OCP demo feasibility", ocp_feasibility},
      {"classic DP equals monolithic QP", classic_equivalence},
      {"projection agrees with membership oracle", projection_oracle},
      {"inscribed ellipsoid", inscribed_ellipsoid},
      {"randomized FP-ADP feasibility", fpadp_feasibility},
      {"DC OPF projection", dc_projection},
      {"AC sampling certification", ac_certification},
      {"determinism", determinism},
  };
  int failed = 0;
  for (size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    fmt::print("criterion {} {}: {} ({})\n", k + 1, criteria[k].first, o.pass ? "PASS" : "FAIL", o.detail);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
