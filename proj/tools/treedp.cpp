#include "commands.hpp"

#include "treedp/errors.hpp"
#include "treedp/log.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <functional>

namespace {

int fail(int code, const std::string& what) {
  fmt::print(stderr, "treedp: error: {}\n", what);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace treedp::cli;
  CLI::App app{"Feasibility-preserving approximate dynamic programming for tree-structured problems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "treedp 0.1.0");

  Common common;
  int verbose = 0;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Random seed")->capture_default_str();
    sub->add_option("--tol", common.tol, "Feasibility tolerance")->capture_default_str();
    sub->add_option("--threads", common.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_flag("-v,--verbose", verbose, "Increase log verbosity");
  };

  std::function<int()> action;

  SolveOptions so;
  auto* solve = app.add_subcommand("solve", "Solve a tree-structured QP by one backward and one forward sweep");
  solve->add_option("--in", so.in, "Problem file (JSON)")->required()->check(CLI::ExistingFile);
  solve->add_option("--out", so.out, "Output directory")->required();
  solve->add_option("--variant", so.variant, "Coupling sets")->check(CLI::IsMember({"exact", "box", "ellipsoid"}))->capture_default_str();
  solve->add_option("--value", so.value, "Value function approximation")
      ->check(CLI::IsMember({"zero", "quadratic", "pwl", "exact"}))
      ->capture_default_str();
  add_common(solve);
  solve->callback([&] { action = [&] { return run_solve(so, common); }; });

  ProjectOptions po;
  auto* project = app.add_subcommand("project", "Project a polyhedron onto a subset of its coordinates");
  project->add_option("--in", po.in, "Polyhedron file (JSON)")->required()->check(CLI::ExistingFile);
  project->add_option("--keep", po.keep, "Kept coordinates (1-based)")->required()->delimiter(',');
  project->add_option("--out", po.out, "Output file (stdout when omitted)");
  add_common(project);
  project->callback([&] { action = [&] { return run_project(po, common); }; });

  CenterOptions co;
  auto* center = app.add_subcommand("center", "Inscribe an ellipsoid, box or ball in a polyhedron");
  center->add_option("--in", co.in, "Polyhedron file (JSON)")->required()->check(CLI::ExistingFile);
  center->add_option("--variant", co.variant, "Shape")->check(CLI::IsMember({"ellipsoid", "box", "ball"}))->capture_default_str();
  center->add_option("--out", co.out, "Output file (stdout when omitted)");
  add_common(center);
  center->callback([&] { action = [&] { return run_center(co, common); }; });

  SampleOptions sa;
  auto* sample = app.add_subcommand("sample", "Sample a coupling region");
  sample->add_option("--in", sa.in, "Grid file (model ac) or polyhedron file (model polyhedron)")->required()->check(CLI::ExistingFile);
  sample->add_option("--out", sa.out, "Output directory")->required();
  sample->add_option("--model", sa.model, "Set kind")->check(CLI::IsMember({"ac", "polyhedron"}))->capture_default_str();
  sample->add_option("--voltage", sa.voltage, "Coupling-bus voltage (p.u.)")->capture_default_str();
  sample->add_option("--samples", sa.n, "Decision-variable samples")->capture_default_str()->check(CLI::PositiveNumber);
  sample->add_option("--grid", sa.grid, "Gridding points per component")->capture_default_str()->check(CLI::PositiveNumber);
  add_common(sample);
  sample->callback([&] { action = [&] { return run_sample(sa, common); }; });

  OcpOptions oo;
  auto* ocp = app.add_subcommand("ocp-demo", "Constrained LQ optimal control on a path graph");
  ocp->add_option("--variant", oo.variant, "Coupling sets")->check(CLI::IsMember({"exact", "ellipsoid"}))->capture_default_str();
  ocp->add_option("--value", oo.value, "Value function approximation")->check(CLI::IsMember({"zero", "terminal"}))->capture_default_str();
  ocp->add_option("--ellipsoid-stage", oo.ellipsoid_stage, "Stage using the inscribed ellipsoid")->capture_default_str();
  ocp->add_flag("--widen", oo.widen, "Replace all constraint sets by boxes of half-width 1e6");
  ocp->add_option("--out", oo.out, "Output directory")->capture_default_str();
  add_common(ocp);
  ocp->callback([&] { action = [&] { return run_ocp(oo, common); }; });

  OpfOptions fo;
  auto* opf = app.add_subcommand("opf-demo", "Coupling region and value function of a distribution grid");
  opf->add_option("--in", fo.in, "Grid file (JSON)")->required()->check(CLI::ExistingFile);
  opf->add_option("--model", fo.model, "Grid model")->check(CLI::IsMember({"ac", "dc"}))->capture_default_str();
  opf->add_option("--voltage", fo.voltage, "Coupling-bus voltage for the AC region (p.u.)")->capture_default_str();
  opf->add_option("--sweep", fo.sweep, "Additional voltages for the AC region")->delimiter(',');
  opf->add_option("--samples", fo.n, "Decision-variable samples (AC)")->capture_default_str()->check(CLI::PositiveNumber);
  opf->add_option("--points", fo.points, "Value-function grid points, per axis for AC (default 50 for DC, 15 for AC)")->check(CLI::NonNegativeNumber);
  opf->add_option("--out", fo.out, "Output directory")->required();
  add_common(opf);
  opf->callback([&] { action = [&] { return run_opf(fo, common); }; });

  ValueFnOptions vo;
  auto* vf = app.add_subcommand("value-fn", "Tabulate the value function of a subtree over its coupling set");
  vf->add_option("--in", vo.in, "Problem file (JSON)")->required()->check(CLI::ExistingFile);
  vf->add_option("--subsystem", vo.subsystem, "Subsystem id")->required();
  vf->add_option("--points", vo.points, "Grid points per coupling coordinate")->capture_default_str()->check(CLI::PositiveNumber);
  vf->add_option("--out", vo.out, "Output CSV (stdout when omitted)");
  add_common(vf);
  vf->callback([&] { action = [&] { return run_value_fn(vo, common); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    treedp::init_logging_from_env(verbose >= 2 ? "debug" : verbose == 1 ? "info" : "warn");
    return action();
  } catch (const treedp::InputError& e) {
    return fail(2, e.what());
  } catch (const treedp::DomainError& e) {
    return fail(1, e.what());
  } catch (const treedp::NumericalError& e) {
    return fail(1, e.what());
  } catch (const std::exception& e) {
    return fail(1, e.what());
  }
}
