#pragma once

#include "treedp/dp.hpp"
#include "treedp/grid.hpp"
#include "treedp/sampling.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace treedp {

// bus_sets[0] is the upper-level grid (subsystem 1); bus_sets[k] is the
// distribution grid of subsystem k + 1.
struct PartitionSpec {
  std::vector<std::vector<int>> bus_sets;
};

enum class OpfModel { AC, DC };

std::string to_string(OpfModel m);

// One distribution grid attached to the upper level through a single branch.
struct LeafCoupling {
  int subsystem = 0;
  int coupling_bus = 0;   // upper-level bus
  int feeder_bus = 0;     // lower-level end of the coupling branch
  Index branch = 0;       // position in GridModel::branches
  std::vector<int> buses; // lower-level buses
  std::vector<Index> internal_branches;
};

// Validates the partition and derives branch ownership and coupling branches.
// Throws MultipleInterconnections for more than one coupling bus or branch.
std::vector<LeafCoupling> analyze_partition(const GridModel& grid, const PartitionSpec& partition);

struct OpfTree {
  TreeProblem problem;
  std::vector<LeafCoupling> leaves;
  TreeTopology topology;
  std::vector<std::string> names;  // per global variable
  std::map<int, VariableIndexSet> coupling;  // leaf subsystem -> coupling indices
  std::map<int, std::vector<std::string>> coupling_names;
};

// Polyhedral DC constraint set of one subsystem over its local variables,
// ordered as in OpfTree::names.
HPolyhedron dc_opf_polyhedron(const GridModel& grid, const PartitionSpec& partition, int subsystem);

// AC trees need an upper level without internal branches; with fixed_voltage
// the coupling space of each leaf is (p, q) instead of (v, p, q).
OpfTree opf_to_tree(const GridModel& grid, const PartitionSpec& partition, OpfModel model,
                    std::optional<double> fixed_voltage = std::nullopt);

// Nonlinear constraint set of a distribution grid. With fixed_voltage the
// coupling space is (p, q) and the coupling-bus voltage is held in y;
// otherwise it is (v, p, q).
NlpConstraintSpec ac_leaf_spec(const GridModel& grid, const LeafCoupling& leaf,
                               std::optional<double> fixed_voltage = std::nullopt);

// Generation cost of a distribution grid over the spec's (z, y) layout.
std::function<double(const Vector&)> ac_leaf_cost(const GridModel& grid, const LeafCoupling& leaf,
                                                  const NlpConstraintSpec& spec);

struct AcSamplingConfig {
  Index n_samples = 2000;
  Index n_grid = 19;
  std::uint64_t seed = 42;
  int threads = 1;
};

struct AcRegion {
  double voltage = 1.0;
  std::shared_ptr<const NlpConstraintSpec> spec;
  SampleSet decision;
  SampleSet grid_p;
  SampleSet grid_q;
  SampleSet all;
  SampleHull hull;
  double worst_violation = 0.0;
};

AcRegion ac_feasible_region(const GridModel& grid, const LeafCoupling& leaf, double voltage,
                            const AcSamplingConfig& config = {});

struct ValueGridPoint {
  Vector z;
  std::optional<double> value;
};

// Leaf optimum at each (p, q) point of a regular grid over the hull's bounding box.
std::vector<ValueGridPoint> ac_value_table(const GridModel& grid, const LeafCoupling& leaf, const AcRegion& region,
                                           Index n_per_axis, int threads = 1);

struct OpfDemoConfig {
  OpfModel model = OpfModel::DC;
  Index n_value_grid = 50;
  double voltage = 1.0;
  std::vector<double> voltage_sweep;
  AcSamplingConfig sampling;
  Index ac_value_grid = 15;
};

struct OpfReport {
  OpfModel model = OpfModel::DC;
  // DC
  std::optional<HPolyhedron> interval;
  double lp_lower = 0.0;
  double lp_upper = 0.0;
  double fm_lower = 0.0;
  double fm_upper = 0.0;
  std::vector<ValueTableEntry> dc_values;
  std::optional<ForwardResult> dispatch;
  double monolithic_cost = 0.0;
  // AC
  std::vector<AcRegion> regions;
  std::vector<ValueGridPoint> ac_values;
  double runtime_s = 0.0;
};

OpfReport run_opf_demo(const GridModel& grid, const PartitionSpec& partition, const OpfDemoConfig& config = {});

// The repository's 18-bus feeder: transmission bus 18 and a 17-bus radial
// distribution grid with solar generators at buses 6 and 16.
GridModel feeder18();
PartitionSpec feeder18_partition();

}  // namespace treedp
