#pragma once

#include "treedp/opf.hpp"

namespace treedp::detail {

// Positions of the AC quantities of one distribution grid inside (z, y).
struct AcLayout {
  bool fixed_voltage = false;
  Index nz = 0;
  Index dim = 0;
  Index vc = 0;
  Index p = 0;
  Index q = 0;
  std::vector<Index> v;   // per leaf bus
  std::vector<Index> th;  // per leaf bus
  std::vector<Index> gens;  // generator ids (GridModel positions)
  std::vector<Index> pg;
  std::vector<Index> qg;
};

AcLayout ac_layout(const GridModel& grid, const LeafCoupling& leaf, bool fixed_voltage);

}  // namespace treedp::detail
