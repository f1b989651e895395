#include "treedp/index_set.hpp"

#include "treedp/errors.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>

namespace treedp {

VariableIndexSet::VariableIndexSet(std::initializer_list<Index> idx)
    : VariableIndexSet(std::vector<Index>(idx)) {}

VariableIndexSet::VariableIndexSet(std::vector<Index> idx) : idx_(std::move(idx)) {
  for (size_t k = 0; k < idx_.size(); ++k) {
    if (idx_[k] < 1) throw InvalidArgument(fmt::format("variable index {} is not 1-based", idx_[k]));
    if (k > 0 && idx_[k] <= idx_[k - 1])
      throw InvalidArgument(fmt::format("index set {} is not strictly ascending", str()));
  }
}

VariableIndexSet VariableIndexSet::from_unsorted(std::vector<Index> idx) {
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return VariableIndexSet(std::move(idx));
}

VariableIndexSet VariableIndexSet::range(Index first, Index last) {
  std::vector<Index> v;
  for (Index i = first; i <= last; ++i) v.push_back(i);
  return VariableIndexSet(std::move(v));
}

bool VariableIndexSet::contains(Index i) const { return std::binary_search(idx_.begin(), idx_.end(), i); }

Index VariableIndexSet::position(Index i) const {
  auto it = std::lower_bound(idx_.begin(), idx_.end(), i);
  if (it == idx_.end() || *it != i) return -1;
  return static_cast<Index>(it - idx_.begin());
}

Positions VariableIndexSet::positions_of(const VariableIndexSet& sub) const {
  Positions out;
  out.reserve(sub.idx_.size());
  for (Index i : sub.idx_) {
    const Index p = position(i);
    if (p < 0) throw DimensionMismatch(fmt::format("index {} not in {}", i, str()));
    out.push_back(p);
  }
  return out;
}

VariableIndexSet VariableIndexSet::intersect(const VariableIndexSet& o) const {
  std::vector<Index> r;
  std::set_intersection(idx_.begin(), idx_.end(), o.idx_.begin(), o.idx_.end(), std::back_inserter(r));
  return VariableIndexSet(std::move(r));
}

VariableIndexSet VariableIndexSet::unite(const VariableIndexSet& o) const {
  std::vector<Index> r;
  std::set_union(idx_.begin(), idx_.end(), o.idx_.begin(), o.idx_.end(), std::back_inserter(r));
  return VariableIndexSet(std::move(r));
}

VariableIndexSet VariableIndexSet::minus(const VariableIndexSet& o) const {
  std::vector<Index> r;
  std::set_difference(idx_.begin(), idx_.end(), o.idx_.begin(), o.idx_.end(), std::back_inserter(r));
  return VariableIndexSet(std::move(r));
}

std::string VariableIndexSet::str() const { return fmt::format("{{{}}}", fmt::join(idx_, ",")); }

}  // namespace treedp
