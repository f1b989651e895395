#pragma once

#include "treedp/common.hpp"

#include <initializer_list>
#include <string>
#include <vector>

namespace treedp {

// Ordered set of 1-based global variable indices.
class VariableIndexSet {
 public:
  VariableIndexSet() = default;
  VariableIndexSet(std::initializer_list<Index> idx);
  // Requires strictly ascending indices >= 1.
  explicit VariableIndexSet(std::vector<Index> idx);

  static VariableIndexSet from_unsorted(std::vector<Index> idx);
  static VariableIndexSet range(Index first, Index last);  // inclusive

  Index size() const { return static_cast<Index>(idx_.size()); }
  bool empty() const { return idx_.empty(); }
  Index operator[](Index k) const { return idx_[static_cast<size_t>(k)]; }
  const std::vector<Index>& indices() const { return idx_; }
  auto begin() const { return idx_.begin(); }
  auto end() const { return idx_.end(); }

  bool contains(Index i) const;
  // 0-based position of i, or -1.
  Index position(Index i) const;
  // 0-based positions of every element of sub, which must be a subset.
  Positions positions_of(const VariableIndexSet& sub) const;
  Index max_index() const { return idx_.empty() ? 0 : idx_.back(); }

  VariableIndexSet intersect(const VariableIndexSet& o) const;
  VariableIndexSet unite(const VariableIndexSet& o) const;
  VariableIndexSet minus(const VariableIndexSet& o) const;

  bool operator==(const VariableIndexSet& o) const { return idx_ == o.idx_; }
  std::string str() const;

 private:
  std::vector<Index> idx_;
};

}  // namespace treedp
