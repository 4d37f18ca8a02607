#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <iterator>
#include <utility>
#include <vector>

#include "deepmne/common.hpp"

namespace deepmne {

// Unordered node pair, normalized so first < second.
struct NodePair {
  std::size_t first = 0;
  std::size_t second = 0;

  NodePair() = default;
  NodePair(std::size_t a, std::size_t b) : first(std::min(a, b)), second(std::max(a, b)) {}

  auto operator<=>(const NodePair&) const = default;
};

using PairSet = std::vector<NodePair>;  // sorted, unique

inline void normalize(PairSet& pairs) {
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
}

inline PairSet intersect(const PairSet& a, const PairSet& b) {
  PairSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline PairSet subtract(const PairSet& a, const PairSet& b) {
  PairSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline std::size_t symmetric_difference_size(const PairSet& a, const PairSet& b) {
  PairSet out;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out.size();
}

// Must-link and cannot-link pairs over original node ids.
struct ConstraintList {
  PairSet must;
  PairSet cannot;

  bool empty() const noexcept { return must.empty() && cannot.empty(); }
  bool operator==(const ConstraintList&) const = default;
};

inline bool is_disjoint(const ConstraintList& c) { return intersect(c.must, c.cannot).empty(); }

}  // namespace deepmne
