#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

namespace pregeomzol {

using Point = std::uint32_t;
using PointSet = std::vector<Point>;  // sorted, no duplicates
using Tuple = std::vector<Point>;     // ordered, duplicates allowed

// An enumeration or search would exceed the configured cap.
class ResourceError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A broken internal invariant; always a bug, never user input.
class InternalError : public std::logic_error {
  using std::logic_error::logic_error;
};

inline std::uint64_t env_cap(const char* name, std::uint64_t fallback) {
  if (const char* v = std::getenv(name)) {
    char* end = nullptr;
    unsigned long long parsed = std::strtoull(v, &end, 10);
    if (end != nullptr && *end == '\0' && parsed > 0) return parsed;
  }
  return fallback;
}

inline std::uint64_t max_cells_cap() {
  return env_cap("PREGEOMZOL_MAX_CELLS", 1ull << 22);
}

inline std::uint64_t max_assignments_cap() {
  return env_cap("PREGEOMZOL_MAX_ASSIGNMENTS", 200ull * 1000 * 1000);
}

inline void sort_unique(PointSet& s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
}

inline PointSet as_point_set(const Tuple& t) {
  PointSet s(t.begin(), t.end());
  sort_unique(s);
  return s;
}

inline bool contains_point(const PointSet& s, Point p) {
  return std::binary_search(s.begin(), s.end(), p);
}

// a subset-of b, both sorted
inline bool subset_of(const PointSet& a, const PointSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline PointSet set_union(const PointSet& a, const PointSet& b) {
  PointSet out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline PointSet set_difference(const PointSet& a, const PointSet& b) {
  PointSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace pregeomzol
