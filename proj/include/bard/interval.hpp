#pragma once

#include <vector>

namespace bard {

// Closed integer interval [start, end] of observation indices.
struct Interval {
  long start;
  long end;

  long length() const { return end - start + 1; }
  bool operator==(const Interval&) const = default;
};

using IntervalSet = std::vector<Interval>;

inline long overlap(const Interval& a, const Interval& b) {
  const long lo = a.start > b.start ? a.start : b.start;
  const long hi = a.end < b.end ? a.end : b.end;
  return hi >= lo ? hi - lo + 1 : 0;
}

// Joins intervals that touch end-to-start ([3,5],[6,9] -> [3,9]); input sorted.
inline IntervalSet merge_adjacent(const IntervalSet& sorted) {
  IntervalSet out;
  for (const auto& iv : sorted) {
    if (!out.empty() && out.back().end + 1 >= iv.start) {
      if (iv.end > out.back().end) out.back().end = iv.end;
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

}  // namespace bard
