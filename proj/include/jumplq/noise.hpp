#pragma once

#include <cstdint>
#include <vector>

#include "jumplq/types.hpp"

namespace jumplq {

struct JumpEvent {
  double time = 0.0;
  int mark = -1;
};

// Event-augmented time skeleton of one path: the uniform grid nodes with the
// path's jump times inserted. Node w carries the mark firing there (-1 if
// none) and, for uniform nodes, the uniform node index (-1 for inserted
// events). Interval w spans [times[w], times[w+1]) and lies inside uniform
// step ustep[w].
struct Skeleton {
  std::vector<double> times;
  std::vector<int> event_mark;  // per node
  std::vector<int> unode;       // per node: uniform node index or -1
  std::vector<int> ustep;       // per interval

  int n_nodes() const { return static_cast<int>(times.size()); }
  int n_intervals() const { return static_cast<int>(ustep.size()); }
};

Skeleton build_skeleton(const TimeGrid& grid, const std::vector<JumpEvent>& events);

// Noise for a batch of paths. Jump events are materialized (they are few);
// Brownian increments come on demand from counters keyed by
// (seed, path, interval index) with variance equal to the interval length —
// unless an explicit per-interval table is present (coarsened bundles store
// one so refinement studies can share a single underlying noise).
struct NoiseBundle {
  std::uint64_t seed = 0;
  int n_paths = 0;
  TimeGrid grid;
  std::vector<std::vector<JumpEvent>> events;    // per path, sorted by time
  std::vector<std::vector<double>> explicit_dw;  // empty => procedural

  bool procedural() const { return explicit_dw.empty(); }
  double dW(int path, int interval, const Skeleton& skel) const;
};

// Brownian increments i.i.d. N(0, interval length); per-mark exponential
// inter-arrival jump times truncated at T. Identical inputs give a
// bit-identical bundle no matter how many workers later consume it, and the
// events do not depend on the grid resolution.
NoiseBundle sample_noise(const JumpMeasure& measure, const TimeGrid& grid,
                         int n_paths, std::uint64_t seed);

// Same events on a grid coarsened by an integer factor; fine increments are
// summed between coarse skeleton nodes, so the coarse bundle is the exact
// aggregation of the fine one (the point of a refinement study).
NoiseBundle coarsen(const NoiseBundle& fine, int factor);

}  // namespace jumplq
