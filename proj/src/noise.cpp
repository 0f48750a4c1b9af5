#include "jumplq/noise.hpp"

#include <algorithm>
#include <cmath>

#include "jumplq/rng.hpp"

namespace jumplq {

Skeleton build_skeleton(const TimeGrid& grid, const std::vector<JumpEvent>& events) {
  Skeleton sk;
  const int n = grid.n_steps;
  sk.times.reserve(n + 1 + events.size());
  sk.event_mark.reserve(n + 1 + events.size());
  sk.unode.reserve(n + 1 + events.size());
  sk.ustep.reserve(n + events.size());

  sk.times.push_back(grid.node(0));
  sk.event_mark.push_back(-1);
  sk.unode.push_back(0);

  size_t e = 0;
  for (int i = 0; i < n; ++i) {
    const double t_next = grid.node(i + 1);
    // Events up to and including t_next land inside step i; a tie with the
    // node just makes a zero-length final sub-interval, which the Euler
    // loop handles as a no-op.
    while (e < events.size() && events[e].time <= t_next) {
      sk.ustep.push_back(i);
      sk.times.push_back(events[e].time);
      sk.event_mark.push_back(events[e].mark);
      sk.unode.push_back(-1);
      ++e;
    }
    sk.ustep.push_back(i);
    sk.times.push_back(t_next);
    sk.event_mark.push_back(-1);
    sk.unode.push_back(i + 1);
  }
  return sk;
}

double NoiseBundle::dW(int path, int interval, const Skeleton& skel) const {
  if (!procedural()) return explicit_dw[static_cast<size_t>(path)][static_cast<size_t>(interval)];
  const double len = skel.times[interval + 1] - skel.times[interval];
  if (len <= 0.0) return 0.0;
  return counter_normal(seed, static_cast<std::uint64_t>(path), kStreamBrownian,
                        static_cast<std::uint64_t>(interval)) *
         std::sqrt(len);
}

NoiseBundle sample_noise(const JumpMeasure& measure, const TimeGrid& grid,
                         int n_paths, std::uint64_t seed) {
  NoiseBundle nb;
  nb.seed = seed;
  nb.n_paths = n_paths;
  nb.grid = grid;
  nb.events.resize(static_cast<size_t>(n_paths));
  for (int p = 0; p < n_paths; ++p) {
    auto& ev = nb.events[static_cast<size_t>(p)];
    for (int k = 0; k < measure.n_marks(); ++k) {
      const double rate = measure.marks[static_cast<size_t>(k)].rate;
      if (rate <= 0.0) continue;
      double t = grid.t0;
      for (std::uint64_t seq = 0;; ++seq) {
        const double u = counter_uniform(seed, static_cast<std::uint64_t>(p),
                                         kStreamJumpBase + static_cast<std::uint64_t>(k), seq);
        t += -std::log(u) / rate;
        if (t > grid.T) break;
        ev.push_back(JumpEvent{t, k});
      }
    }
    std::sort(ev.begin(), ev.end(), [](const JumpEvent& a, const JumpEvent& b) {
      return a.time < b.time || (a.time == b.time && a.mark < b.mark);
    });
  }
  return nb;
}

NoiseBundle coarsen(const NoiseBundle& fine, int factor) {
  if (factor < 1 || fine.grid.n_steps % factor != 0)
    throw BadGrid("coarsening factor " + std::to_string(factor) +
                  " does not divide n_steps=" + std::to_string(fine.grid.n_steps));
  NoiseBundle out;
  out.seed = fine.seed;
  out.n_paths = fine.n_paths;
  out.grid = fine.grid;
  out.grid.n_steps = fine.grid.n_steps / factor;
  out.events = fine.events;
  out.explicit_dw.resize(static_cast<size_t>(fine.n_paths));
  for (int p = 0; p < fine.n_paths; ++p) {
    const Skeleton fs = build_skeleton(fine.grid, fine.events[static_cast<size_t>(p)]);
    auto& cdw = out.explicit_dw[static_cast<size_t>(p)];
    double acc = 0.0;
    for (int w = 0; w < fs.n_intervals(); ++w) {
      acc += fine.dW(p, w, fs);
      // A coarse node is any event node or a uniform fine node whose index
      // is a multiple of the factor.
      const int u = fs.unode[w + 1];
      if (fs.event_mark[w + 1] >= 0 || (u >= 0 && u % factor == 0)) {
        cdw.push_back(acc);
        acc = 0.0;
      }
    }
    const Skeleton cs = build_skeleton(out.grid, out.events[static_cast<size_t>(p)]);
    if (static_cast<int>(cdw.size()) != cs.n_intervals())
      throw BadGrid("internal: coarsened increment count mismatch");
  }
  return out;
}

}  // namespace jumplq
