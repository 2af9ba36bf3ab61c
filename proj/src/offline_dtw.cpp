#include "operatrack/offline_dtw.hpp"

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_map>

#include "operatrack/error.hpp"
#include "operatrack/hr_tracker.hpp"

namespace operatrack {

namespace {

enum Step : std::uint8_t { kNone, kStay, kDiagonal, kHorizontal, kJump };

}  // namespace

OfflineAlignment offline_dtw(const FeatureSequence& reference, const FeatureSequence& target,
                             const OfflineDtwOptions& options) {
  const std::size_t m = reference.frame_count();
  const std::size_t n = target.frame_count();
  if (m == 0 || n == 0) throw UsageError("offline DTW needs non-empty sequences");
  if (reference.dims() != target.dims()) throw UsageError("offline DTW dims differ");
  if (options.start >= m) throw UsageError("offline DTW start outside the reference");
  if (m > options.cell_cap / n) {
    throw UsageError("offline DTW matrix of " + std::to_string(m) + " x " + std::to_string(n) +
                     " exceeds the cap of " + std::to_string(options.cell_cap) + " cells");
  }

  // For each reference frame that starts a part: the part ends that may jump to it.
  std::vector<std::vector<std::size_t>> sources(m);
  if (options.jumps) {
    const PartTable& parts = *options.jumps;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const std::size_t last = std::min(parts.size(), k + options.transitions);
      for (std::size_t q = k; q < last; ++q) {
        if (parts[q].start < m && parts[k].end < m) sources[parts[q].start].push_back(parts[k].end);
      }
    }
  }

  const UnitFrames unit(reference);
  std::vector<double> prev(m, kInfCost);
  std::vector<double> cur(m, kInfCost);
  std::vector<std::uint8_t> step(n * m, kNone);
  std::unordered_map<std::size_t, std::size_t> jump_from;  // cell -> source end
  OfflineAlignment out;
  out.forward.resize(n);
  prev[options.start] = 0.0;  // virtual column before the first target frame

  for (std::size_t j = 0; j < n; ++j) {
    const std::vector<float> q = unit.normalize(target.frame(j));
    std::uint8_t* s = step.data() + j * m;
    double best = kInfCost;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < m; ++i) {
      double pred = prev[i];
      std::uint8_t how = pred < kInfCost ? kStay : kNone;
      std::size_t from = 0;
      if (i > 0 && prev[i - 1] < pred) {
        pred = prev[i - 1];
        how = kDiagonal;
      }
      if (i > 0 && cur[i - 1] < pred) {
        pred = cur[i - 1];
        how = kHorizontal;
      }
      if (j > 0) {
        for (std::size_t t : sources[i]) {
          if (prev[t] < pred) {
            pred = prev[t];
            how = kJump;
            from = t;
          }
        }
      }
      cur[i] = how == kNone ? kInfCost : pred + unit.distance(i, q);
      s[i] = how;
      if (how == kJump) jump_from[j * m + i] = from;
      if (cur[i] < best) {
        best = cur[i];
        best_i = i;
      }
    }
    out.forward[j] = best_i;
    std::swap(prev, cur);
    std::fill(cur.begin(), cur.end(), kInfCost);
  }

  std::size_t i = options.open_end ? out.forward[n - 1] : m - 1;
  out.cost = prev[i];
  if (out.cost >= kInfCost) throw UsageError("offline DTW: end cell unreachable");
  out.path.assign(n, 0);
  std::size_t j = n - 1;
  bool row_seen = false;
  for (;;) {
    if (!row_seen) {
      out.path[j] = i;
      row_seen = true;
    }
    const std::uint8_t how = step[j * m + i];
    if (how == kHorizontal) {
      --i;
      continue;
    }
    if (j == 0) break;
    if (how == kDiagonal) --i;
    if (how == kJump) i = jump_from.at(j * m + i);
    --j;
    row_seen = false;
  }
  return out;
}

}  // namespace operatrack
