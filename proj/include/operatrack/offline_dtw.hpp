#pragma once

#include <cstddef>
#include <vector>

#include "operatrack/features.hpp"
#include "operatrack/score_model.hpp"

namespace operatrack {

struct OfflineDtwOptions {
  /// Adds part-end to part-start links (end of part k to the start of parts
  /// k, ..., k + transitions - 1) when set.
  const PartTable* jumps = nullptr;
  std::size_t transitions = 8;
  /// Reference frame the empty prefix is aligned to.
  std::size_t start = 0;
  /// End anywhere in the reference (otherwise at its last frame).
  bool open_end = true;
  /// Largest reference x target matrix accepted.
  std::size_t cell_cap = 64'000'000;
};

struct OfflineAlignment {
  /// Optimal path: the highest reference frame matched to each target frame.
  std::vector<std::size_t> path;
  /// Per target frame, the argmin of the cumulative cost column (smallest index on ties).
  std::vector<std::size_t> forward;
  double cost = 0.0;
};

/// Full-matrix DTW of `target` against `reference` with the on-line tracker's
/// step set: D_j[i] = d(i, j) + min(D_{j-1}[i], D_{j-1}[i-1], D_j[i-1]) plus the
/// part links, starting from a virtual column that is zero at `start`.
/// Throws UsageError when the matrix exceeds the cap or the dims differ.
OfflineAlignment offline_dtw(const FeatureSequence& reference, const FeatureSequence& target,
                             const OfflineDtwOptions& options = {});

}  // namespace operatrack
