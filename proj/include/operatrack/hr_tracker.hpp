#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "operatrack/score_model.hpp"

namespace operatrack {

/// "+infinity" for cumulative costs; sums of a few of these never overflow.
inline constexpr double kInfCost = std::numeric_limits<double>::max() / 4;

/// Inclusive frame range.
struct FrameRange {
  std::size_t lo = 0;
  std::size_t hi = 0;

  bool contains(std::size_t i) const { return lo <= i && i <= hi; }
  std::size_t size() const { return hi - lo + 1; }
  bool operator==(const FrameRange&) const = default;
};

struct HrConfig {
  std::size_t window = 4000;       ///< c: frames of score context per step
  bool jumps = true;               ///< false gives the plain windowed OLTW baseline
  std::size_t transitions = 8;     ///< repetition, continuation and skips to the next parts
  std::size_t start_region = 500;  ///< frames after a part start where no part is committed
};

enum class HrMode { Linear, Hypothesis };

/// High-resolution on-line time warping tracker with part-boundary jumps.
///
/// Keeps the cumulative cost row D_{j-1} over a set of active score cells. In
/// Linear mode the active set is the window [p - c/2, p + c/2] around the current
/// position p and the classical step set applies. Once p passes t_k - c/2 of the
/// current part k (and jumps are enabled) the tracker enters Hypothesis mode: it
/// additionally keeps the end region [t_k - c/2, t_k] and a c/8 window after the
/// start of each candidate part (k, k+1, ..., k+7), whose first cell may also be
/// reached from t_k in one step. A new part is committed once the position leaves
/// both the end region and every part's start region.
///
/// Ties in the position argmin go to the smallest score index.
class HrTracker {
 public:
  /// Starts with an empty prefix aligned at `start`. Throws UsageError when out of range.
  HrTracker(const ScoreReference& ref, HrConfig config, std::size_t start = 0);

  /// One target frame: dispatches on the mode, then applies the activation and
  /// commit rules. Returns the new position.
  std::size_t step(std::span<const float> target_frame);

  /// Classical recursion over the window. Requires Linear mode.
  std::size_t step_baseline(std::span<const float> target_frame);
  /// Jump recursion over window, end region and hypothesis windows. Requires Hypothesis mode.
  std::size_t step_joltw(std::span<const float> target_frame);
  /// Applies the new-part rule in Hypothesis mode; returns the committed part id.
  std::optional<int> commit_part();

  /// Re-seeds the cost row with a single finite cell and returns to Linear mode.
  void reset(std::size_t target, double seed_cost);

  std::size_t position() const { return position_; }
  HrMode mode() const { return mode_; }
  std::size_t current_part_index() const { return part_; }
  int current_part() const;
  const HrConfig& config() const { return config_; }

  /// Window around the current position used by the next step.
  FrameRange window() const { return window_around(position_); }
  /// Start frames of the candidate parts (Hypothesis mode only).
  const std::vector<std::size_t>& hypothesis_starts() const { return hyp_starts_; }
  /// Cells holding the cost row produced by the last step (merged, sorted).
  const std::vector<FrameRange>& active() const { return active_prev_; }
  /// Cumulative cost of cell i after the last step (kInfCost when not held).
  double cost(std::size_t i) const { return prev_[i]; }

 private:
  FrameRange window_around(std::size_t p) const;
  std::vector<FrameRange> build_active() const;
  std::size_t advance(std::span<const float> target_frame, bool jumps);
  void enter_hypothesis();
  void clear_prev();

  const ScoreReference* ref_;
  HrConfig config_;
  std::size_t m_;
  std::size_t position_;
  HrMode mode_ = HrMode::Linear;
  std::size_t part_ = 0;
  std::size_t frontier_ = 0;  // t_k of the current part in Hypothesis mode
  std::vector<std::size_t> hyp_starts_;
  std::vector<double> prev_;
  std::vector<double> cur_;
  std::vector<FrameRange> active_prev_;
};

}  // namespace operatrack
