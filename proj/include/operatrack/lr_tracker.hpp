#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "operatrack/hr_tracker.hpp"
#include "operatrack/score_model.hpp"

namespace operatrack {

struct LrConfig {
  std::size_t context = 30;            ///< LR frames matched by the diagonal recursion
  std::size_t reliability_lag = 30;    ///< lag of the position difference
  std::size_t reliability_span = 30;   ///< number of recent differences inspected
  double min_delta = 15.0;             ///< slope 0.5 over the lag
  double max_delta = 45.0;             ///< slope 1.5 over the lag
  std::size_t interval_half_width = 30;  ///< HR frames either side of 30 * x
  bool renormalize = true;             ///< subtract the minimum of the segment cost each frame
};

struct LrReport {
  std::size_t lr_frame = 0;  ///< index of the target LR frame
  std::size_t position = 0;  ///< x: LR score index
  FrameRange interval;       ///< HR frames around 30 * x
  bool reliable = false;     ///< reliability factor rf
  double seed_cost = 0.0;    ///< segment cost at x
  /// (x_j - x_{j-lag}) / lag once enough positions exist, else 1.
  double slope = 1.0;
};

/// Reliability factor over a position history (oldest first): 1 iff the last
/// `reliability_span` values of x_j - x_{j-lag} all lie in [min_delta, max_delta].
bool lr_reliability(std::span<const std::size_t> history, const LrConfig& config = {});

/// Low-resolution full-score tracker.
///
/// Each LR target frame adds a row of cosine distances against the whole LR
/// reference. The last `context` rows are aligned by a diagonal recursion that
/// may start anywhere and may jump from any part end to any part start; its last
/// row D_30 then serves as the cost row of a jump-DTW update of the segment cost,
/// whose argmin is the position estimate.
class LrTracker {
 public:
  LrTracker(const ScoreReference& ref, LrConfig config = {});

  LrReport push(std::span<const float> lr_frame);

  /// D_30 of the last push (kInfCost where no diagonal path exists).
  const std::vector<double>& diagonal_cost() const { return d_last_; }
  /// Segment-level cumulative cost after the last push.
  const std::vector<double>& segment_cost() const { return seg_; }
  const std::deque<std::size_t>& history() const { return history_; }
  std::size_t frames_seen() const { return frames_; }
  const LrConfig& config() const { return config_; }

  /// Diagonal recursion with jump links over `rows` (oldest first), exposed for testing.
  static void diagonal_match(std::span<const std::vector<double>> rows,
                             const std::vector<std::uint8_t>& is_start,
                             const std::vector<std::size_t>& ends, std::vector<double>& out);

 private:
  void update_segment_cost();

  const ScoreReference* ref_;
  LrConfig config_;
  std::size_t n_;
  std::vector<std::uint8_t> is_start_;
  std::vector<std::size_t> ends_;
  std::vector<std::vector<double>> rows_;  // oldest first
  std::vector<double> d_last_;
  std::vector<double> seg_;
  std::vector<double> seg_next_;
  std::deque<std::size_t> history_;
  std::size_t frames_ = 0;
};

}  // namespace operatrack
