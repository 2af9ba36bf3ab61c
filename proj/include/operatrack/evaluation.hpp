#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "operatrack/integrator.hpp"
#include "operatrack/mismatch_sim.hpp"
#include "operatrack/score_model.hpp"

namespace operatrack {

/// Accuracies in percent over the counted (non-inserted) frames.
struct Metrics {
  double part_acc = 0.0;
  double bar_acc = 0.0;
  double at5_acc = 0.0;
  std::size_t frames = 0;
};

/// Frame-wise hit counter. Frames whose truth is unannotated are skipped; an
/// estimate outside every part is a miss on all three counts.
class AccuracyCounter {
 public:
  explicit AccuracyCounter(const Annotations& annotations) : annotations_(&annotations) {}

  void add(std::size_t estimated_frame, const Location& truth);
  void add(const Location& estimate, const Location& truth);
  /// Pools the counts of another counter over the same annotations.
  void merge(const AccuracyCounter& other);
  Metrics metrics() const;

  std::size_t part_hits() const { return part_hits_; }
  std::size_t bar_hits() const { return bar_hits_; }
  std::size_t at5_hits() const { return at5_hits_; }
  std::size_t counted() const { return counted_; }

 private:
  const Annotations* annotations_;
  std::size_t part_hits_ = 0;
  std::size_t bar_hits_ = 0;
  std::size_t at5_hits_ = 0;
  std::size_t counted_ = 0;
};

/// Maximum difference in global bar rank still counted by at5_acc.
inline constexpr std::size_t kBarTolerance = 5;

/// Scores estimated HR reference frames against per-frame truth.
/// Throws DataError when the lengths differ.
Metrics evaluate(std::span<const std::size_t> estimated_frames, const GroundTruth& truth,
                 const Annotations& annotations);
Metrics evaluate(std::span<const PositionReport> reports, const GroundTruth& truth,
                 const Annotations& annotations);
/// As evaluate(), counting only the frames where `mask` is set.
Metrics evaluate_masked(std::span<const std::size_t> estimated_frames, const GroundTruth& truth,
                        const Annotations& annotations, const std::vector<bool>& mask);

/// Scores LR reports (position 30x) against the truth at HR frame 30m.
/// With `reliable_only` only rf = 1 reports count.
Metrics evaluate_lr(std::span<const LrReport> reports, const GroundTruth& truth,
                    const Annotations& annotations, bool reliable_only = false);

/// {"model": ..., "part_acc": ..., "bar_acc": ..., "at5_acc": ..., "frames": ...}
std::string metrics_json(const std::string& model, const Metrics& m);
/// Fixed-width table, one row per (model, metrics).
std::string metrics_table(const std::vector<std::pair<std::string, Metrics>>& rows);

}  // namespace operatrack
