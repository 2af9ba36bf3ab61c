#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "operatrack/features.hpp"
#include "operatrack/hr_tracker.hpp"
#include "operatrack/lr_tracker.hpp"
#include "operatrack/score_model.hpp"

namespace operatrack {

/// The four tracker combinations: HR with or without jumps, with or without LR.
enum class Model { Baseline, Joltw, BaselineLr, JoltwLr };

std::string_view to_string(Model m);
/// Accepts "baseline", "joltw", "baseline+lr", "joltw+lr". Throws UsageError.
Model parse_model(std::string_view name);
bool uses_jumps(Model m);
bool uses_lr(Model m);

struct TrackingConfig {
  Model model = Model::JoltwLr;
  HrConfig hr;  ///< hr.jumps is overridden by the model
  LrConfig lr;
  std::size_t start = 0;
  /// Take the LR position as final while rf = 0 (instead of the HR position).
  bool literal_rf0 = false;
  /// HR frames after a reset during which no further reset fires.
  std::size_t refractory_frames = 30;
  /// HR frames after an HR jump (a move of more than c/2 in one step) during
  /// which no reset fires; the LR reports still describe the old material.
  std::size_t jump_grace_frames = 900;
  /// Move the held LR interval to the current frame: by the HR frames elapsed
  /// since the LR frame centre, and (while rf = 1) from the middle of the
  /// diagonal context to its end at the measured LR slope.
  bool compensate_lr_latency = true;
};

/// Externally visible tracker state for one target frame.
struct PositionReport {
  std::size_t target_frame = 0;
  std::size_t hr_pos = 0;
  std::optional<std::size_t> lr_pos;  ///< LR score index
  std::optional<FrameRange> lr_interval;
  bool rf = false;
  std::size_t final_pos = 0;
  int part_id = kUnannotated;
  int bar_id = kUnannotated;
  bool reset = false;
};

struct Decision {
  std::size_t hr_pos = 0;
  std::size_t final_pos = 0;
  bool reset = false;
};

struct ArbitrationRules {
  bool literal_rf0 = false;
  bool allow_reset = true;
};

/// Final-position rule. `lr` is the held LR report (interval already in HR
/// frames for the current target frame), or null before the first LR frame.
///   rf = 0                       -> HR position (LR position with literal_rf0)
///   rf = 1, HR inside interval   -> HR position
///   rf = 1, HR outside interval  -> interval middle, reset requested
Decision arbitrate(std::size_t hr_pos, const LrReport* lr, const ArbitrationRules& rules = {});

/// Steps `hr` with one target frame, arbitrates against `lr`, and re-seeds the
/// HR tracker at the interval middle (seed = LR segment cost) on a reset.
Decision integrate_step(HrTracker& hr, const LrReport* lr, std::span<const float> target_frame,
                        const ArbitrationRules& rules = {});

/// Per-step wall-clock durations in nanoseconds.
struct TimingStats {
  std::vector<std::int64_t> hr_ns;
  std::vector<std::int64_t> lr_ns;

  static double mean_ms(const std::vector<std::int64_t>& ns);
  static double percentile_ms(std::vector<std::int64_t> ns, double q);
};

/// Drives the HR tracker and, for the +LR models, the LR tracker from one HR
/// target stream. LR frames are derived online from the target stream; the
/// latest LR report is held for the HR frames until the next one.
class Integrator {
 public:
  Integrator(const ScoreReference& ref, TrackingConfig config);

  /// Consumes one HR target frame and returns its report.
  PositionReport push(std::span<const float> target_frame);

  const HrTracker& hr() const { return hr_; }
  const LrTracker* lr() const { return lr_ ? &*lr_ : nullptr; }
  const TimingStats& timing() const { return timing_; }
  const TrackingConfig& config() const { return config_; }
  std::size_t frames() const { return frames_; }

 private:
  const ScoreReference* ref_;
  TrackingConfig config_;
  HrTracker hr_;
  std::optional<LrTracker> lr_;
  std::optional<LrDownsampler> downsampler_;
  std::optional<LrReport> held_;
  std::size_t frames_ = 0;
  std::size_t last_reset_ = 0;
  bool any_reset_ = false;
  std::size_t last_jump_ = 0;
  bool any_jump_ = false;
  TimingStats timing_;
};

/// One report per target frame, in order. `timing` receives per-step durations.
std::vector<PositionReport> run_tracking(const ScoreReference& ref, const FeatureSequence& target,
                                         const TrackingConfig& config,
                                         TimingStats* timing = nullptr);

/// LR tracker alone over the LR version of `target`; one report per LR frame.
std::vector<LrReport> run_lr_only(const ScoreReference& ref, const FeatureSequence& target,
                                  const LrConfig& config = {});

/// JSON-lines encoding of a report (one object, no trailing newline).
std::string to_json_line(const PositionReport& r);
/// Parses one line produced by to_json_line. Throws DataError.
PositionReport parse_json_line(std::string_view line);

}  // namespace operatrack
