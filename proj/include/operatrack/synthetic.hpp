#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "operatrack/features.hpp"
#include "operatrack/mismatch_sim.hpp"
#include "operatrack/score_model.hpp"

namespace operatrack {

/// Smooth random feature trajectory over continuous score time: a slow and a
/// fast Catmull-Rom curve through Gaussian control points plus a constant
/// offset per part.
class ContentModel {
 public:
  ContentModel() = default;
  /// `part_starts` are the first frames of the parts, ascending, starting at 0.
  ContentModel(std::size_t length, std::size_t dims, std::vector<std::size_t> part_starts,
               std::uint64_t seed, double slow_spacing = 60.0, double fast_spacing = 8.0,
               double part_offset = 0.5);

  void eval(double t, std::span<float> out) const;
  std::size_t length() const { return length_; }
  std::size_t dims() const { return dims_; }

 private:
  static void add_curve(const std::vector<float>& points, double spacing, double t,
                        std::span<float> out);

  std::size_t length_ = 0;
  std::size_t dims_ = 0;
  double slow_spacing_ = 60.0;
  double fast_spacing_ = 8.0;
  std::vector<std::size_t> part_starts_;
  std::vector<float> slow_;
  std::vector<float> fast_;
  std::vector<float> offsets_;
};

struct SyntheticScoreParams {
  std::size_t parts = 10;
  std::size_t min_part_frames = 1200;
  std::size_t max_part_frames = 2400;
  /// When non-zero the part lengths are rescaled to sum to exactly this.
  std::size_t total_frames = 0;
  std::size_t min_bar_frames = 150;
  std::size_t max_bar_frames = 250;
  std::size_t dims = 20;
  double slow_spacing = 60.0;
  double fast_spacing = 8.0;
  double part_offset = 0.5;
  /// Noise standard deviation relative to the feature RMS.
  double noise = 0.10;
  /// Probability that a part (other than the first) is a recitative: material
  /// whose renditions resemble each other only weakly.
  double recitative_ratio = 0.0;
};

struct SyntheticScore {
  ContentModel content;
  FeatureSequence features;  ///< the reference recording: content at t = 0, 1, ... plus noise
  Annotations annotations;
  double rms = 0.0;  ///< RMS of the noiseless content
  std::vector<bool> recitative;  ///< per part
};

SyntheticScore make_synthetic_score(const SyntheticScoreParams& params, std::uint64_t seed);

struct PerformanceParams {
  /// Bounds of the local tempo (score frames per performance frame).
  double min_rate = 0.7;
  double max_rate = 1.3;
  /// Control point spacing of the tempo curve, in performance frames.
  double rate_spacing = 400.0;
  double noise = 0.10;
  /// Share of the score content in recitative parts; the rest is material
  /// unrelated to the reference.
  double recitative_similarity = 0.3;
};

struct Performance {
  FeatureSequence features;
  /// Score time of each frame (non-decreasing, slope within the rate bounds).
  std::vector<double> score_time;
  /// Parts and bars at the first frame whose score time reaches their onset.
  Annotations annotations;
  GroundTruth truth;
};

/// A complete tempo-warped, noisy rendition of the score.
Performance perform(const SyntheticScore& score, const PerformanceParams& params,
                    std::uint64_t seed);

}  // namespace operatrack
