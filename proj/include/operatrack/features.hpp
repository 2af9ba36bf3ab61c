#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace operatrack {

enum class Resolution { HR, LR };

std::string_view to_string(Resolution r);
Resolution parse_resolution(std::string_view s);

/// Frame geometry fixed per resolution.
inline constexpr double kHrHopSeconds = 0.010;
inline constexpr double kHrWindowSeconds = 0.020;
inline constexpr double kLrHopSeconds = 0.300;
inline constexpr double kLrWindowSeconds = 0.600;

/// HR frames per LR hop, and the LR Hann window span in HR frames.
inline constexpr std::size_t kLrHopFrames = 30;
inline constexpr std::size_t kLrWindowFrames = 60;

/// Time-ordered matrix of fixed-dimension feature frames (row-major, frames x dims).
///
/// Every frame has `dims()` finite values. Hop and window durations follow from
/// the resolution.
class FeatureSequence {
 public:
  FeatureSequence() = default;
  FeatureSequence(std::size_t dims, Resolution resolution, double sample_rate_hz);
  /// Takes ownership of `data`; throws DataError on a ragged or non-finite matrix.
  FeatureSequence(std::vector<float> data, std::size_t dims, Resolution resolution,
                  double sample_rate_hz);

  /// Appends one frame; throws DataError on a dimension mismatch or non-finite value.
  void append(std::span<const float> frame);
  void reserve(std::size_t frames);

  std::size_t frame_count() const { return dims_ == 0 ? 0 : data_.size() / dims_; }
  std::size_t dims() const { return dims_; }
  bool empty() const { return data_.empty(); }
  Resolution resolution() const { return resolution_; }
  double hop_s() const;
  double window_s() const;
  double sample_rate_hz() const { return sample_rate_hz_; }

  std::span<const float> frame(std::size_t i) const {
    return {data_.data() + i * dims_, dims_};
  }
  const std::vector<float>& data() const { return data_; }

 private:
  std::vector<float> data_;
  std::size_t dims_ = 0;
  Resolution resolution_ = Resolution::HR;
  double sample_rate_hz_ = 0.0;
};

/// Norm below which a vector counts as zero for the cosine distance.
inline constexpr double kNormFloor = 1e-12;

/// 1 - a.b / (|a||b|), in [0, 2]. Returns 1.0 if either norm is below kNormFloor.
/// Throws UsageError when the dimensions differ.
double cosine_distance(std::span<const float> a, std::span<const float> b);

/// Unit-normalized copy of a feature matrix, for fast repeated cosine distances
/// against one query vector.
class UnitFrames {
 public:
  UnitFrames() = default;
  explicit UnitFrames(const FeatureSequence& seq);

  /// Unit-normalized query; empty when the query norm is below the floor.
  std::vector<float> normalize(std::span<const float> query) const;

  /// Cosine distance between frame i and a query produced by normalize().
  double distance(std::size_t i, std::span<const float> unit_query) const;

  /// Distances from every frame to the query, written into `out` (resized).
  void distances(std::span<const float> unit_query, std::vector<double>& out) const;

  std::size_t size() const { return zero_.size(); }
  std::size_t dims() const { return dims_; }

 private:
  std::vector<float> unit_;
  std::vector<std::uint8_t> zero_;
  std::size_t dims_ = 0;
};

/// Streaming HR -> LR downsampler: per-dimension convolution with a
/// weight-normalized Hann window over 60 HR frames, one output per 30 HR frames.
///
/// LR frame m is centred on HR frame 30m and covers HR frames [30m-30, 30m+29];
/// indices outside the stream are reflected at the edges. Frame m is emitted as
/// soon as HR frame 30(m+1) has arrived; the remaining frames come out of finish().
class LrDownsampler {
 public:
  explicit LrDownsampler(std::size_t dims);

  /// Feeds one HR frame; returns the LR frame completed by it, if any.
  std::optional<std::vector<float>> push(std::span<const float> hr_frame);

  /// Flushes the frames that need the end of the stream: ceil(M/30) in total.
  std::vector<std::vector<float>> finish();

  std::size_t hr_frames_seen() const { return seen_; }
  std::size_t lr_frames_emitted() const { return emitted_; }

  /// Normalized Hann weights (60 values, sum 1).
  static const std::vector<double>& weights();

 private:
  std::span<const float> hr_at(std::size_t i) const;
  std::vector<float> compute(std::size_t m, std::size_t total) const;

  std::size_t dims_;
  std::size_t seen_ = 0;
  std::size_t emitted_ = 0;
  bool finished_ = false;
  std::vector<float> head_;  // first kHeadFrames frames
  std::vector<float> ring_;  // last kRingFrames frames
};

/// Batch LR features; equals streaming every frame through LrDownsampler.
/// Throws UsageError unless `hr` is an HR sequence.
FeatureSequence downsample_lr(const FeatureSequence& hr);

/// Number of LR frames produced from `hr_frames` HR frames.
inline constexpr std::size_t lr_frame_count(std::size_t hr_frames) {
  return (hr_frames + kLrHopFrames - 1) / kLrHopFrames;
}

}  // namespace operatrack
