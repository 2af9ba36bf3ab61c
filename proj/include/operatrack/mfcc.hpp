#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "operatrack/features.hpp"

namespace operatrack {

/// MFCC front end configuration. Hop and window are fixed at 10 ms / 20 ms.
struct MfccConfig {
  std::uint32_t internal_rate_hz = 22050;  ///< input is resampled to this rate
  std::size_t coefficients = 20;           ///< output dimension
  std::size_t mel_bands = 40;
  double min_freq_hz = 0.0;
  double max_freq_hz = 0.0;                ///< 0 selects Nyquist
  double power_floor = 1e-10;              ///< applied before every log
  bool log_energy_c0 = true;               ///< replace c0 by the frame log-energy
};

/// Streaming windowed-sinc resampler. Output sample n sits at input time
/// n * in_rate / out_rate; samples outside the stream count as zero. Each output
/// depends only on absolute sample positions, so chunking never changes results.
class Resampler {
 public:
  Resampler(std::uint32_t in_rate_hz, std::uint32_t out_rate_hz, std::size_t zero_crossings = 16);

  void push(std::span<const float> in, std::vector<float>& out);
  /// Emits the tail; total output is ceil(N_in * out_rate / in_rate).
  void finish(std::vector<float>& out);

 private:
  float compute(std::uint64_t n) const;
  bool ready(std::uint64_t n) const;
  float input_at(long long idx) const;

  std::uint32_t in_rate_;
  std::uint32_t out_rate_;
  double cutoff_;
  long long half_width_;
  std::vector<float> buf_;
  std::uint64_t buf_start_ = 0;  // absolute index of buf_[0]
  std::uint64_t in_count_ = 0;
  std::uint64_t out_count_ = 0;
  bool finished_ = false;
};

struct FeatureFrame {
  std::size_t index = 0;  ///< HR frame index (frame t is centred at t * 10 ms)
  std::vector<float> values;
};

struct FrameDiagnostic {
  std::size_t index = 0;
  std::string message;
};

/// Incremental MFCC extractor.
///
/// Frames are centre-padded: frame t covers [t*hop - window/2, t*hop + window/2)
/// with reflect padding at both ends, and a stream of duration d yields
/// ceil(d / hop) frames. A frame is emitted as soon as its last sample arrives;
/// only the frames touching the end of the stream wait for finish(). Frames
/// containing non-finite samples are dropped and reported in diagnostics().
class MfccExtractor {
 public:
  MfccExtractor(std::uint32_t input_rate_hz, MfccConfig config = {});
  ~MfccExtractor();
  MfccExtractor(MfccExtractor&&) noexcept;
  MfccExtractor& operator=(MfccExtractor&&) noexcept;

  void push(std::span<const float> samples, std::vector<FeatureFrame>& out);
  void finish(std::vector<FeatureFrame>& out);

  std::size_t dims() const;
  const MfccConfig& config() const;
  const std::vector<FrameDiagnostic>& diagnostics() const;

  /// Samples per analysis window and FFT size at the internal rate.
  std::size_t window_samples() const;
  std::size_t fft_size() const;
  /// Centre sample of frame t at the internal rate.
  std::uint64_t frame_centre(std::size_t t) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct MfccResult {
  FeatureSequence features;
  std::vector<FrameDiagnostic> diagnostics;
};

/// One-shot extraction; identical frames to any chunked use of MfccExtractor.
/// Throws UsageError for sample rates below 8 kHz.
MfccResult extract_mfcc(std::span<const float> pcm, std::uint32_t sample_rate_hz,
                        const MfccConfig& config = {});

}  // namespace operatrack
