#include "operatrack/mfcc.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "operatrack/error.hpp"

namespace operatrack {

namespace {

constexpr std::uint32_t kMinSampleRate = 8000;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

long long reflect(long long idx, long long total) {
  if (total <= 1) return 0;
  if (idx < 0) idx = -idx;
  if (idx >= total) idx = 2 * (total - 1) - idx;
  return std::clamp<long long>(idx, 0, total - 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// Resampler

Resampler::Resampler(std::uint32_t in_rate_hz, std::uint32_t out_rate_hz,
                     std::size_t zero_crossings)
    : in_rate_(in_rate_hz), out_rate_(out_rate_hz) {
  if (in_rate_hz == 0 || out_rate_hz == 0) throw UsageError("sample rates must be positive");
  cutoff_ = std::min(1.0, static_cast<double>(out_rate_) / in_rate_);
  half_width_ = static_cast<long long>(std::ceil(static_cast<double>(zero_crossings) / cutoff_));
}

float Resampler::input_at(long long idx) const {
  if (idx < 0 || static_cast<std::uint64_t>(idx) >= in_count_) return 0.0f;
  return buf_[static_cast<std::size_t>(static_cast<std::uint64_t>(idx) - buf_start_)];
}

bool Resampler::ready(std::uint64_t n) const {
  const std::uint64_t base = n * in_rate_ / out_rate_;
  return base + static_cast<std::uint64_t>(half_width_) < in_count_;
}

float Resampler::compute(std::uint64_t n) const {
  const std::uint64_t num = n * in_rate_;
  const long long base = static_cast<long long>(num / out_rate_);
  const double frac = static_cast<double>(num % out_rate_) / out_rate_;
  double acc = 0.0;
  for (long long k = base - half_width_ + 1; k <= base + half_width_; ++k) {
    const double x = static_cast<double>(base - k) + frac;  // tau - k
    const double u = x / static_cast<double>(half_width_);
    if (std::abs(u) >= 1.0) continue;
    const double window = 0.5 * (1.0 + std::cos(std::numbers::pi * u));
    acc += input_at(k) * cutoff_ * sinc(cutoff_ * x) * window;
  }
  return static_cast<float>(acc);
}

void Resampler::push(std::span<const float> in, std::vector<float>& out) {
  if (finished_) throw UsageError("Resampler: push after finish");
  if (in_rate_ == out_rate_) {
    out.insert(out.end(), in.begin(), in.end());
    in_count_ += in.size();
    out_count_ += in.size();
    return;
  }
  buf_.insert(buf_.end(), in.begin(), in.end());
  in_count_ += in.size();
  while (ready(out_count_)) out.push_back(compute(out_count_++));
  // Drop inputs no later output can reach.
  const long long keep_from =
      static_cast<long long>(out_count_ * in_rate_ / out_rate_) - half_width_ + 1;
  if (keep_from > static_cast<long long>(buf_start_) + 8192) {
    const std::size_t drop = static_cast<std::size_t>(keep_from - static_cast<long long>(buf_start_));
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(drop));
    buf_start_ += drop;
  }
}

void Resampler::finish(std::vector<float>& out) {
  finished_ = true;
  if (in_rate_ == out_rate_) return;
  const std::uint64_t total = (in_count_ * out_rate_ + in_rate_ - 1) / in_rate_;
  while (out_count_ < total) out.push_back(compute(out_count_++));
}

// ---------------------------------------------------------------------------
// MfccExtractor

struct MfccExtractor::Impl {
  MfccConfig config;
  std::uint32_t rate;
  std::size_t window;
  std::size_t half;
  std::size_t nfft;
  std::optional<Resampler> resampler;

  std::vector<double> hann;
  std::vector<double> mel_bank;  // mel_bands x (nfft/2+1)
  std::vector<double> dct;       // coefficients x mel_bands

  double* fft_in = nullptr;
  fftw_complex* fft_out = nullptr;
  fftw_plan plan = nullptr;

  std::vector<float> head;  // first `window` samples, for reflection
  std::vector<float> buf;
  std::uint64_t buf_start = 0;
  std::uint64_t total = 0;
  std::size_t next_frame = 0;
  bool finished = false;
  std::vector<FrameDiagnostic> diagnostics;

  std::vector<float> scratch_in;
  std::vector<double> power;
  std::vector<double> log_mel;

  Impl(std::uint32_t input_rate, MfccConfig cfg) : config(cfg), rate(cfg.internal_rate_hz) {
    if (input_rate < kMinSampleRate) {
      throw UsageError("unsupported sample rate " + std::to_string(input_rate) +
                       " Hz (minimum 8000 Hz)");
    }
    if (rate < kMinSampleRate) {
      throw UsageError("unsupported internal rate " + std::to_string(rate) + " Hz");
    }
    if (config.coefficients == 0 || config.mel_bands == 0 ||
        config.coefficients > config.mel_bands) {
      throw UsageError("MFCC needs 0 < coefficients <= mel_bands");
    }
    if (input_rate != rate) resampler.emplace(input_rate, rate);

    window = static_cast<std::size_t>(std::lround(kHrWindowSeconds * rate));
    half = window / 2;
    nfft = next_pow2(window);

    hann.resize(window);
    for (std::size_t n = 0; n < window; ++n) {
      hann[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                     static_cast<double>(window));
    }

    const std::size_t bins = nfft / 2 + 1;
    const double fmax = config.max_freq_hz > 0.0 ? config.max_freq_hz : rate / 2.0;
    const double mel_lo = hz_to_mel(config.min_freq_hz);
    const double mel_hi = hz_to_mel(fmax);
    std::vector<double> edges(config.mel_bands + 2);
    for (std::size_t m = 0; m < edges.size(); ++m) {
      edges[m] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(m) /
                                        static_cast<double>(config.mel_bands + 1));
    }
    mel_bank.assign(config.mel_bands * bins, 0.0);
    for (std::size_t m = 0; m < config.mel_bands; ++m) {
      for (std::size_t k = 0; k < bins; ++k) {
        const double f = static_cast<double>(k) * rate / static_cast<double>(nfft);
        const double up = (f - edges[m]) / (edges[m + 1] - edges[m]);
        const double down = (edges[m + 2] - f) / (edges[m + 2] - edges[m + 1]);
        mel_bank[m * bins + k] = std::max(0.0, std::min(up, down));
      }
    }

    const double nb = static_cast<double>(config.mel_bands);
    dct.resize(config.coefficients * config.mel_bands);
    for (std::size_t c = 0; c < config.coefficients; ++c) {
      const double scale = c == 0 ? std::sqrt(1.0 / nb) : std::sqrt(2.0 / nb);
      for (std::size_t m = 0; m < config.mel_bands; ++m) {
        dct[c * config.mel_bands + m] =
            scale * std::cos(std::numbers::pi * static_cast<double>(c) *
                             (static_cast<double>(m) + 0.5) / nb);
      }
    }

    fft_in = fftw_alloc_real(nfft);
    fft_out = fftw_alloc_complex(bins);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(nfft), fft_in, fft_out, FFTW_ESTIMATE);
    power.resize(bins);
    log_mel.resize(config.mel_bands);
    scratch_in.resize(window);
  }

  ~Impl() {
    if (plan) fftw_destroy_plan(plan);
    if (fft_in) fftw_free(fft_in);
    if (fft_out) fftw_free(fft_out);
  }

  Impl(const Impl&) = delete;
  Impl& operator=(const Impl&) = delete;

  std::uint64_t centre(std::size_t t) const {
    return (2 * static_cast<std::uint64_t>(t) * rate + 100) / 200;
  }

  long long frame_start(std::size_t t) const {
    return static_cast<long long>(centre(t)) - static_cast<long long>(half);
  }

  float sample(long long idx, long long known_total) const {
    const auto r = static_cast<std::uint64_t>(reflect(idx, known_total));
    if (r < head.size()) return head[r];
    return buf[static_cast<std::size_t>(r - buf_start)];
  }

  void append_samples(std::span<const float> s) {
    for (float v : s) {
      if (head.size() < window) head.push_back(v);
    }
    buf.insert(buf.end(), s.begin(), s.end());
    total += s.size();
  }

  void emit(std::size_t t, long long known_total, std::vector<FeatureFrame>& out) {
    const long long start = frame_start(t);
    bool finite = true;
    double energy = 0.0;
    for (std::size_t n = 0; n < window; ++n) {
      const float v = sample(start + static_cast<long long>(n), known_total);
      scratch_in[n] = v;
      if (!std::isfinite(v)) finite = false;
      energy += static_cast<double>(v) * v;
    }
    if (!finite) {
      diagnostics.push_back({t, "frame " + std::to_string(t) + " rejected: non-finite samples"});
      return;
    }
    for (std::size_t n = 0; n < nfft; ++n) {
      fft_in[n] = n < window ? scratch_in[n] * hann[n] : 0.0;
    }
    fftw_execute(plan);
    const std::size_t bins = nfft / 2 + 1;
    for (std::size_t k = 0; k < bins; ++k) {
      power[k] = fft_out[k][0] * fft_out[k][0] + fft_out[k][1] * fft_out[k][1];
    }
    for (std::size_t m = 0; m < config.mel_bands; ++m) {
      double e = 0.0;
      const double* row = mel_bank.data() + m * bins;
      for (std::size_t k = 0; k < bins; ++k) e += row[k] * power[k];
      log_mel[m] = std::log(std::max(e, config.power_floor));
    }
    FeatureFrame f;
    f.index = t;
    f.values.resize(config.coefficients);
    for (std::size_t c = 0; c < config.coefficients; ++c) {
      double acc = 0.0;
      const double* row = dct.data() + c * config.mel_bands;
      for (std::size_t m = 0; m < config.mel_bands; ++m) acc += row[m] * log_mel[m];
      f.values[c] = static_cast<float>(acc);
    }
    if (config.log_energy_c0) {
      f.values[0] = static_cast<float>(std::log(std::max(energy, config.power_floor)));
    }
    out.push_back(std::move(f));
  }

  void trim() {
    const long long need = frame_start(next_frame);
    if (need > static_cast<long long>(buf_start) + 16384) {
      const auto drop = static_cast<std::size_t>(need - static_cast<long long>(buf_start));
      buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(drop));
      buf_start += drop;
    }
  }

  void consume(std::span<const float> s, std::vector<FeatureFrame>& out) {
    append_samples(s);
    const auto unknown_end = std::numeric_limits<long long>::max() / 4;
    while (frame_start(next_frame) + static_cast<long long>(window) <=
           static_cast<long long>(total)) {
      emit(next_frame++, unknown_end, out);
    }
    trim();
  }
};

MfccExtractor::MfccExtractor(std::uint32_t input_rate_hz, MfccConfig config)
    : impl_(std::make_unique<Impl>(input_rate_hz, config)) {}
MfccExtractor::~MfccExtractor() = default;
MfccExtractor::MfccExtractor(MfccExtractor&&) noexcept = default;
MfccExtractor& MfccExtractor::operator=(MfccExtractor&&) noexcept = default;

void MfccExtractor::push(std::span<const float> samples, std::vector<FeatureFrame>& out) {
  if (impl_->finished) throw UsageError("MfccExtractor: push after finish");
  if (impl_->resampler) {
    std::vector<float> resampled;
    impl_->resampler->push(samples, resampled);
    impl_->consume(resampled, out);
  } else {
    impl_->consume(samples, out);
  }
}

void MfccExtractor::finish(std::vector<FeatureFrame>& out) {
  if (impl_->finished) return;
  if (impl_->resampler) {
    std::vector<float> tail;
    impl_->resampler->finish(tail);
    impl_->consume(tail, out);
  }
  impl_->finished = true;
  const std::uint64_t n = impl_->total;
  const std::uint64_t frames = (n * 100 + impl_->rate - 1) / impl_->rate;
  while (impl_->next_frame < frames) {
    impl_->emit(impl_->next_frame++, static_cast<long long>(n), out);
  }
}

std::size_t MfccExtractor::dims() const { return impl_->config.coefficients; }
const MfccConfig& MfccExtractor::config() const { return impl_->config; }
const std::vector<FrameDiagnostic>& MfccExtractor::diagnostics() const {
  return impl_->diagnostics;
}
std::size_t MfccExtractor::window_samples() const { return impl_->window; }
std::size_t MfccExtractor::fft_size() const { return impl_->nfft; }
std::uint64_t MfccExtractor::frame_centre(std::size_t t) const { return impl_->centre(t); }

MfccResult extract_mfcc(std::span<const float> pcm, std::uint32_t sample_rate_hz,
                        const MfccConfig& config) {
  MfccExtractor ex(sample_rate_hz, config);
  std::vector<FeatureFrame> frames;
  ex.push(pcm, frames);
  ex.finish(frames);
  MfccResult result{FeatureSequence(ex.dims(), Resolution::HR, sample_rate_hz),
                    ex.diagnostics()};
  result.features.reserve(frames.size());
  for (const auto& f : frames) result.features.append(f.values);
  return result;
}

}  // namespace operatrack
