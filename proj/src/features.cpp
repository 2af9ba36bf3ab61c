#include "operatrack/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "operatrack/error.hpp"

namespace operatrack {

namespace {

constexpr std::size_t kHeadFrames = 64;
constexpr std::size_t kRingFrames = 128;

float dot(const float* a, const float* b, std::size_t n) {
  float s0 = 0.0f, s1 = 0.0f, s2 = 0.0f, s3 = 0.0f;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  for (; k < n; ++k) s0 += a[k] * b[k];
  return (s0 + s1) + (s2 + s3);
}

// Reflects an index into [0, total) without repeating the edge sample.
std::size_t reflect(long long idx, long long total) {
  if (total <= 1) return 0;
  if (idx < 0) idx = -idx;
  if (idx >= total) idx = 2 * (total - 1) - idx;
  return static_cast<std::size_t>(std::clamp<long long>(idx, 0, total - 1));
}

}  // namespace

std::string_view to_string(Resolution r) { return r == Resolution::HR ? "HR" : "LR"; }

Resolution parse_resolution(std::string_view s) {
  if (s == "HR") return Resolution::HR;
  if (s == "LR") return Resolution::LR;
  throw DataError("unknown resolution '" + std::string(s) + "'");
}

FeatureSequence::FeatureSequence(std::size_t dims, Resolution resolution, double sample_rate_hz)
    : dims_(dims), resolution_(resolution), sample_rate_hz_(sample_rate_hz) {
  if (dims == 0) throw UsageError("feature dimension must be positive");
}

FeatureSequence::FeatureSequence(std::vector<float> data, std::size_t dims,
                                 Resolution resolution, double sample_rate_hz)
    : FeatureSequence(dims, resolution, sample_rate_hz) {
  if (data.size() % dims != 0) {
    throw DataError("feature data size " + std::to_string(data.size()) +
                    " is not a multiple of dims " + std::to_string(dims));
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw DataError("non-finite feature value in frame " + std::to_string(i / dims));
    }
  }
  data_ = std::move(data);
}

void FeatureSequence::append(std::span<const float> frame) {
  if (frame.size() != dims_) {
    throw DataError("frame has " + std::to_string(frame.size()) + " values, expected " +
                    std::to_string(dims_));
  }
  for (float v : frame) {
    if (!std::isfinite(v)) {
      throw DataError("non-finite feature value in frame " + std::to_string(frame_count()));
    }
  }
  data_.insert(data_.end(), frame.begin(), frame.end());
}

void FeatureSequence::reserve(std::size_t frames) { data_.reserve(frames * dims_); }

double FeatureSequence::hop_s() const {
  return resolution_ == Resolution::HR ? kHrHopSeconds : kLrHopSeconds;
}

double FeatureSequence::window_s() const {
  return resolution_ == Resolution::HR ? kHrWindowSeconds : kLrWindowSeconds;
}

double cosine_distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw UsageError("cosine_distance: dimension mismatch (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
  }
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += static_cast<double>(a[k]) * b[k];
    aa += static_cast<double>(a[k]) * a[k];
    bb += static_cast<double>(b[k]) * b[k];
  }
  const double na = std::sqrt(aa);
  const double nb = std::sqrt(bb);
  if (na < kNormFloor || nb < kNormFloor) return 1.0;
  return std::clamp(1.0 - ab / (na * nb), 0.0, 2.0);
}

UnitFrames::UnitFrames(const FeatureSequence& seq)
    : unit_(seq.data().size()), zero_(seq.frame_count()), dims_(seq.dims()) {
  for (std::size_t i = 0; i < seq.frame_count(); ++i) {
    auto f = seq.frame(i);
    double nn = 0.0;
    for (float v : f) nn += static_cast<double>(v) * v;
    const double norm = std::sqrt(nn);
    if (norm < kNormFloor) {
      zero_[i] = 1;
      continue;
    }
    for (std::size_t k = 0; k < dims_; ++k) {
      unit_[i * dims_ + k] = static_cast<float>(f[k] / norm);
    }
  }
}

std::vector<float> UnitFrames::normalize(std::span<const float> query) const {
  if (query.size() != dims_) {
    throw UsageError("query has " + std::to_string(query.size()) + " values, expected " +
                     std::to_string(dims_));
  }
  double nn = 0.0;
  for (float v : query) nn += static_cast<double>(v) * v;
  const double norm = std::sqrt(nn);
  if (!(norm >= kNormFloor)) return {};
  std::vector<float> out(query.size());
  for (std::size_t k = 0; k < query.size(); ++k) out[k] = static_cast<float>(query[k] / norm);
  return out;
}

double UnitFrames::distance(std::size_t i, std::span<const float> unit_query) const {
  if (unit_query.empty() || zero_[i]) return 1.0;
  const double d = 1.0 - dot(unit_.data() + i * dims_, unit_query.data(), dims_);
  return std::clamp(d, 0.0, 2.0);
}

void UnitFrames::distances(std::span<const float> unit_query, std::vector<double>& out) const {
  out.resize(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = distance(i, unit_query);
}

LrDownsampler::LrDownsampler(std::size_t dims) : dims_(dims) {
  if (dims == 0) throw UsageError("feature dimension must be positive");
  head_.reserve(kHeadFrames * dims);
  ring_.resize(kRingFrames * dims);
}

const std::vector<double>& LrDownsampler::weights() {
  static const std::vector<double> w = [] {
    std::vector<double> v(kLrWindowFrames);
    double sum = 0.0;
    for (std::size_t n = 0; n < v.size(); ++n) {
      const double s = std::sin(std::numbers::pi * (static_cast<double>(n) + 0.5) /
                                static_cast<double>(kLrWindowFrames));
      v[n] = s * s;
      sum += v[n];
    }
    for (double& x : v) x /= sum;
    return v;
  }();
  return w;
}

std::span<const float> LrDownsampler::hr_at(std::size_t i) const {
  if (i < kHeadFrames) return {head_.data() + i * dims_, dims_};
  return {ring_.data() + (i % kRingFrames) * dims_, dims_};
}

std::vector<float> LrDownsampler::compute(std::size_t m, std::size_t total) const {
  const auto& w = weights();
  std::vector<double> acc(dims_, 0.0);
  const long long first = static_cast<long long>(m * kLrHopFrames) -
                          static_cast<long long>(kLrWindowFrames / 2);
  for (std::size_t n = 0; n < kLrWindowFrames; ++n) {
    const auto f = hr_at(reflect(first + static_cast<long long>(n), static_cast<long long>(total)));
    for (std::size_t k = 0; k < dims_; ++k) acc[k] += w[n] * f[k];
  }
  return {acc.begin(), acc.end()};
}

std::optional<std::vector<float>> LrDownsampler::push(std::span<const float> hr_frame) {
  if (finished_) throw UsageError("LrDownsampler: push after finish");
  if (hr_frame.size() != dims_) {
    throw DataError("HR frame has " + std::to_string(hr_frame.size()) + " values, expected " +
                    std::to_string(dims_));
  }
  if (seen_ < kHeadFrames) head_.insert(head_.end(), hr_frame.begin(), hr_frame.end());
  std::copy(hr_frame.begin(), hr_frame.end(), ring_.begin() + (seen_ % kRingFrames) * dims_);
  ++seen_;
  // Frame m needs HR frames up to 30m+30 (the reflected start of m=0 reaches index 30).
  if (seen_ >= (emitted_ + 1) * kLrHopFrames + 1) {
    return compute(emitted_++, seen_);
  }
  return std::nullopt;
}

std::vector<std::vector<float>> LrDownsampler::finish() {
  finished_ = true;
  std::vector<std::vector<float>> out;
  const std::size_t total = lr_frame_count(seen_);
  while (emitted_ < total) out.push_back(compute(emitted_++, seen_));
  return out;
}

FeatureSequence downsample_lr(const FeatureSequence& hr) {
  if (hr.resolution() != Resolution::HR) throw UsageError("downsample_lr expects HR features");
  FeatureSequence lr(hr.dims(), Resolution::LR, hr.sample_rate_hz());
  lr.reserve(lr_frame_count(hr.frame_count()));
  LrDownsampler ds(hr.dims());
  for (std::size_t i = 0; i < hr.frame_count(); ++i) {
    if (auto f = ds.push(hr.frame(i))) lr.append(*f);
  }
  for (const auto& f : ds.finish()) lr.append(f);
  return lr;
}

}  // namespace operatrack
