#include "operatrack/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "operatrack/error.hpp"

namespace operatrack {

namespace {

double catmull_rom(double p0, double p1, double p2, double p3, double u) {
  return 0.5 * (2.0 * p1 + (-p0 + p2) * u + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u * u +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u * u * u);
}

std::vector<float> gaussian_points(std::size_t count, std::mt19937_64& rng, double sigma = 1.0) {
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<float> v(count);
  for (float& x : v) x = static_cast<float>(g(rng));
  return v;
}

std::size_t draw(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, std::max(lo, hi))(rng);
}

void add_noise(std::span<float> frame, double sigma, std::mt19937_64& rng) {
  if (sigma <= 0) return;
  std::normal_distribution<double> g(0.0, sigma);
  for (float& x : frame) x += static_cast<float>(g(rng));
}

// First frame whose time reaches `onset`.
std::size_t first_reaching(const std::vector<double>& time, double onset) {
  return static_cast<std::size_t>(std::lower_bound(time.begin(), time.end(), onset) - time.begin());
}

}  // namespace

ContentModel::ContentModel(std::size_t length, std::size_t dims,
                           std::vector<std::size_t> part_starts, std::uint64_t seed,
                           double slow_spacing, double fast_spacing, double part_offset)
    : length_(length),
      dims_(dims),
      slow_spacing_(slow_spacing),
      fast_spacing_(fast_spacing),
      part_starts_(std::move(part_starts)) {
  if (part_starts_.empty() || part_starts_.front() != 0) {
    throw UsageError("content model needs part starts beginning at frame 0");
  }
  std::mt19937_64 rng(seed);
  const auto points = [&](double spacing) {
    return static_cast<std::size_t>(static_cast<double>(length) / spacing) + 4;
  };
  slow_ = gaussian_points(points(slow_spacing) * dims, rng);
  fast_ = gaussian_points(points(fast_spacing) * dims, rng);
  offsets_ = gaussian_points(part_starts_.size() * dims, rng, part_offset);
}

void ContentModel::add_curve(const std::vector<float>& points, double spacing, double t,
                             std::span<float> out) {
  const std::size_t dims = out.size();
  const std::size_t count = points.size() / dims;
  const double s = t / spacing + 1.0;  // control point 0 lies before t = 0
  const auto k = std::min(static_cast<std::size_t>(s), count - 3);
  const double u = s - static_cast<double>(k);
  for (std::size_t d = 0; d < dims; ++d) {
    const auto at = [&](std::size_t idx) { return static_cast<double>(points[idx * dims + d]); };
    out[d] += static_cast<float>(catmull_rom(at(k - 1), at(k), at(k + 1), at(k + 2), u));
  }
}

void ContentModel::eval(double t, std::span<float> out) const {
  t = std::clamp(t, 0.0, static_cast<double>(length_ - 1));
  std::fill(out.begin(), out.end(), 0.0f);
  add_curve(slow_, slow_spacing_, t, out);
  add_curve(fast_, fast_spacing_, t, out);
  const auto part = static_cast<std::size_t>(
      std::upper_bound(part_starts_.begin(), part_starts_.end(), static_cast<std::size_t>(t)) -
      part_starts_.begin() - 1);
  for (std::size_t d = 0; d < dims_; ++d) out[d] += offsets_[part * dims_ + d];
}

SyntheticScore make_synthetic_score(const SyntheticScoreParams& params, std::uint64_t seed) {
  if (params.parts == 0 || params.dims == 0) throw UsageError("synthetic score needs parts and dims");
  if (params.min_bar_frames == 0 || params.min_part_frames < params.min_bar_frames) {
    throw UsageError("synthetic parts must hold at least one bar");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> lengths(params.parts);
  for (auto& len : lengths) len = draw(rng, params.min_part_frames, params.max_part_frames);
  if (params.total_frames > 0) {
    double sum = 0;
    for (auto len : lengths) sum += static_cast<double>(len);
    std::size_t acc = 0;
    double run = 0;
    for (std::size_t k = 0; k < lengths.size(); ++k) {
      run += static_cast<double>(lengths[k]);
      const auto upto = static_cast<std::size_t>(
          std::llround(run / sum * static_cast<double>(params.total_frames)));
      lengths[k] = upto - acc;
      acc = upto;
    }
  }

  std::vector<Part> parts;
  std::vector<Bar> bars;
  std::vector<std::size_t> starts;
  std::size_t at = 0;
  int bar_id = 1;
  for (std::size_t k = 0; k < lengths.size(); ++k) {
    if (lengths[k] == 0) throw UsageError("synthetic part of zero length");
    const int id = static_cast<int>(k) + 1;
    parts.push_back({id, "part_" + std::to_string(id), at, at + lengths[k] - 1});
    starts.push_back(at);
    std::size_t b = at;
    while (b < at + lengths[k]) {
      bars.push_back({bar_id++, id, b});
      b += draw(rng, params.min_bar_frames, params.max_bar_frames);
      if (b + params.min_bar_frames > at + lengths[k]) break;
    }
    at += lengths[k];
  }
  const std::size_t m = at;

  SyntheticScore score;
  score.content = ContentModel(m, params.dims, starts, rng(), params.slow_spacing,
                               params.fast_spacing, params.part_offset);
  std::vector<float> clean(m * params.dims);
  double sq = 0;
  for (std::size_t t = 0; t < m; ++t) {
    std::span<float> row(clean.data() + t * params.dims, params.dims);
    score.content.eval(static_cast<double>(t), row);
    for (float x : row) sq += static_cast<double>(x) * x;
  }
  score.rms = std::sqrt(sq / static_cast<double>(clean.size()));
  std::mt19937_64 noise_rng(rng());
  for (std::size_t t = 0; t < m; ++t) {
    add_noise({clean.data() + t * params.dims, params.dims}, params.noise * score.rms, noise_rng);
  }
  score.features = FeatureSequence(std::move(clean), params.dims, Resolution::HR, 0.0);
  score.recitative.assign(params.parts, false);
  std::bernoulli_distribution recitative(std::clamp(params.recitative_ratio, 0.0, 1.0));
  for (std::size_t k = 1; k < params.parts; ++k) score.recitative[k] = recitative(rng);
  PartTable table(std::move(parts));
  BarAnnotations bar_table(std::move(bars), table);
  score.annotations = Annotations{std::move(table), std::move(bar_table)};
  return score;
}

Performance perform(const SyntheticScore& score, const PerformanceParams& params,
                    std::uint64_t seed) {
  if (!(params.min_rate > 0 && params.min_rate <= params.max_rate)) {
    throw UsageError("performance tempo bounds must satisfy 0 < min <= max");
  }
  std::mt19937_64 rng(seed);
  const double m = static_cast<double>(score.content.length());
  const double mid = 0.5 * (params.min_rate + params.max_rate);
  const double half = 0.5 * (params.max_rate - params.min_rate);
  const double base = std::uniform_real_distribution<double>(mid - 0.5 * half, mid + 0.5 * half)(rng);
  const auto tempo_points =
      gaussian_points(static_cast<std::size_t>(2.0 * m / params.min_rate / params.rate_spacing) + 8,
                      rng, 0.5 * half);

  Performance perf;
  double tau = 0.0;
  for (std::size_t n = 0; tau <= m - 1.0; ++n) {
    perf.score_time.push_back(tau);
    const double s = static_cast<double>(n) / params.rate_spacing + 1.0;
    const auto k = std::min(static_cast<std::size_t>(s), tempo_points.size() - 3);
    const double u = s - static_cast<double>(k);
    const double r = base + catmull_rom(tempo_points[k - 1], tempo_points[k], tempo_points[k + 1],
                                        tempo_points[k + 2], u);
    tau += std::clamp(r, params.min_rate, params.max_rate);
  }

  const std::size_t dims = score.content.dims();
  const std::size_t frames = perf.score_time.size();
  const PartTable& score_parts = score.annotations.parts;
  std::vector<std::size_t> starts;
  for (const Part& p : score_parts.parts()) starts.push_back(p.start);
  const ContentModel other(score.content.length(), dims, starts, rng());
  const double s = std::clamp(params.recitative_similarity, 0.0, 1.0);
  std::vector<float> data(frames * dims);
  std::vector<float> alt(dims);
  std::mt19937_64 noise_rng(rng());
  for (std::size_t n = 0; n < frames; ++n) {
    std::span<float> row(data.data() + n * dims, dims);
    const double t = perf.score_time[n];
    score.content.eval(t, row);
    const auto k = score_parts.index_containing(static_cast<std::size_t>(t));
    if (k && *k < score.recitative.size() && score.recitative[*k]) {
      other.eval(t, alt);
      for (std::size_t d = 0; d < dims; ++d) {
        row[d] = static_cast<float>(s * row[d] + (1.0 - s) * alt[d]);
      }
    }
    add_noise(row, params.noise * score.rms, noise_rng);
  }
  perf.features = FeatureSequence(std::move(data), dims, Resolution::HR, 0.0);

  std::vector<Part> parts;
  for (const Part& p : score.annotations.parts.parts()) {
    parts.push_back({p.id, p.name, first_reaching(perf.score_time, static_cast<double>(p.start)), 0});
  }
  for (std::size_t k = 0; k < parts.size(); ++k) {
    parts[k].end = k + 1 < parts.size() ? parts[k + 1].start - 1 : frames - 1;
  }
  std::vector<Bar> bars;
  for (const Bar& b : score.annotations.bars.bars()) {
    bars.push_back({b.id, b.part_id, first_reaching(perf.score_time, static_cast<double>(b.onset))});
  }
  PartTable table(std::move(parts));
  BarAnnotations bar_table(std::move(bars), table);
  perf.annotations = Annotations{std::move(table), std::move(bar_table)};
  perf.truth.reserve(frames);
  for (std::size_t n = 0; n < frames; ++n) perf.truth.push_back(perf.annotations.locate(n));
  return perf;
}

}  // namespace operatrack
