#include "operatrack/evaluation.hpp"

#include <cstdio>
#include <json.hpp>

#include "operatrack/error.hpp"

namespace operatrack {

namespace {

double percent(std::size_t hits, std::size_t n) {
  return n == 0 ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(n);
}

void check_lengths(std::size_t estimates, std::size_t truth) {
  if (estimates != truth) {
    throw DataError("alignment has " + std::to_string(estimates) + " frames, truth has " +
                    std::to_string(truth));
  }
}

}  // namespace

void AccuracyCounter::add(std::size_t estimated_frame, const Location& truth) {
  add(annotations_->locate(estimated_frame), truth);
}

void AccuracyCounter::add(const Location& estimate, const Location& truth) {
  if (!truth.annotated()) return;
  ++counted_;
  if (!estimate.annotated()) return;
  if (estimate.part_id == truth.part_id) ++part_hits_;
  if (estimate.bar_id == truth.bar_id) ++bar_hits_;
  const auto re = annotations_->bars.rank_of(estimate.bar_id);
  const auto rt = annotations_->bars.rank_of(truth.bar_id);
  if (re && rt && (*re > *rt ? *re - *rt : *rt - *re) <= kBarTolerance) ++at5_hits_;
}

void AccuracyCounter::merge(const AccuracyCounter& other) {
  part_hits_ += other.part_hits_;
  bar_hits_ += other.bar_hits_;
  at5_hits_ += other.at5_hits_;
  counted_ += other.counted_;
}

Metrics AccuracyCounter::metrics() const {
  return {percent(part_hits_, counted_), percent(bar_hits_, counted_), percent(at5_hits_, counted_),
          counted_};
}

Metrics evaluate(std::span<const std::size_t> estimated_frames, const GroundTruth& truth,
                 const Annotations& annotations) {
  check_lengths(estimated_frames.size(), truth.size());
  AccuracyCounter counter(annotations);
  for (std::size_t j = 0; j < truth.size(); ++j) counter.add(estimated_frames[j], truth[j]);
  return counter.metrics();
}

Metrics evaluate(std::span<const PositionReport> reports, const GroundTruth& truth,
                 const Annotations& annotations) {
  check_lengths(reports.size(), truth.size());
  AccuracyCounter counter(annotations);
  for (std::size_t j = 0; j < truth.size(); ++j) counter.add(reports[j].final_pos, truth[j]);
  return counter.metrics();
}

Metrics evaluate_masked(std::span<const std::size_t> estimated_frames, const GroundTruth& truth,
                        const Annotations& annotations, const std::vector<bool>& mask) {
  check_lengths(estimated_frames.size(), truth.size());
  check_lengths(mask.size(), truth.size());
  AccuracyCounter counter(annotations);
  for (std::size_t j = 0; j < truth.size(); ++j) {
    if (mask[j]) counter.add(estimated_frames[j], truth[j]);
  }
  return counter.metrics();
}

Metrics evaluate_lr(std::span<const LrReport> reports, const GroundTruth& truth,
                    const Annotations& annotations, bool reliable_only) {
  check_lengths(reports.size(), lr_frame_count(truth.size()));
  AccuracyCounter counter(annotations);
  for (const LrReport& r : reports) {
    if (reliable_only && !r.reliable) continue;
    counter.add(r.position * kLrHopFrames, truth[r.lr_frame * kLrHopFrames]);
  }
  return counter.metrics();
}

std::string metrics_json(const std::string& model, const Metrics& m) {
  nlohmann::ordered_json j;
  j["model"] = model;
  j["part_acc"] = m.part_acc;
  j["bar_acc"] = m.bar_acc;
  j["at5_acc"] = m.at5_acc;
  j["frames"] = m.frames;
  return j.dump();
}

std::string metrics_table(const std::vector<std::pair<std::string, Metrics>>& rows) {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof line, "%-14s %9s %9s %9s %10s\n", "model", "part%", "bar%", "@5bars%",
                "frames");
  out += line;
  for (const auto& [name, m] : rows) {
    std::snprintf(line, sizeof line, "%-14s %9.2f %9.2f %9.2f %10zu\n", name.c_str(), m.part_acc,
                  m.bar_acc, m.at5_acc, m.frames);
    out += line;
  }
  return out;
}

}  // namespace operatrack
