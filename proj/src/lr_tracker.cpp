#include "operatrack/lr_tracker.hpp"

#include <algorithm>

#include "operatrack/error.hpp"

namespace operatrack {

bool lr_reliability(std::span<const std::size_t> history, const LrConfig& config) {
  const std::size_t need = config.reliability_lag + config.reliability_span;
  if (config.reliability_span == 0 || history.size() < need) return false;
  const std::size_t n = history.size();
  for (std::size_t j = n - config.reliability_span; j < n; ++j) {
    const double delta = static_cast<double>(history[j]) -
                         static_cast<double>(history[j - config.reliability_lag]);
    if (delta < config.min_delta || delta > config.max_delta) return false;
  }
  return true;
}

LrTracker::LrTracker(const ScoreReference& ref, LrConfig config)
    : ref_(&ref), config_(config), n_(ref.lr().frame_count()), is_start_(n_, 0) {
  if (config_.context == 0) throw UsageError("LR context must be positive");
  for (const Part& p : ref.parts().lr_parts()) {
    is_start_[p.start] = 1;
    ends_.push_back(p.end);
  }
  std::sort(ends_.begin(), ends_.end());
  ends_.erase(std::unique(ends_.begin(), ends_.end()), ends_.end());
  seg_.assign(n_, 0.0);
  seg_next_.assign(n_, kInfCost);
}

void LrTracker::diagonal_match(std::span<const std::vector<double>> rows,
                               const std::vector<std::uint8_t>& is_start,
                               const std::vector<std::size_t>& ends, std::vector<double>& out) {
  if (rows.empty()) {
    out.clear();
    return;
  }
  const std::size_t n = rows.front().size();
  out.assign(rows.front().begin(), rows.front().end());
  std::vector<double> next(n);
  for (std::size_t l = 1; l < rows.size(); ++l) {
    double jump = kInfCost;
    for (std::size_t t : ends) jump = std::min(jump, out[t]);
    const std::vector<double>& cost = rows[l];
    if (n > 0) next[0] = kInfCost;
    for (std::size_t i = 1; i < n; ++i) {
      double pred = out[i - 1];
      if (is_start[i]) pred = std::min(pred, jump);
      next[i] = pred >= kInfCost ? kInfCost : pred + cost[i];
    }
    std::swap(out, next);
  }
}

void LrTracker::update_segment_cost() {
  double jump = kInfCost;
  for (std::size_t t : ends_) jump = std::min(jump, seg_[t]);
  for (std::size_t i = 0; i < n_; ++i) {
    double pred = seg_[i];
    if (i > 0) pred = std::min({pred, seg_[i - 1], seg_next_[i - 1]});
    if (is_start_[i]) pred = std::min(pred, jump);
    const double c = d_last_[i];
    seg_next_[i] = (pred >= kInfCost || c >= kInfCost) ? kInfCost : pred + c;
  }
  std::swap(seg_, seg_next_);
  if (config_.renormalize) {
    const double lo = *std::min_element(seg_.begin(), seg_.end());
    if (lo < kInfCost) {
      for (double& v : seg_) {
        if (v < kInfCost) v -= lo;
      }
    }
  }
}

LrReport LrTracker::push(std::span<const float> lr_frame) {
  const UnitFrames& unit = ref_->lr_unit();
  std::vector<double> row;
  unit.distances(unit.normalize(lr_frame), row);
  if (rows_.size() == config_.context) {
    std::rotate(rows_.begin(), rows_.begin() + 1, rows_.end());
    rows_.back() = std::move(row);
  } else {
    rows_.push_back(std::move(row));
  }
  diagonal_match(rows_, is_start_, ends_, d_last_);
  update_segment_cost();

  const auto best = std::min_element(seg_.begin(), seg_.end());
  const auto x = static_cast<std::size_t>(best - seg_.begin());
  history_.push_back(x);
  while (history_.size() > config_.reliability_lag + config_.reliability_span) {
    history_.pop_front();
  }

  LrReport report;
  report.lr_frame = frames_++;
  report.position = x;
  const std::size_t centre = x * kLrHopFrames;
  const std::size_t m = ref_->frame_count();
  report.interval = {centre > config_.interval_half_width ? centre - config_.interval_half_width : 0,
                     std::min(m - 1, centre + config_.interval_half_width)};
  const std::vector<std::size_t> hist(history_.begin(), history_.end());
  report.reliable = rows_.size() >= config_.context && lr_reliability(hist, config_);
  report.seed_cost = *best;
  const std::size_t lag = config_.reliability_lag;
  if (lag > 0 && hist.size() > lag) {
    report.slope = (static_cast<double>(hist.back()) - static_cast<double>(hist[hist.size() - 1 - lag])) /
                   static_cast<double>(lag);
  }
  return report;
}

}  // namespace operatrack
