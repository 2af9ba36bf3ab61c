#include "operatrack/hr_tracker.hpp"

#include <algorithm>
#include <string>

#include "operatrack/error.hpp"

namespace operatrack {

HrTracker::HrTracker(const ScoreReference& ref, HrConfig config, std::size_t start)
    : ref_(&ref), config_(config), m_(ref.frame_count()), position_(start) {
  if (start >= m_) {
    throw UsageError("HR start " + std::to_string(start) + " outside reference of " +
                     std::to_string(m_) + " frames");
  }
  if (config_.window < 2) throw UsageError("HR window must be at least 2 frames");
  prev_.assign(m_, kInfCost);
  cur_.assign(m_, kInfCost);
  prev_[start] = 0.0;
  active_prev_ = {{start, start}};
  part_ = ref.parts().index_at_or_before(start);
}

int HrTracker::current_part() const {
  return ref_->parts().empty() ? kUnannotated : ref_->parts()[part_].id;
}

FrameRange HrTracker::window_around(std::size_t p) const {
  const std::size_t half = config_.window / 2;
  return {p > half ? p - half : 0, std::min(m_ - 1, p + half)};
}

std::vector<FrameRange> HrTracker::build_active() const {
  std::vector<FrameRange> ranges{window_around(position_)};
  if (mode_ == HrMode::Hypothesis) {
    const std::size_t half = config_.window / 2;
    ranges.push_back({frontier_ > half ? frontier_ - half : 0, frontier_});
    const std::size_t width = std::max<std::size_t>(1, config_.window / 8);
    for (std::size_t s : hyp_starts_) ranges.push_back({s, std::min(m_ - 1, s + width - 1)});
    std::sort(ranges.begin(), ranges.end(),
              [](const FrameRange& a, const FrameRange& b) { return a.lo < b.lo; });
    std::vector<FrameRange> merged;
    for (const FrameRange& r : ranges) {
      if (!merged.empty() && r.lo <= merged.back().hi + 1) {
        merged.back().hi = std::max(merged.back().hi, r.hi);
      } else {
        merged.push_back(r);
      }
    }
    return merged;
  }
  return ranges;
}

void HrTracker::clear_prev() {
  for (const FrameRange& r : active_prev_) {
    std::fill(prev_.begin() + static_cast<std::ptrdiff_t>(r.lo),
              prev_.begin() + static_cast<std::ptrdiff_t>(r.hi) + 1, kInfCost);
  }
}

std::size_t HrTracker::advance(std::span<const float> target_frame, bool jumps) {
  const UnitFrames& unit = ref_->hr_unit();
  const std::vector<FrameRange> active = build_active();
  const std::vector<float> query = unit.normalize(target_frame);
  const double jump_source = jumps ? prev_[frontier_] : kInfCost;

  double best = kInfCost;
  std::size_t best_i = position_;
  std::size_t h = 0;
  for (const FrameRange& r : active) {
    for (std::size_t i = r.lo; i <= r.hi; ++i) {
      double pred = prev_[i];
      if (i > 0) pred = std::min({pred, prev_[i - 1], cur_[i - 1]});
      if (jumps) {
        while (h < hyp_starts_.size() && hyp_starts_[h] < i) ++h;
        if (h < hyp_starts_.size() && hyp_starts_[h] == i) pred = std::min(pred, jump_source);
      }
      const double v = pred >= kInfCost ? kInfCost : pred + unit.distance(i, query);
      cur_[i] = v;
      if (v < best) {
        best = v;
        best_i = i;
      }
    }
  }
  clear_prev();
  std::swap(prev_, cur_);
  active_prev_ = active;
  position_ = best_i;
  return position_;
}

std::size_t HrTracker::step_baseline(std::span<const float> target_frame) {
  if (mode_ != HrMode::Linear) throw UsageError("step_baseline requires Linear mode");
  return advance(target_frame, false);
}

std::size_t HrTracker::step_joltw(std::span<const float> target_frame) {
  if (mode_ != HrMode::Hypothesis) throw UsageError("step_joltw requires Hypothesis mode");
  return advance(target_frame, true);
}

void HrTracker::enter_hypothesis() {
  const PartTable& parts = ref_->parts();
  mode_ = HrMode::Hypothesis;
  frontier_ = parts[part_].end;
  hyp_starts_.clear();
  const std::size_t last = std::min(parts.size(), part_ + config_.transitions);
  for (std::size_t k = part_; k < last; ++k) hyp_starts_.push_back(parts[k].start);
}

std::size_t HrTracker::step(std::span<const float> target_frame) {
  if (mode_ == HrMode::Linear) {
    step_baseline(target_frame);
    if (config_.jumps && !ref_->parts().empty()) {
      const auto end = static_cast<long long>(ref_->parts()[part_].end);
      if (static_cast<long long>(position_) > end - static_cast<long long>(config_.window / 2)) {
        enter_hypothesis();
      }
    }
  } else {
    step_joltw(target_frame);
    commit_part();
  }
  return position_;
}

std::optional<int> HrTracker::commit_part() {
  if (mode_ != HrMode::Hypothesis) return std::nullopt;
  const PartTable& parts = ref_->parts();
  const std::size_t p = position_;
  const auto end = static_cast<long long>(frontier_);
  const auto pos = static_cast<long long>(p);
  if (pos <= end && pos >= end - static_cast<long long>(config_.window / 2)) return std::nullopt;

  const std::size_t q = parts.index_at_or_before(p);
  for (std::size_t k = q + 1; k-- > 0;) {
    if (parts[k].start > p) continue;
    if (parts[k].start + config_.start_region >= p) return std::nullopt;
    break;  // earlier parts start even earlier
  }

  part_ = q;
  mode_ = HrMode::Linear;
  hyp_starts_.clear();
  const FrameRange w = window_around(p);
  FrameRange keep = w;
  if (parts[q].start <= p && p <= parts[q].end) {
    keep = {std::max(w.lo, parts[q].start), std::min(w.hi, parts[q].end)};
  }
  for (const FrameRange& r : active_prev_) {
    for (std::size_t i = r.lo; i <= r.hi; ++i) {
      if (!keep.contains(i)) prev_[i] = kInfCost;
    }
  }
  return parts[q].id;
}

void HrTracker::reset(std::size_t target, double seed_cost) {
  if (target >= m_) {
    throw UsageError("HR reset target " + std::to_string(target) + " outside reference of " +
                     std::to_string(m_) + " frames");
  }
  clear_prev();
  prev_[target] = std::min(seed_cost, kInfCost);
  active_prev_ = {{target, target}};
  position_ = target;
  mode_ = HrMode::Linear;
  hyp_starts_.clear();
  part_ = ref_->parts().index_at_or_before(target);
}

}  // namespace operatrack
