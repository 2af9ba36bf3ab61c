#include "operatrack/integrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <json.hpp>

#include "operatrack/error.hpp"

namespace operatrack {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - since).count();
}

std::size_t middle(const FrameRange& r) { return r.lo + (r.hi - r.lo) / 2; }

}  // namespace

std::string_view to_string(Model m) {
  switch (m) {
    case Model::Baseline: return "baseline";
    case Model::Joltw: return "joltw";
    case Model::BaselineLr: return "baseline+lr";
    case Model::JoltwLr: return "joltw+lr";
  }
  return "?";
}

Model parse_model(std::string_view name) {
  for (Model m : {Model::Baseline, Model::Joltw, Model::BaselineLr, Model::JoltwLr}) {
    if (to_string(m) == name) return m;
  }
  throw UsageError("unknown model '" + std::string(name) +
                   "' (expected baseline, joltw, baseline+lr or joltw+lr)");
}

bool uses_jumps(Model m) { return m == Model::Joltw || m == Model::JoltwLr; }
bool uses_lr(Model m) { return m == Model::BaselineLr || m == Model::JoltwLr; }

Decision arbitrate(std::size_t hr_pos, const LrReport* lr, const ArbitrationRules& rules) {
  Decision d{hr_pos, hr_pos, false};
  if (lr == nullptr) return d;
  if (!lr->reliable) {
    if (rules.literal_rf0) d.final_pos = middle(lr->interval);
    return d;
  }
  if (lr->interval.contains(hr_pos) || !rules.allow_reset) return d;
  d.final_pos = middle(lr->interval);
  d.reset = true;
  return d;
}

Decision integrate_step(HrTracker& hr, const LrReport* lr, std::span<const float> target_frame,
                        const ArbitrationRules& rules) {
  hr.step(target_frame);
  const Decision d = arbitrate(hr.position(), lr, rules);
  if (d.reset) hr.reset(d.final_pos, lr->seed_cost);
  return d;
}

double TimingStats::mean_ms(const std::vector<std::int64_t>& ns) {
  if (ns.empty()) return 0.0;
  long double sum = 0;
  for (auto v : ns) sum += v;
  return static_cast<double>(sum / ns.size()) / 1e6;
}

double TimingStats::percentile_ms(std::vector<std::int64_t> ns, double q) {
  if (ns.empty()) return 0.0;
  const auto k = static_cast<std::size_t>(
      std::clamp(std::ceil(q * static_cast<double>(ns.size())) - 1.0, 0.0,
                 static_cast<double>(ns.size() - 1)));
  std::nth_element(ns.begin(), ns.begin() + static_cast<std::ptrdiff_t>(k), ns.end());
  return static_cast<double>(ns[k]) / 1e6;
}

Integrator::Integrator(const ScoreReference& ref, TrackingConfig config)
    : ref_(&ref),
      config_(config),
      hr_(ref, [&] {
        HrConfig h = config.hr;
        h.jumps = uses_jumps(config.model);
        return h;
      }(), config.start) {
  config_.hr.jumps = uses_jumps(config_.model);
  if (uses_lr(config_.model)) {
    lr_.emplace(ref, config_.lr);
    downsampler_.emplace(ref.hr().dims());
  }
}

PositionReport Integrator::push(std::span<const float> target_frame) {
  const std::size_t j = frames_++;
  if (lr_) {
    const auto t0 = Clock::now();
    if (auto frame = downsampler_->push(target_frame)) {
      held_ = lr_->push(*frame);
      timing_.lr_ns.push_back(elapsed_ns(t0));
    }
  }

  std::optional<LrReport> current = held_;
  if (current && config_.compensate_lr_latency) {
    const double m = static_cast<double>(ref_->frame_count());
    const double lag = static_cast<double>(j - current->lr_frame * kLrHopFrames);
    const double slope = current->reliable ? current->slope : 1.0;
    const double half_context = 0.5 * static_cast<double>(config_.lr.context - 1);
    const double x = static_cast<double>(current->position) + half_context * (slope - 1.0);
    const double centre =
        std::clamp(std::round(x * kLrHopFrames + slope * lag), 0.0, m - 1.0);
    const auto c = static_cast<std::size_t>(centre);
    const std::size_t hw = config_.lr.interval_half_width;
    current->interval = {c > hw ? c - hw : 0, std::min(ref_->frame_count() - 1, c + hw)};
  }

  const std::size_t before = hr_.position();
  const auto t0 = Clock::now();
  hr_.step(target_frame);
  const std::size_t after = hr_.position();
  if (frames_ > 1 && (after > before ? after - before : before - after) > hr_.config().window / 2) {
    any_jump_ = true;
    last_jump_ = j;
  }
  ArbitrationRules rules;
  rules.literal_rf0 = config_.literal_rf0;
  rules.allow_reset = (!any_reset_ || j - last_reset_ >= config_.refractory_frames) &&
                      (!any_jump_ || j - last_jump_ >= config_.jump_grace_frames);
  const LrReport* lr = current ? &*current : nullptr;
  const Decision d = arbitrate(after, lr, rules);
  if (d.reset) hr_.reset(d.final_pos, lr->seed_cost);
  timing_.hr_ns.push_back(elapsed_ns(t0));
  if (d.reset) {
    any_reset_ = true;
    last_reset_ = j;
  }

  PositionReport r;
  r.target_frame = j;
  r.hr_pos = d.hr_pos;
  if (current) {
    r.lr_pos = current->position;
    r.lr_interval = current->interval;
    r.rf = current->reliable;
  }
  r.final_pos = d.final_pos;
  const Location loc = ref_->locate(d.final_pos);
  r.part_id = loc.part_id;
  r.bar_id = loc.bar_id;
  r.reset = d.reset;
  return r;
}

std::vector<PositionReport> run_tracking(const ScoreReference& ref, const FeatureSequence& target,
                                         const TrackingConfig& config, TimingStats* timing) {
  if (target.frame_count() > 0 && target.dims() != ref.hr().dims()) {
    throw DataError("target has " + std::to_string(target.dims()) + " dims, reference has " +
                    std::to_string(ref.hr().dims()));
  }
  Integrator integrator(ref, config);
  std::vector<PositionReport> out;
  out.reserve(target.frame_count());
  for (std::size_t j = 0; j < target.frame_count(); ++j) out.push_back(integrator.push(target.frame(j)));
  if (timing) *timing = integrator.timing();
  return out;
}

std::vector<LrReport> run_lr_only(const ScoreReference& ref, const FeatureSequence& target,
                                  const LrConfig& config) {
  std::vector<LrReport> out;
  if (target.empty()) return out;
  const FeatureSequence lr = downsample_lr(target);
  LrTracker tracker(ref, config);
  out.reserve(lr.frame_count());
  for (std::size_t m = 0; m < lr.frame_count(); ++m) out.push_back(tracker.push(lr.frame(m)));
  return out;
}

std::string to_json_line(const PositionReport& r) {
  nlohmann::ordered_json j;
  j["target_frame"] = r.target_frame;
  j["hr_pos"] = r.hr_pos;
  j["lr_pos"] = r.lr_pos ? nlohmann::ordered_json(*r.lr_pos) : nlohmann::ordered_json(nullptr);
  j["lr_interval"] = r.lr_interval
                         ? nlohmann::ordered_json::array({r.lr_interval->lo, r.lr_interval->hi})
                         : nlohmann::ordered_json(nullptr);
  j["rf"] = r.rf ? 1 : 0;
  j["final_pos"] = r.final_pos;
  j["part_id"] = r.part_id;
  j["bar_id"] = r.bar_id;
  j["reset_flag"] = r.reset;
  return j.dump();
}

PositionReport parse_json_line(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    PositionReport r;
    r.target_frame = j.at("target_frame").get<std::size_t>();
    r.hr_pos = j.at("hr_pos").get<std::size_t>();
    if (!j.at("lr_pos").is_null()) r.lr_pos = j.at("lr_pos").get<std::size_t>();
    if (j.contains("lr_interval") && !j.at("lr_interval").is_null()) {
      r.lr_interval = FrameRange{j["lr_interval"].at(0).get<std::size_t>(),
                                 j["lr_interval"].at(1).get<std::size_t>()};
    }
    r.rf = j.at("rf").get<int>() != 0;
    r.final_pos = j.at("final_pos").get<std::size_t>();
    r.part_id = j.at("part_id").get<int>();
    r.bar_id = j.at("bar_id").get<int>();
    r.reset = j.at("reset_flag").get<bool>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report line: ") + e.what());
  }
}

}  // namespace operatrack
