#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "operatrack/audio_io.hpp"
#include "operatrack/error.hpp"
#include "operatrack/evaluation.hpp"
#include "operatrack/feature_io.hpp"
#include "operatrack/integrator.hpp"
#include "operatrack/mfcc.hpp"
#include "operatrack/mismatch_sim.hpp"
#include "operatrack/offline_dtw.hpp"
#include "operatrack/synthetic.hpp"

namespace fs = std::filesystem;
using namespace operatrack;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitBudget = 4;

// Mean / p99 HR step and mean LR step limits in milliseconds.
constexpr double kHrMeanBudgetMs = 10.0;
constexpr double kHrP99BudgetMs = 20.0;
constexpr double kLrMeanBudgetMs = 100.0;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

fs::path lr_path(const fs::path& hr) {
  return hr.parent_path() / (hr.stem().string() + "_lr" + hr.extension().string());
}

std::vector<PositionReport> read_reports(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<PositionReport> reports;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) reports.push_back(parse_json_line(line));
  }
  return reports;
}

// ---- extract

struct ExtractArgs {
  std::string audio;
  std::string out;
  bool lr = false;
};

int run_extract(const ExtractArgs& a) {
  if (!fs::exists(a.audio)) throw DataError("no such audio file: " + a.audio);
  const PcmAudio audio = read_wav(a.audio);
  MfccResult r = extract_mfcc(audio.samples, audio.sample_rate_hz);
  for (const FrameDiagnostic& d : r.diagnostics) {
    std::cerr << "frame " << d.index << ": " << d.message << '\n';
  }
  write_features(a.out, r.features);
  std::cerr << "wrote " << r.features.frame_count() << " HR frames to " << a.out << '\n';
  if (a.lr) {
    const FeatureSequence lr = downsample_lr(r.features);
    write_features(lr_path(a.out), lr);
    std::cerr << "wrote " << lr.frame_count() << " LR frames to " << lr_path(a.out).string()
              << '\n';
  }
  return 0;
}

// ---- synth

struct SynthArgs {
  std::string out;
  std::uint64_t seed = 1;
  SyntheticScoreParams score;
  PerformanceParams perf;
};

int run_synth(const SynthArgs& a) {
  const SyntheticScore score = make_synthetic_score(a.score, a.seed);
  const Performance perf = perform(score, a.perf, a.seed + 1);
  const fs::path ref_dir = fs::path(a.out) / "reference";
  const fs::path perf_dir = fs::path(a.out) / "performance";
  fs::create_directories(ref_dir);
  fs::create_directories(perf_dir);
  write_features(ref_dir / "features.f32", score.features);
  save_annotations(ref_dir / "annotations.csv", score.annotations);
  write_features(perf_dir / "features.f32", perf.features);
  save_annotations(perf_dir / "annotations.csv", perf.annotations);
  save_truth(perf_dir / "truth.csv", perf.truth);
  std::cerr << "reference " << score.features.frame_count() << " frames, performance "
            << perf.features.frame_count() << " frames\n";
  return 0;
}

// ---- simulate

struct SimulateArgs {
  std::string features;
  std::string annotations;
  std::string out;
  std::size_t versions = 10;
  std::uint64_t seed = 1;
  GenerateParams gen;
};

int run_simulate(const SimulateArgs& a) {
  const FeatureSequence source = read_features(a.features);
  const Annotations ann = load_annotations(a.annotations, source.frame_count());
  fs::create_directories(a.out);
  std::mt19937_64 seeds(a.seed);
  for (std::size_t v = 0; v < a.versions; ++v) {
    const std::uint64_t seed = seeds();
    std::vector<std::string> warnings;
    const EditScript script = generate_script(ann.parts, seed, a.gen, &warnings);
    for (const std::string& w : warnings) std::cerr << "version " << v << ": " << w << '\n';
    const EditResult r = apply_script(source, ann, script);
    char name[32];
    std::snprintf(name, sizeof name, "version_%02zu", v);
    const fs::path dir = fs::path(a.out) / name;
    fs::create_directories(dir);
    write_features(dir / "features.f32", r.modified);
    write_text(dir / "script.json", script_to_json(script) + "\n");
    save_truth(dir / "truth.csv", r.truth);
  }
  return 0;
}

// ---- track

struct TrackArgs {
  std::string ref_dir;
  std::string ref_features;
  std::string ref_annotations;
  std::string target;
  bool live = false;
  unsigned live_rate = 22050;
  std::string model = "joltw+lr";
  std::size_t window = 4000;
  std::size_t start = 0;
  bool literal_rf0 = false;
  bool no_compensation = false;
  std::size_t refractory = 30;
  std::string out;
  std::string timing;
  bool strict = false;
};

ScoreReference load_ref(const TrackArgs& a) {
  fs::path features = a.ref_features;
  fs::path annotations = a.ref_annotations;
  if (!a.ref_dir.empty()) {
    if (features.empty()) features = fs::path(a.ref_dir) / "features.f32";
    if (annotations.empty()) annotations = fs::path(a.ref_dir) / "annotations.csv";
  }
  if (features.empty() || annotations.empty()) {
    throw UsageError("reference needs --ref-dir or both --ref-features and --ref-annotations");
  }
  return load_reference(features, annotations);
}

int run_track(const TrackArgs& a) {
  TrackingConfig config;
  config.model = parse_model(a.model);
  config.hr.window = a.window;
  config.start = a.start;
  config.literal_rf0 = a.literal_rf0;
  config.compensate_lr_latency = !a.no_compensation;
  config.refractory_frames = a.refractory;
  if (a.live == !a.target.empty()) throw UsageError("give exactly one of --target or --live");

  const ScoreReference ref = load_ref(a);
  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out, std::ios::binary);
    if (!file) throw DataError("cannot write " + a.out);
  }
  std::ostream& out = a.out.empty() ? std::cout : file;

  Integrator integrator(ref, config);
  if (a.live) {
    MfccExtractor extractor(a.live_rate);
    if (extractor.dims() != ref.hr().dims()) {
      throw DataError("reference has " + std::to_string(ref.hr().dims()) +
                      " dims, live features have " + std::to_string(extractor.dims()));
    }
    std::vector<std::int16_t> raw(1024);
    std::vector<FeatureFrame> frames;
    auto emit = [&] {
      for (const FeatureFrame& f : frames) {
        out << to_json_line(integrator.push(f.values)) << '\n';
      }
      out.flush();
      frames.clear();
    };
    for (;;) {
      const std::size_t got = std::fread(raw.data(), sizeof(std::int16_t), raw.size(), stdin);
      if (got == 0) break;
      const std::vector<float> pcm = pcm16_to_float({raw.data(), got});
      extractor.push(pcm, frames);
      emit();
    }
    extractor.finish(frames);
    emit();
  } else {
    const FeatureSequence target = read_features(a.target);
    if (target.frame_count() > 0 && target.dims() != ref.hr().dims()) {
      throw DataError("target has " + std::to_string(target.dims()) + " dims, reference has " +
                      std::to_string(ref.hr().dims()));
    }
    for (std::size_t j = 0; j < target.frame_count(); ++j) {
      out << to_json_line(integrator.push(target.frame(j))) << '\n';
    }
  }
  out.flush();
  if (!out) throw DataError("write failed");

  const TimingStats& t = integrator.timing();
  const double hr_mean = TimingStats::mean_ms(t.hr_ns);
  const double hr_p99 = TimingStats::percentile_ms(t.hr_ns, 0.99);
  const double lr_mean = TimingStats::mean_ms(t.lr_ns);
  if (!a.timing.empty()) {
    std::ostringstream ss;
    ss << "{\"hr_steps\":" << t.hr_ns.size() << ",\"hr_mean_ms\":" << hr_mean
       << ",\"hr_p99_ms\":" << hr_p99 << ",\"lr_steps\":" << t.lr_ns.size()
       << ",\"lr_mean_ms\":" << lr_mean << "}\n";
    write_text(a.timing, ss.str());
  }
  if (a.strict && (hr_mean >= kHrMeanBudgetMs || hr_p99 >= kHrP99BudgetMs ||
                   lr_mean >= kLrMeanBudgetMs)) {
    std::cerr << "real-time budget exceeded: HR mean " << hr_mean << " ms, HR p99 " << hr_p99
              << " ms, LR mean " << lr_mean << " ms\n";
    return kExitBudget;
  }
  return 0;
}

// ---- evaluate

struct EvaluateArgs {
  std::string reports;
  std::string truth;
  std::string annotations;
  std::string aggregate;
  std::string reports_name = "track.jsonl";
  std::string model;
  std::string json;
  bool rf_only = false;
  bool lr_position = false;
};

void count_reports(AccuracyCounter& counter, const std::vector<PositionReport>& reports,
                   const GroundTruth& truth, const EvaluateArgs& a, const std::string& source) {
  if (reports.size() != truth.size()) {
    throw DataError(source + ": " + std::to_string(reports.size()) + " reports for " +
                    std::to_string(truth.size()) + " truth frames");
  }
  for (std::size_t j = 0; j < reports.size(); ++j) {
    const PositionReport& r = reports[j];
    if (a.rf_only && !r.rf) continue;
    if (a.lr_position) {
      if (!r.lr_pos) continue;
      counter.add(*r.lr_pos * kLrHopFrames, truth[j]);
    } else {
      counter.add(r.final_pos, truth[j]);
    }
  }
}

int run_evaluate(const EvaluateArgs& a) {
  const Annotations ann = load_annotations(a.annotations);
  AccuracyCounter counter(ann);
  if (!a.aggregate.empty()) {
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(a.aggregate)) {
      if (e.is_directory() && e.path().filename().string().rfind("version_", 0) == 0) {
        dirs.push_back(e.path());
      }
    }
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw DataError("no version directories under " + a.aggregate);
    for (const fs::path& d : dirs) {
      count_reports(counter, read_reports(d / a.reports_name), load_truth(d / "truth.csv"), a,
                    d.string());
    }
  } else {
    if (a.reports.empty() || a.truth.empty()) {
      throw UsageError("evaluate needs --reports and --truth, or --aggregate");
    }
    count_reports(counter, read_reports(a.reports), load_truth(a.truth), a, a.reports);
  }
  const Metrics m = counter.metrics();
  const std::string model = a.model.empty() ? "unknown" : a.model;
  std::cout << metrics_table({{model, m}});
  if (!a.json.empty()) write_text(a.json, metrics_json(model, m) + "\n");
  return 0;
}

// ---- oracle

struct OracleArgs {
  std::string reference;
  std::string target;
  std::string annotations;
  std::string out;
  std::size_t start = 0;
  bool closed_end = false;
  std::size_t cap = 64'000'000;
};

int run_oracle(const OracleArgs& a) {
  const FeatureSequence ref = read_features(a.reference);
  const FeatureSequence target = read_features(a.target);
  std::optional<Annotations> ann;
  OfflineDtwOptions opt;
  if (!a.annotations.empty()) {
    ann = load_annotations(a.annotations, ref.frame_count());
    opt.jumps = &ann->parts;
  }
  opt.start = a.start;
  opt.open_end = !a.closed_end;
  opt.cell_cap = a.cap;
  const OfflineAlignment al = offline_dtw(ref, target, opt);
  std::ostringstream ss;
  ss << "frame,path,forward\n";
  for (std::size_t j = 0; j < al.path.size(); ++j) {
    ss << j << ',' << al.path[j] << ',' << al.forward[j] << '\n';
  }
  if (a.out.empty()) {
    std::cout << ss.str();
  } else {
    write_text(a.out, ss.str());
  }
  std::cerr << "cost " << al.cost << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Opera score following: feature extraction, corpus simulation, tracking and evaluation"};
  app.set_config("--config", "", "key=value file mirroring the flags; flags win");
  app.require_subcommand(1);

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "MFCC features from a WAV file");
  extract->add_option("audio", ex.audio, "input WAV")->required();
  extract->add_option("out", ex.out, "output feature file")->required();
  extract->add_flag("--lr", ex.lr, "also write the LR features next to the output");

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "synthetic annotated reference and performance");
  synth->add_option("--out", sy.out, "output directory")->required();
  synth->add_option("--seed", sy.seed);
  synth->add_option("--parts", sy.score.parts);
  synth->add_option("--min-part-frames", sy.score.min_part_frames);
  synth->add_option("--max-part-frames", sy.score.max_part_frames);
  synth->add_option("--total-frames", sy.score.total_frames);
  synth->add_option("--dims", sy.score.dims);
  synth->add_option("--noise", sy.score.noise, "noise sigma relative to the feature RMS");
  synth->add_option("--min-rate", sy.perf.min_rate);
  synth->add_option("--max-rate", sy.perf.max_rate);

  SimulateArgs si;
  auto* simulate = app.add_subcommand("simulate", "structurally modified versions of a performance");
  simulate->add_option("--features", si.features)->required();
  simulate->add_option("--annotations", si.annotations)->required();
  simulate->add_option("--out", si.out)->required();
  simulate->add_option("--versions", si.versions);
  simulate->add_option("--seed", si.seed);
  simulate->add_option("--applause-every", si.gen.applause_every);
  simulate->add_option("--insertions", si.gen.insertions);

  TrackArgs tr;
  auto* track = app.add_subcommand("track", "follow a target against an annotated reference");
  track->add_option("--ref-dir", tr.ref_dir, "directory with features.f32 and annotations.csv");
  track->add_option("--ref-features", tr.ref_features);
  track->add_option("--ref-annotations", tr.ref_annotations);
  track->add_option("--target", tr.target, "target feature file");
  track->add_flag("--live", tr.live, "read mono s16le PCM from standard input");
  track->add_option("--live-rate", tr.live_rate, "sample rate of the live PCM");
  track->add_option("--model", tr.model, "baseline | joltw | baseline+lr | joltw+lr");
  track->add_option("--c", tr.window, "HR window in frames");
  track->add_option("--start", tr.start, "reference frame to start from");
  track->add_flag("--literal-rf0", tr.literal_rf0, "report the LR position while rf = 0");
  track->add_flag("--no-latency-compensation", tr.no_compensation);
  track->add_option("--refractory", tr.refractory, "HR frames between resets");
  track->add_option("--out", tr.out, "JSON-lines output (default stdout)");
  track->add_option("--timing", tr.timing, "write step timing JSON");
  track->add_flag("--strict", tr.strict, "exit 4 when the real-time budget is exceeded");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "part, bar and @5-bars accuracy");
  evaluate->add_option("--reports", ev.reports, "JSON-lines reports");
  evaluate->add_option("--truth", ev.truth, "truth CSV");
  evaluate->add_option("--annotations", ev.annotations, "reference annotations")->required();
  evaluate->add_option("--aggregate", ev.aggregate, "pool every version_* directory under this");
  evaluate->add_option("--reports-name", ev.reports_name, "report file name inside each version");
  evaluate->add_option("--model", ev.model, "label for the output");
  evaluate->add_option("--json", ev.json, "write metrics JSON");
  evaluate->add_flag("--rf-only", ev.rf_only, "count only frames with rf = 1");
  evaluate->add_flag("--lr-position", ev.lr_position, "score the LR position instead of the final one");

  OracleArgs orc;
  auto* oracle = app.add_subcommand("oracle", "offline full-matrix DTW alignment");
  oracle->add_option("--reference", orc.reference)->required();
  oracle->add_option("--target", orc.target)->required();
  oracle->add_option("--annotations", orc.annotations, "adds part jump links");
  oracle->add_option("--start", orc.start);
  oracle->add_flag("--closed-end", orc.closed_end, "end at the last reference frame");
  oracle->add_option("--cap", orc.cap, "maximum matrix cells");
  oracle->add_option("--out", orc.out, "CSV output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*extract) return run_extract(ex);
    if (*synth) return run_synth(sy);
    if (*simulate) return run_simulate(si);
    if (*track) return run_track(tr);
    if (*evaluate) return run_evaluate(ev);
    if (*oracle) return run_oracle(orc);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
