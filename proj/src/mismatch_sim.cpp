#include "operatrack/mismatch_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "operatrack/error.hpp"

namespace operatrack {

namespace {

std::string_view kind_name(EditKind k) {
  switch (k) {
    case EditKind::RemovePart: return "remove";
    case EditKind::RepeatPart: return "repeat";
    case EditKind::Insert: return "insert";
  }
  return "?";
}

bool applause_followed(const PartTable& parts, std::size_t k, const GenerateParams& params) {
  if (!params.applause_parts.empty()) {
    return std::find(params.applause_parts.begin(), params.applause_parts.end(), parts[k].id) !=
           params.applause_parts.end();
  }
  return params.applause_every > 0 && (k + 1) % params.applause_every == 0;
}

}  // namespace

EditScript generate_script(const PartTable& parts, std::uint64_t seed,
                           const GenerateParams& params, std::vector<std::string>* warnings) {
  const std::size_t k_parts = parts.size();
  if (k_parts < 3) throw UsageError("mismatch simulation needs at least 3 parts");
  if (!(params.min_ratio <= params.max_ratio) || params.min_ratio < 0 || params.max_ratio > 1) {
    throw UsageError("removal ratio bounds must satisfy 0 <= min <= max <= 1");
  }
  std::mt19937_64 rng(seed);
  EditScript script;
  script.seed = seed;
  script.removal_ratio = std::uniform_real_distribution<double>(params.min_ratio, params.max_ratio)(rng);

  std::vector<std::size_t> candidates;
  for (std::size_t k = params.keep_first ? 1 : 0; k < k_parts; ++k) candidates.push_back(k);
  const auto removals = std::min(
      candidates.size(),
      static_cast<std::size_t>(std::floor(script.removal_ratio * static_cast<double>(k_parts))));
  std::shuffle(candidates.begin(), candidates.end(), rng);
  std::vector<std::size_t> removed(candidates.begin(),
                                   candidates.begin() + static_cast<std::ptrdiff_t>(removals));
  std::sort(removed.begin(), removed.end());
  for (std::size_t k : removed) script.ops.push_back({EditKind::RemovePart, parts[k].id, 0, 0});

  std::vector<std::size_t> survivors;
  for (std::size_t k = 0; k < k_parts; ++k) {
    if (!std::binary_search(removed.begin(), removed.end(), k)) survivors.push_back(k);
  }
  std::vector<std::size_t> repeatable;
  for (std::size_t k : survivors) {
    if (applause_followed(parts, k, params)) repeatable.push_back(k);
  }
  if (repeatable.empty()) {
    if (warnings) warnings->push_back("no applause-followed part survives; repetition omitted");
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, repeatable.size() - 1);
    script.ops.push_back({EditKind::RepeatPart, parts[repeatable[pick(rng)]].id, 0, 0});
  }

  const std::size_t total = parts[k_parts - 1].end + 1;
  for (std::size_t n = 0; n < params.insertions; ++n) {
    std::uniform_int_distribution<std::size_t> after(0, survivors.size() - 1);
    const std::size_t len = std::min(
        total, std::uniform_int_distribution<std::size_t>(params.min_insert_frames,
                                                          params.max_insert_frames)(rng));
    const std::size_t from = std::uniform_int_distribution<std::size_t>(0, total - len)(rng);
    script.ops.push_back({EditKind::Insert, parts[survivors[after(rng)]].id, len, from});
  }
  return script;
}

void validate_script(const EditScript& script, const PartTable& parts, std::size_t frame_count) {
  if (!(script.removal_ratio >= 0.0 && script.removal_ratio <= 1.0)) {
    throw DataError("removal ratio outside [0, 1]");
  }
  std::set<int> removed;
  for (const EditOp& op : script.ops) {
    if (!parts.index_of_id(op.part_id)) {
      throw DataError(std::string(kind_name(op.kind)) + " references unknown part " +
                      std::to_string(op.part_id));
    }
    if (op.kind == EditKind::RemovePart && !removed.insert(op.part_id).second) {
      throw DataError("part " + std::to_string(op.part_id) + " removed twice");
    }
    if (op.kind == EditKind::Insert &&
        (op.length == 0 || op.source_start + op.length > frame_count)) {
      throw DataError("insert segment outside the source");
    }
  }
  for (const EditOp& op : script.ops) {
    if (op.kind != EditKind::RemovePart && removed.count(op.part_id)) {
      throw DataError(std::string(kind_name(op.kind)) + " refers to removed part " +
                      std::to_string(op.part_id));
    }
  }
}

EditResult apply_script(const FeatureSequence& source, const Annotations& annotations,
                        const EditScript& script) {
  const PartTable& parts = annotations.parts;
  validate_script(script, parts, source.frame_count());
  if (!parts.empty() && parts[parts.size() - 1].end >= source.frame_count()) {
    throw DataError("annotations extend past the source features");
  }
  std::vector<std::size_t> copies(parts.size(), 1);
  std::vector<std::vector<const EditOp*>> inserts(parts.size());
  for (const EditOp& op : script.ops) {
    const std::size_t k = *parts.index_of_id(op.part_id);
    if (op.kind == EditKind::RemovePart) copies[k] = 0;
    if (op.kind == EditKind::RepeatPart) ++copies[k];
    if (op.kind == EditKind::Insert) inserts[k].push_back(&op);
  }

  EditResult out;
  out.modified = FeatureSequence(source.dims(), source.resolution(), source.sample_rate_hz());
  auto emit = [&](std::size_t from, std::size_t len, bool inserted) {
    for (std::size_t i = from; i < from + len; ++i) {
      out.modified.append(source.frame(i));
      out.truth.push_back(inserted ? Location{} : annotations.locate(i));
      out.source_frames.push_back(inserted ? -1 : static_cast<long long>(i));
    }
  };
  for (std::size_t k = 0; k < parts.size(); ++k) {
    for (std::size_t c = 0; c < copies[k]; ++c) {
      emit(parts[k].start, parts[k].end - parts[k].start + 1, false);
    }
    for (const EditOp* op : inserts[k]) emit(op->source_start, op->length, true);
  }
  return out;
}

std::string script_to_json(const EditScript& script) {
  nlohmann::ordered_json j;
  j["seed"] = script.seed;
  j["removal_ratio"] = script.removal_ratio;
  j["ops"] = nlohmann::ordered_json::array();
  for (const EditOp& op : script.ops) {
    nlohmann::ordered_json o;
    o["op"] = kind_name(op.kind);
    o["part_id"] = op.part_id;
    if (op.kind == EditKind::Insert) {
      o["length"] = op.length;
      o["source_start"] = op.source_start;
    }
    j["ops"].push_back(o);
  }
  return j.dump(2);
}

EditScript script_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    EditScript s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.removal_ratio = j.at("removal_ratio").get<double>();
    for (const auto& o : j.at("ops")) {
      EditOp op;
      const auto name = o.at("op").get<std::string>();
      if (name == "remove") {
        op.kind = EditKind::RemovePart;
      } else if (name == "repeat") {
        op.kind = EditKind::RepeatPart;
      } else if (name == "insert") {
        op.kind = EditKind::Insert;
        op.length = o.at("length").get<std::size_t>();
        op.source_start = o.at("source_start").get<std::size_t>();
      } else {
        throw DataError("unknown edit op '" + name + "'");
      }
      op.part_id = o.at("part_id").get<int>();
      s.ops.push_back(op);
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed edit script: ") + e.what());
  }
}

void save_truth(const std::filesystem::path& path, const GroundTruth& truth) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "frame,part_id,bar_id\n";
  for (std::size_t i = 0; i < truth.size(); ++i) {
    out << i << ',' << truth[i].part_id << ',' << truth[i].bar_id << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

GroundTruth load_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  GroundTruth truth;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (line_no == 1 && line.rfind("frame", 0) == 0)) continue;
    std::istringstream ss(line);
    long long frame = 0;
    int part = 0;
    int bar = 0;
    char c1 = 0;
    char c2 = 0;
    if (!(ss >> frame >> c1 >> part >> c2 >> bar) || c1 != ',' || c2 != ',' ||
        !(ss >> std::ws).eof()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed truth row");
    }
    if (frame != static_cast<long long>(truth.size())) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected frame " +
                      std::to_string(truth.size()));
    }
    truth.push_back({part, bar});
  }
  return truth;
}

}  // namespace operatrack
