#include "operatrack/score_model.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "operatrack/error.hpp"
#include "operatrack/feature_io.hpp"

namespace operatrack {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

long long parse_int(const std::string& s, const std::string& where, const char* what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw DataError(where + ": invalid " + what + " '" + s + "'");
  }
}

std::size_t parse_frame(const std::string& s, const std::string& where, const char* what) {
  const long long v = parse_int(s, where, what);
  if (v < 0) throw DataError(where + ": negative " + std::string(what));
  return static_cast<std::size_t>(v);
}

}  // namespace

// ---------------------------------------------------------------------------

PartTable::PartTable(std::vector<Part> parts) : parts_(std::move(parts)) {
  std::stable_sort(parts_.begin(), parts_.end(),
                   [](const Part& a, const Part& b) { return a.start < b.start; });
  for (std::size_t k = 0; k < parts_.size(); ++k) {
    const Part& p = parts_[k];
    if (p.start > p.end) {
      throw DataError("part " + std::to_string(p.id) + ": start " + std::to_string(p.start) +
                      " after end " + std::to_string(p.end));
    }
    if (k + 1 < parts_.size()) {
      Part& cur = parts_[k];
      const Part& next = parts_[k + 1];
      if (cur.end >= next.start) {
        throw DataError("part " + std::to_string(next.id) + " overlaps part " +
                        std::to_string(cur.id));
      }
      cur.end = next.start - 1;
    }
  }
  std::vector<int> ids;
  for (const Part& p : parts_) ids.push_back(p.id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw DataError("duplicate part id " +
                    std::to_string(*std::adjacent_find(ids.begin(), ids.end())));
  }
  lr_parts_ = parts_;
  for (Part& p : lr_parts_) {
    p.start /= kLrHopFrames;
    p.end /= kLrHopFrames;
  }
}

std::size_t PartTable::index_at_or_before(std::size_t frame) const {
  auto it = std::upper_bound(parts_.begin(), parts_.end(), frame,
                             [](std::size_t f, const Part& p) { return f < p.start; });
  if (it == parts_.begin()) return 0;
  return static_cast<std::size_t>(it - parts_.begin()) - 1;
}

std::optional<std::size_t> PartTable::index_containing(std::size_t frame) const {
  if (parts_.empty()) return std::nullopt;
  const std::size_t k = index_at_or_before(frame);
  if (frame < parts_[k].start || frame > parts_[k].end) return std::nullopt;
  return k;
}

std::optional<std::size_t> PartTable::index_of_id(int id) const {
  for (std::size_t k = 0; k < parts_.size(); ++k) {
    if (parts_[k].id == id) return k;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

BarAnnotations::BarAnnotations(std::vector<Bar> bars, const PartTable& parts)
    : bars_(std::move(bars)), part_first_(parts.size(), 0), part_end_(parts.size(), 0) {
  std::stable_sort(bars_.begin(), bars_.end(),
                   [](const Bar& a, const Bar& b) { return a.onset < b.onset; });
  for (std::size_t i = 0; i < bars_.size(); ++i) {
    const Bar& b = bars_[i];
    if (i > 0 && bars_[i - 1].onset == b.onset) {
      throw DataError("bar " + std::to_string(b.id) + ": onset " + std::to_string(b.onset) +
                      " not strictly increasing");
    }
    const auto k = parts.index_of_id(b.part_id);
    if (!k) {
      throw DataError("bar " + std::to_string(b.id) + " references unknown part " +
                      std::to_string(b.part_id));
    }
    if (b.onset < parts[*k].start || b.onset > parts[*k].end) {
      throw DataError("bar " + std::to_string(b.id) + " onset " + std::to_string(b.onset) +
                      " outside part " + std::to_string(b.part_id));
    }
  }
  // Onsets increase and each bar sits inside its part, so bars are grouped by part.
  std::size_t i = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    part_first_[k] = i;
    while (i < bars_.size() && bars_[i].part_id == parts[k].id) ++i;
    part_end_[k] = i;
  }
  rank_.reserve(bars_.size());
  for (std::size_t r = 0; r < bars_.size(); ++r) rank_.emplace_back(bars_[r].id, r);
  std::sort(rank_.begin(), rank_.end());
  for (std::size_t r = 1; r < rank_.size(); ++r) {
    if (rank_[r].first == rank_[r - 1].first) {
      throw DataError("duplicate bar id " + std::to_string(rank_[r].first));
    }
  }
}

std::optional<std::size_t> BarAnnotations::rank_of(int bar_id) const {
  auto it = std::lower_bound(rank_.begin(), rank_.end(), std::make_pair(bar_id, std::size_t{0}));
  if (it == rank_.end() || it->first != bar_id) return std::nullopt;
  return it->second;
}

Location Annotations::locate(std::size_t frame) const {
  const auto k = parts.index_containing(frame);
  if (!k) return {};
  Location loc{parts[*k].id, kUnannotated};
  const std::size_t first = bars.first_of_part(*k);
  const std::size_t end = bars.end_of_part(*k);
  if (first == end) return loc;
  const auto& list = bars.bars();
  auto it = std::upper_bound(list.begin() + static_cast<std::ptrdiff_t>(first),
                             list.begin() + static_cast<std::ptrdiff_t>(end), frame,
                             [](std::size_t f, const Bar& b) { return f < b.onset; });
  const std::size_t idx = it == list.begin() + static_cast<std::ptrdiff_t>(first)
                              ? first
                              : static_cast<std::size_t>(it - list.begin()) - 1;
  loc.bar_id = list[idx].id;
  return loc;
}

// ---------------------------------------------------------------------------

Annotations parse_annotations(const std::string& text, const std::string& source_name,
                              std::optional<std::size_t> frame_count) {
  std::vector<Part> parts;
  std::vector<Bar> bars;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto check_range = [&](std::size_t frame, const std::string& where) {
    if (frame_count && frame >= *frame_count) {
      throw DataError(where + ": frame " + std::to_string(frame) + " beyond feature range (" +
                      std::to_string(*frame_count) + " frames)");
    }
  };
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = source_name + ":" + std::to_string(lineno);
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    const auto f = split_csv(line);
    if (f[0] == "part") {
      if (f.size() != 5) throw DataError(where + ": part record needs 5 fields");
      Part p;
      p.id = static_cast<int>(parse_int(f[1], where, "part id"));
      p.name = f[2];
      p.start = parse_frame(f[3], where, "start frame");
      p.end = parse_frame(f[4], where, "end frame");
      check_range(p.start, where);
      check_range(p.end, where);
      if (!parts.empty() && p.start <= parts.back().end) {
        throw DataError(where + ": part " + std::to_string(p.id) +
                        " boundaries not monotone (starts at " + std::to_string(p.start) +
                        ", previous part ends at " + std::to_string(parts.back().end) + ")");
      }
      parts.push_back(std::move(p));
    } else if (f[0] == "bar") {
      if (f.size() != 4) throw DataError(where + ": bar record needs 4 fields");
      Bar b;
      b.id = static_cast<int>(parse_int(f[1], where, "bar id"));
      b.part_id = static_cast<int>(parse_int(f[2], where, "part id"));
      b.onset = parse_frame(f[3], where, "onset frame");
      check_range(b.onset, where);
      if (!bars.empty() && b.onset <= bars.back().onset) {
        throw DataError(where + ": bar " + std::to_string(b.id) + " onset not increasing");
      }
      bars.push_back(b);
    } else if (lineno == 1) {
      continue;  // header
    } else {
      throw DataError(where + ": unknown record kind '" + f[0] + "'");
    }
  }
  Annotations a;
  try {
    a.parts = PartTable(std::move(parts));
    a.bars = BarAnnotations(std::move(bars), a.parts);
  } catch (const DataError& e) {
    throw DataError(source_name + ": " + e.what());
  }
  return a;
}

Annotations load_annotations(const std::filesystem::path& path,
                             std::optional<std::size_t> frame_count) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open annotation file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_annotations(ss.str(), path.string(), frame_count);
}

void save_annotations(const std::filesystem::path& path, const Annotations& a) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write annotation file " + path.string());
  out << "# kind,id,name|part_id,start|onset,end\n";
  for (const Part& p : a.parts.parts()) {
    out << "part," << p.id << ',' << quote_csv(p.name) << ',' << p.start << ',' << p.end << '\n';
  }
  for (const Bar& b : a.bars.bars()) {
    out << "bar," << b.id << ',' << b.part_id << ',' << b.onset << '\n';
  }
}

// ---------------------------------------------------------------------------

ScoreReference::ScoreReference(FeatureSequence hr, Annotations annotations,
                               std::optional<FeatureSequence> lr)
    : hr_(std::move(hr)), annotations_(std::move(annotations)) {
  if (hr_.resolution() != Resolution::HR) throw DataError("reference features must be HR");
  if (hr_.empty()) throw DataError("reference has no feature frames");
  const std::size_t m = hr_.frame_count();
  for (const Part& p : annotations_.parts.parts()) {
    if (p.end >= m) {
      throw DataError("part " + std::to_string(p.id) + " ends at frame " + std::to_string(p.end) +
                      ", reference has " + std::to_string(m) + " frames");
    }
  }
  if (lr) {
    if (lr->resolution() != Resolution::LR || lr->dims() != hr_.dims() ||
        lr->frame_count() != lr_frame_count(m)) {
      throw DataError("LR reference features inconsistent with HR features");
    }
    lr_ = std::move(*lr);
  } else {
    lr_ = downsample_lr(hr_);
  }
  hr_unit_ = UnitFrames(hr_);
  lr_unit_ = UnitFrames(lr_);
}

ScoreReference load_reference(const std::filesystem::path& features,
                              const std::filesystem::path& annotations) {
  FeatureSequence hr = read_features(features);
  Annotations a = load_annotations(annotations, hr.frame_count());
  const auto lr_path =
      features.parent_path() / (features.stem().string() + "_lr" + features.extension().string());
  std::optional<FeatureSequence> lr;
  if (std::filesystem::exists(lr_path) && std::filesystem::exists(header_path(lr_path))) {
    lr = read_features(lr_path);
  }
  return ScoreReference(std::move(hr), std::move(a), std::move(lr));
}

}  // namespace operatrack
