#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "operatrack/features.hpp"

namespace operatrack {

/// A titled structural unit with inclusive frame bounds.
struct Part {
  int id = 0;
  std::string name;
  std::size_t start = 0;
  std::size_t end = 0;
};

struct Bar {
  int id = 0;
  int part_id = 0;
  std::size_t onset = 0;  ///< HR frame
};

inline constexpr int kUnannotated = -1;

/// (part, bar) pair; kUnannotated marks frames outside the annotated range and
/// inserted material.
struct Location {
  int part_id = kUnannotated;
  int bar_id = kUnannotated;

  bool annotated() const { return part_id != kUnannotated; }
  auto operator<=>(const Location&) const = default;
};

/// Ordered, contiguous part list over HR frames, with the derived LR bounds
/// (HR bounds divided by 30, rounded down).
class PartTable {
 public:
  PartTable() = default;
  /// Validates ordering (s_k <= t_k < s_{k+1}) and unique ids. Gaps between
  /// consecutive parts are closed by extending the earlier part's end.
  explicit PartTable(std::vector<Part> parts);

  const std::vector<Part>& parts() const { return parts_; }
  const std::vector<Part>& lr_parts() const { return lr_parts_; }
  std::size_t size() const { return parts_.size(); }
  bool empty() const { return parts_.empty(); }
  const Part& operator[](std::size_t k) const { return parts_[k]; }

  /// Index of the part containing `frame`, if any.
  std::optional<std::size_t> index_containing(std::size_t frame) const;
  /// Index of the last part starting at or before `frame` (0 when before all parts).
  std::size_t index_at_or_before(std::size_t frame) const;
  std::optional<std::size_t> index_of_id(int id) const;

 private:
  std::vector<Part> parts_;
  std::vector<Part> lr_parts_;
};

/// Bars ordered by onset, each inside its part.
class BarAnnotations {
 public:
  BarAnnotations() = default;
  BarAnnotations(std::vector<Bar> bars, const PartTable& parts);

  const std::vector<Bar>& bars() const { return bars_; }
  std::size_t size() const { return bars_.size(); }

  /// Position of a bar in the global onset ordering.
  std::optional<std::size_t> rank_of(int bar_id) const;

  /// First/one-past-last bar index belonging to part index k.
  std::size_t first_of_part(std::size_t k) const { return part_first_[k]; }
  std::size_t end_of_part(std::size_t k) const { return part_end_[k]; }

 private:
  std::vector<Bar> bars_;
  std::vector<std::size_t> part_first_;
  std::vector<std::size_t> part_end_;
  std::vector<std::pair<int, std::size_t>> rank_;  // sorted by bar id
};

struct Annotations {
  PartTable parts;
  BarAnnotations bars;

  /// Part containing `frame` and the bar with the greatest onset <= frame in
  /// that part (the part's first bar when the frame precedes it).
  Location locate(std::size_t frame) const;
};

/// Parses the annotation CSV (`part,id,name,start,end` / `bar,id,part_id,onset`
/// records). When `frame_count` is given every frame must be below it.
/// Throws DataError naming the offending line.
Annotations load_annotations(const std::filesystem::path& path,
                             std::optional<std::size_t> frame_count = std::nullopt);
Annotations parse_annotations(const std::string& text, const std::string& source_name,
                              std::optional<std::size_t> frame_count = std::nullopt);
void save_annotations(const std::filesystem::path& path, const Annotations& annotations);

/// The annotated reference recording. Immutable after construction.
class ScoreReference {
 public:
  /// Validates annotations against `hr`; computes LR features when `lr` is absent.
  ScoreReference(FeatureSequence hr, Annotations annotations,
                 std::optional<FeatureSequence> lr = std::nullopt);

  const FeatureSequence& hr() const { return hr_; }
  const FeatureSequence& lr() const { return lr_; }
  const UnitFrames& hr_unit() const { return hr_unit_; }
  const UnitFrames& lr_unit() const { return lr_unit_; }
  const PartTable& parts() const { return annotations_.parts; }
  const BarAnnotations& bars() const { return annotations_.bars; }
  const Annotations& annotations() const { return annotations_; }
  std::size_t frame_count() const { return hr_.frame_count(); }

  Location locate(std::size_t frame) const { return annotations_.locate(frame); }

 private:
  FeatureSequence hr_;
  FeatureSequence lr_;
  Annotations annotations_;
  UnitFrames hr_unit_;
  UnitFrames lr_unit_;
};

/// Loads `features` (HR cache) and `annotations`. An LR cache next to the HR
/// file ("<stem>_lr<ext>") is used when present and consistent.
ScoreReference load_reference(const std::filesystem::path& features,
                              const std::filesystem::path& annotations);

}  // namespace operatrack
