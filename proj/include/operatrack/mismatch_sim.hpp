#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "operatrack/features.hpp"
#include "operatrack/score_model.hpp"

namespace operatrack {

enum class EditKind { RemovePart, RepeatPart, Insert };

/// One edit. Remove/Repeat name a part id. Insert places `length` frames copied
/// from `source_start` of the source right after part `part_id` (after its
/// repetition, if any); the inserted frames carry no score position.
struct EditOp {
  EditKind kind = EditKind::RemovePart;
  int part_id = 0;
  std::size_t length = 0;
  std::size_t source_start = 0;
  bool operator==(const EditOp&) const = default;
};

struct EditScript {
  std::uint64_t seed = 0;
  double removal_ratio = 0.0;
  std::vector<EditOp> ops;
  bool operator==(const EditScript&) const = default;
};

struct GenerateParams {
  /// Every n-th part (1-based) counts as followed by applause.
  std::size_t applause_every = 5;
  /// Explicit applause-followed part ids; overrides applause_every when non-empty.
  std::vector<int> applause_parts;
  /// Never remove the first part.
  bool keep_first = true;
  double min_ratio = 1.0 / 3.0;
  double max_ratio = 2.0 / 3.0;
  std::size_t insertions = 0;
  std::size_t min_insert_frames = 300;
  std::size_t max_insert_frames = 1000;
};

/// Draws a removal ratio, removes floor(ratio * K) distinct parts and repeats one
/// surviving applause-followed part. Deterministic per seed. When no
/// applause-followed part survives the repetition is omitted and a message is
/// appended to `warnings`. Throws UsageError when K < 3.
EditScript generate_script(const PartTable& parts, std::uint64_t seed,
                           const GenerateParams& params = {},
                           std::vector<std::string>* warnings = nullptr);

/// Throws DataError if the script references unknown parts, removes a part twice,
/// repeats a removed part or inserts out of range.
void validate_script(const EditScript& script, const PartTable& parts, std::size_t frame_count);

/// Ground-truth label per modified frame; inserted frames are {-1, -1}.
using GroundTruth = std::vector<Location>;

struct EditResult {
  FeatureSequence modified;
  GroundTruth truth;
  /// Source frame of each modified frame, -1 for inserted material.
  std::vector<long long> source_frames;
};

/// Concatenates the surviving parts in score order (a repeated part twice in a
/// row) with the inserted segments. Frames outside every part are dropped.
EditResult apply_script(const FeatureSequence& source, const Annotations& annotations,
                        const EditScript& script);

std::string script_to_json(const EditScript& script);
/// Throws DataError on malformed input.
EditScript script_from_json(const std::string& text);

void save_truth(const std::filesystem::path& path, const GroundTruth& truth);
/// Reads `frame,part_id,bar_id` rows; frames must be 0, 1, 2, ...
GroundTruth load_truth(const std::filesystem::path& path);

}  // namespace operatrack
