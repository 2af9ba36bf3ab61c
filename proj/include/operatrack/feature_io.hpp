#pragma once

#include <filesystem>

#include "operatrack/features.hpp"

namespace operatrack {

/// Sidecar header path for a feature cache file: "<path>.hdr".
std::filesystem::path header_path(const std::filesystem::path& features);

/// Writes the little-endian float32 row-major matrix plus its text header
/// (dims, hop_s, window_s, sample_rate_hz, resolution, frame_count).
void write_features(const std::filesystem::path& path, const FeatureSequence& seq);

/// Reads a feature cache written by write_features. Throws DataError when the
/// header is malformed or disagrees with the binary size.
FeatureSequence read_features(const std::filesystem::path& path);

}  // namespace operatrack
