#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace operatrack {

struct PcmAudio {
  std::vector<float> samples;  ///< mono, nominally in [-1, 1]
  std::uint32_t sample_rate_hz = 0;
};

/// Reads a RIFF/WAVE file holding 16-bit integer or 32-bit float PCM.
/// Multi-channel input is downmixed by averaging. Throws DataError.
PcmAudio read_wav(const std::filesystem::path& path);

/// Writes mono 16-bit PCM (values clipped to [-1, 1]).
void write_wav_pcm16(const std::filesystem::path& path, std::span<const float> samples,
                     std::uint32_t sample_rate_hz);

/// Converts little-endian signed 16-bit samples to floats.
std::vector<float> pcm16_to_float(std::span<const std::int16_t> samples);

}  // namespace operatrack
