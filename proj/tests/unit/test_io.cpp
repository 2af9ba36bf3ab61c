#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "operatrack/audio_io.hpp"
#include "operatrack/error.hpp"
#include "operatrack/feature_io.hpp"
#include "test_support.hpp"

using namespace operatrack;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("operatrack_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("feature cache round trip") {
  const fs::path dir = scratch_dir("features");
  const FeatureSequence hr = testing_support::random_sequence(123, 7, 1);
  write_features(dir / "x.f32", hr);
  CHECK(fs::exists(header_path(dir / "x.f32")));
  const FeatureSequence back = read_features(dir / "x.f32");
  CHECK(back.dims() == 7);
  CHECK(back.frame_count() == 123);
  CHECK(back.resolution() == Resolution::HR);
  CHECK(back.data() == hr.data());

  const FeatureSequence lr = downsample_lr(hr);
  write_features(dir / "x_lr.f32", lr);
  const FeatureSequence lr_back = read_features(dir / "x_lr.f32");
  CHECK(lr_back.resolution() == Resolution::LR);
  CHECK(lr_back.data() == lr.data());
}

TEST_CASE("feature cache errors") {
  const fs::path dir = scratch_dir("features_bad");
  CHECK_THROWS_AS(read_features(dir / "missing.f32"), DataError);

  const FeatureSequence hr = testing_support::random_sequence(10, 3, 2);
  write_features(dir / "short.f32", hr);
  fs::resize_file(dir / "short.f32", 10 * 3 * 4 - 4);
  CHECK_THROWS_AS(read_features(dir / "short.f32"), DataError);

  write_features(dir / "hdr.f32", hr);
  std::ofstream(header_path(dir / "hdr.f32")) << "dims=abc\n";
  CHECK_THROWS_AS(read_features(dir / "hdr.f32"), DataError);
}

TEST_CASE("wav round trip at 16 bit") {
  const fs::path dir = scratch_dir("wav");
  std::vector<float> x(1000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(0.8 * std::sin(0.01 * i));
  x[10] = 3.0f;  // clipped
  write_wav_pcm16(dir / "a.wav", x, 22050);
  const PcmAudio a = read_wav(dir / "a.wav");
  CHECK(a.sample_rate_hz == 22050);
  REQUIRE(a.samples.size() == x.size());
  CHECK(a.samples[10] == doctest::Approx(1.0f).epsilon(1e-3));
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i != 10) CHECK(std::abs(a.samples[i] - x[i]) < 2.0 / 32768.0);
  }
}

TEST_CASE("wav reader rejects garbage") {
  const fs::path dir = scratch_dir("wav_bad");
  std::ofstream(dir / "bad.wav") << "RIFF not really";
  CHECK_THROWS_AS(read_wav(dir / "bad.wav"), DataError);
  CHECK_THROWS_AS(read_wav(dir / "none.wav"), DataError);
}

TEST_CASE("pcm16 conversion") {
  const std::vector<std::int16_t> s{0, 16384, -32768, 32767};
  const auto f = pcm16_to_float(s);
  REQUIRE(f.size() == 4);
  CHECK(f[0] == 0.0f);
  CHECK(f[1] == doctest::Approx(0.5f));
  CHECK(f[2] == doctest::Approx(-1.0f));
  CHECK(f[3] == doctest::Approx(1.0f).epsilon(1e-4));
}
