#include "operatrack/feature_io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "operatrack/error.hpp"

namespace operatrack {

static_assert(std::endian::native == std::endian::little,
              "feature cache I/O assumes a little-endian host");

std::filesystem::path header_path(const std::filesystem::path& features) {
  return features.string() + ".hdr";
}

void write_features(const std::filesystem::path& path, const FeatureSequence& seq) {
  {
    std::ofstream bin(path, std::ios::binary);
    if (!bin) throw DataError("cannot write feature file " + path.string());
    bin.write(reinterpret_cast<const char*>(seq.data().data()),
              static_cast<std::streamsize>(seq.data().size() * sizeof(float)));
  }
  std::ofstream hdr(header_path(path));
  if (!hdr) throw DataError("cannot write feature header " + header_path(path).string());
  hdr << "dims=" << seq.dims() << '\n'
      << "hop_s=" << seq.hop_s() << '\n'
      << "window_s=" << seq.window_s() << '\n'
      << "sample_rate_hz=" << seq.sample_rate_hz() << '\n'
      << "resolution=" << to_string(seq.resolution()) << '\n'
      << "frame_count=" << seq.frame_count() << '\n';
}

FeatureSequence read_features(const std::filesystem::path& path) {
  const auto hpath = header_path(path);
  std::ifstream hdr(hpath);
  if (!hdr) throw DataError("cannot open feature header " + hpath.string());
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(hdr, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError(hpath.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto field = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw DataError(hpath.string() + ": missing '" + key + "'");
    return it->second;
  };

  std::size_t dims = 0, frames = 0;
  double hop = 0.0, window = 0.0, rate = 0.0;
  Resolution res{};
  try {
    dims = std::stoul(field("dims"));
    frames = std::stoul(field("frame_count"));
    hop = std::stod(field("hop_s"));
    window = std::stod(field("window_s"));
    rate = std::stod(field("sample_rate_hz"));
  } catch (const std::logic_error&) {
    throw DataError(hpath.string() + ": malformed numeric field");
  }
  res = parse_resolution(field("resolution"));
  if (dims == 0) throw DataError(hpath.string() + ": dims must be positive");
  const double want_hop = res == Resolution::HR ? kHrHopSeconds : kLrHopSeconds;
  const double want_win = res == Resolution::HR ? kHrWindowSeconds : kLrWindowSeconds;
  if (std::abs(hop - want_hop) > 1e-9 || std::abs(window - want_win) > 1e-9) {
    throw DataError(hpath.string() + ": hop/window do not match resolution " +
                    std::string(to_string(res)));
  }

  std::ifstream bin(path, std::ios::binary | std::ios::ate);
  if (!bin) throw DataError("cannot open feature file " + path.string());
  const auto bytes = static_cast<std::size_t>(bin.tellg());
  if (bytes != frames * dims * sizeof(float)) {
    throw DataError(path.string() + ": size " + std::to_string(bytes) + " bytes, header implies " +
                    std::to_string(frames * dims * sizeof(float)));
  }
  bin.seekg(0);
  std::vector<float> data(frames * dims);
  bin.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes));
  return FeatureSequence(std::move(data), dims, res, rate);
}

}  // namespace operatrack
