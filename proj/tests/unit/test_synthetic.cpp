#include <doctest.h>

#include <cmath>

#include "operatrack/synthetic.hpp"

using namespace operatrack;

TEST_CASE("synthetic score shape") {
  SyntheticScoreParams p;
  p.parts = 6;
  const SyntheticScore s = make_synthetic_score(p, 5);
  const PartTable& parts = s.annotations.parts;
  REQUIRE(parts.size() == 6);
  CHECK(parts[0].start == 0);
  for (std::size_t k = 0; k < 6; ++k) {
    const std::size_t len = parts[k].end - parts[k].start + 1;
    CHECK(len >= p.min_part_frames);
    CHECK(len <= p.max_part_frames);
    if (k > 0) CHECK(parts[k].start == parts[k - 1].end + 1);
  }
  CHECK(s.features.frame_count() == parts[5].end + 1);
  CHECK(s.features.dims() == p.dims);
  const auto& bars = s.annotations.bars.bars();
  for (std::size_t b = 1; b < bars.size(); ++b) {
    if (bars[b].part_id != bars[b - 1].part_id) continue;
    const std::size_t gap = bars[b].onset - bars[b - 1].onset;
    CHECK(gap >= p.min_bar_frames);
    CHECK(gap <= p.max_bar_frames);
  }
  CHECK(s.rms > 0.0);
  CHECK_FALSE(s.recitative[0]);
}

TEST_CASE("total length is honoured") {
  SyntheticScoreParams p;
  p.parts = 1;
  p.total_frames = 1777;
  p.min_part_frames = p.max_part_frames = 1777;
  const SyntheticScore s = make_synthetic_score(p, 1);
  CHECK(s.features.frame_count() == 1777);
}

TEST_CASE("generation is deterministic per seed") {
  SyntheticScoreParams p;
  p.parts = 3;
  const SyntheticScore a = make_synthetic_score(p, 9);
  const SyntheticScore b = make_synthetic_score(p, 9);
  CHECK(a.features.data() == b.features.data());
  const Performance pa = perform(a, {}, 4);
  const Performance pb = perform(b, {}, 4);
  CHECK(pa.features.data() == pb.features.data());
  CHECK(make_synthetic_score(p, 10).features.data() != a.features.data());
}

TEST_CASE("performance tempo stays within bounds") {
  SyntheticScoreParams p;
  p.parts = 4;
  const SyntheticScore s = make_synthetic_score(p, 2);
  for (auto [lo, hi] : {std::pair{0.7, 1.3}, std::pair{0.5, 1.5}, std::pair{1.0, 1.0}}) {
    PerformanceParams pp;
    pp.min_rate = lo;
    pp.max_rate = hi;
    const Performance perf = perform(s, pp, 3);
    REQUIRE(perf.score_time.size() == perf.features.frame_count());
    CHECK(perf.score_time.front() == 0.0);
    for (std::size_t n = 1; n < perf.score_time.size(); ++n) {
      const double rate = perf.score_time[n] - perf.score_time[n - 1];
      CHECK(rate >= lo - 1e-9);
      CHECK(rate <= hi + 1e-9);
    }
    CHECK(perf.score_time.back() <= static_cast<double>(s.features.frame_count() - 1));
  }
}

TEST_CASE("performance annotations follow the score time") {
  SyntheticScoreParams p;
  p.parts = 5;
  const SyntheticScore s = make_synthetic_score(p, 7);
  const Performance perf = perform(s, {}, 8);
  REQUIRE(perf.truth.size() == perf.features.frame_count());
  for (std::size_t n = 0; n < perf.truth.size(); ++n) {
    // The frame's score time lies within one frame of the labelled part.
    const Location at_score = s.annotations.locate(static_cast<std::size_t>(std::ceil(perf.score_time[n])));
    const Location before = s.annotations.locate(static_cast<std::size_t>(std::floor(perf.score_time[n])));
    CHECK((perf.truth[n].part_id == at_score.part_id || perf.truth[n].part_id == before.part_id));
  }
}

TEST_CASE("recitatives are marked at the requested rate") {
  SyntheticScoreParams p;
  p.parts = 200;
  p.min_part_frames = p.max_part_frames = 60;
  p.min_bar_frames = p.max_bar_frames = 30;
  p.recitative_ratio = 0.3;
  const SyntheticScore s = make_synthetic_score(p, 11);
  std::size_t n = 0;
  for (bool r : s.recitative) n += r;
  CHECK(n > 35);
  CHECK(n < 85);
}
