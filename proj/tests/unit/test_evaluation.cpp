#include <doctest.h>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "operatrack/error.hpp"
#include "operatrack/evaluation.hpp"
#include "test_support.hpp"

using namespace operatrack;
using testing_support::make_annotations;

namespace {

GroundTruth identity_truth(const Annotations& a, std::size_t frames) {
  GroundTruth t;
  for (std::size_t i = 0; i < frames; ++i) t.push_back(a.locate(i));
  return t;
}

}  // namespace

TEST_CASE("perfect alignment scores 100 everywhere") {
  const Annotations a = make_annotations({300, 200, 250}, 50);
  std::vector<std::size_t> est(750);
  for (std::size_t i = 0; i < 750; ++i) est[i] = i;
  const Metrics m = evaluate(est, identity_truth(a, 750), a);
  CHECK(m.part_acc == 100.0);
  CHECK(m.bar_acc == 100.0);
  CHECK(m.at5_acc == 100.0);
  CHECK(m.frames == 750);
}

TEST_CASE("three bars late inside the right part") {
  const Annotations a = make_annotations({500, 500}, 50);
  std::vector<std::size_t> est;
  GroundTruth truth;
  for (std::size_t i = 0; i < 1000; ++i) {
    if (i % 500 >= 350) continue;  // the last three bars have no later bar in the part
    truth.push_back(a.locate(i));
    est.push_back(i + 150);
  }
  const Metrics m = evaluate(est, truth, a);
  CHECK(m.part_acc == 100.0);
  CHECK(m.bar_acc == 0.0);
  CHECK(m.at5_acc == 100.0);
}

TEST_CASE("six bars off falls outside the tolerance across parts") {
  const Annotations a = make_annotations({500, 500}, 50);
  const std::vector<std::size_t> est{650};
  const GroundTruth truth{a.locate(350)};
  const Metrics m = evaluate(est, truth, a);
  CHECK(m.part_acc == 0.0);
  CHECK(m.at5_acc == 0.0);
  const std::vector<std::size_t> near{600};
  CHECK(evaluate(near, truth, a).at5_acc == 100.0);
}

TEST_CASE("inserted frames are excluded and unannotated estimates miss") {
  const Annotations a = make_annotations({100, 100}, 10);
  const std::vector<std::size_t> est{5, 5, 150, 5000};
  const GroundTruth truth{a.locate(5), Location{}, a.locate(150), a.locate(20)};
  const Metrics m = evaluate(est, truth, a);
  CHECK(m.frames == 3);
  CHECK(m.part_acc == doctest::Approx(200.0 / 3.0));
  CHECK_THROWS_AS(evaluate(std::vector<std::size_t>{1}, truth, a), DataError);
}

TEST_CASE("random alignments respect the metric ordering and are order independent") {
  const Annotations a = make_annotations({400, 300, 500, 200}, 40);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> frame(0, 1399);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> est(500);
    GroundTruth truth(500);
    for (std::size_t j = 0; j < 500; ++j) {
      const std::size_t t = frame(rng);
      truth[j] = a.locate(t);
      est[j] = std::min<std::size_t>(1399, t + frame(rng) % 300);
    }
    const Metrics m = evaluate(est, truth, a);
    CHECK(m.bar_acc <= m.at5_acc);
    CHECK(m.bar_acc <= m.part_acc);
    CHECK(m.part_acc >= 0.0);
    CHECK(m.part_acc <= 100.0);

    std::vector<std::size_t> order(500);
    for (std::size_t j = 0; j < 500; ++j) order[j] = j;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> est2;
    GroundTruth truth2;
    for (std::size_t j : order) {
      est2.push_back(est[j]);
      truth2.push_back(truth[j]);
    }
    const Metrics m2 = evaluate(est2, truth2, a);
    CHECK(m2.part_acc == m.part_acc);
    CHECK(m2.bar_acc == m.bar_acc);
    CHECK(m2.at5_acc == m.at5_acc);
  }
}

TEST_CASE("pooled counters equal one evaluation over the concatenation") {
  const Annotations a = make_annotations({100, 100}, 10);
  AccuracyCounter x(a);
  AccuracyCounter y(a);
  AccuracyCounter all(a);
  for (std::size_t i = 0; i < 200; i += 7) {
    x.add(i, a.locate(i));
    all.add(i, a.locate(i));
  }
  for (std::size_t i = 0; i < 200; i += 3) {
    y.add(199 - i, a.locate(i));
    all.add(199 - i, a.locate(i));
  }
  x.merge(y);
  CHECK(x.counted() == all.counted());
  CHECK(x.part_hits() == all.part_hits());
  CHECK(x.bar_hits() == all.bar_hits());
  CHECK(x.at5_hits() == all.at5_hits());
}

TEST_CASE("masked and LR evaluation") {
  const Annotations a = make_annotations({300, 300}, 30);
  std::vector<std::size_t> est(600, 0);
  std::vector<bool> mask(600, false);
  for (std::size_t i = 0; i < 300; ++i) {
    est[i] = i;
    mask[i] = true;
  }
  CHECK(evaluate_masked(est, identity_truth(a, 600), a, mask).part_acc == 100.0);

  std::vector<LrReport> reports(20);
  for (std::size_t m = 0; m < 20; ++m) {
    reports[m].lr_frame = m;
    reports[m].position = m < 10 ? m : 0;
    reports[m].reliable = m < 10;
  }
  CHECK(evaluate_lr(reports, identity_truth(a, 600), a).part_acc == 50.0);
  CHECK(evaluate_lr(reports, identity_truth(a, 600), a, true).part_acc == 100.0);
  CHECK_THROWS_AS(evaluate_lr(reports, identity_truth(a, 500), a), DataError);
}

TEST_CASE("metrics JSON and table") {
  const Metrics m{84.0, 51.25, 66.0, 1200};
  CHECK(metrics_json("joltw+lr", m) ==
        "{\"model\":\"joltw+lr\",\"part_acc\":84.0,\"bar_acc\":51.25,\"at5_acc\":66.0,\"frames\":1200}");
  const std::string table = metrics_table({{"joltw+lr", m}});
  CHECK(table.find("joltw+lr") != std::string::npos);
  CHECK(table.find("51.25") != std::string::npos);
}
