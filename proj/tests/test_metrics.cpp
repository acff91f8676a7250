// Copyright 2026 The miabench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mia/metrics.hpp"

#include <cmath>
#include <random>

#include <doctest.h>

#include "mia/common.hpp"
#include "oracles.hpp"

namespace {

using namespace mia::metrics;

struct Instance {
  std::vector<double> scores;
  std::vector<int> labels;
};

Instance random_instance(std::mt19937_64& rng, bool with_ties) {
  std::uniform_int_distribution<int> size_dist(2, 40);
  std::uniform_real_distribution<double> score_dist(-2.0, 2.0);
  std::uniform_int_distribution<int> quant(0, 8);
  Instance in;
  const int members = size_dist(rng);
  const int nonmembers = size_dist(rng);
  for (int i = 0; i < members + nonmembers; ++i) {
    double s = score_dist(rng);
    if (with_ties) s = quant(rng) * 0.25;
    in.scores.push_back(s);
    in.labels.push_back(i < members ? 1 : 0);
  }
  return in;
}

}  // namespace

TEST_CASE("auc on worked examples") {
  CHECK(auc({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0}) == 1.0);
  CHECK(auc({0.5, 0.5, 0.5, 0.5}, {1, 1, 0, 0}) == 0.5);
  CHECK(auc({0.8, 0.4, 0.6, 0.2}, {1, 1, 0, 0}) == 0.75);
}

TEST_CASE("auc rejects single-class input") {
  CHECK_THROWS_AS(auc({0.1, 0.2}, {1, 1}), mia::InputError);
  CHECK_THROWS_AS(auc({0.1, 0.2}, {0, 0}), mia::InputError);
  CHECK_THROWS_AS(auc({0.1}, {2}), mia::InputError);
}

TEST_CASE("auc equals exhaustive pair counting and trapezoidal integration") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    Instance in = random_instance(rng, trial % 2 == 0);
    const double fast = auc(in.scores, in.labels);
    CHECK(fast == doctest::Approx(oracle::auc_pairs(in.scores, in.labels)).epsilon(1e-12));
    std::vector<std::pair<double, double>> pts;
    for (const RocPoint& p : roc_points(in.scores, in.labels)) pts.push_back({p.fpr, p.tpr});
    CHECK(std::abs(fast - oracle::trapezoid(pts)) <= 1e-9);
  }
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    Instance in = random_instance(rng, trial % 3 == 0);
    const double base = auc(in.scores, in.labels);
    auto warped = in.scores;
    for (auto& s : warped) s = std::exp(0.5 * s) + 3.0 * s;
    CHECK(auc(warped, in.labels) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("label complementation flips auc") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    Instance in = random_instance(rng, false);
    auto flipped = in.labels;
    for (auto& l : flipped) l = 1 - l;
    CHECK(auc(in.scores, flipped) == doctest::Approx(1.0 - auc(in.scores, in.labels)).epsilon(1e-12));
  }
}

TEST_CASE("roc points are a valid curve") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    Instance in = random_instance(rng, true);
    auto pts = roc_points(in.scores, in.labels);
    CHECK(pts.front().fpr == 0.0);
    CHECK(pts.front().tpr == 0.0);
    CHECK(pts.back().fpr == 1.0);
    CHECK(pts.back().tpr == 1.0);
    for (size_t i = 1; i < pts.size(); ++i) {
      CHECK(pts[i].fpr >= pts[i - 1].fpr);
      CHECK(pts[i].tpr >= pts[i - 1].tpr);
    }
  }
}

TEST_CASE("asr on worked examples") {
  CHECK(asr({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0}) == 1.0);
  CHECK(asr({0.5, 0.5, 0.5, 0.5}, {1, 1, 0, 0}) == 0.5);
  CHECK(asr({0.8, 0.4, 0.6, 0.2}, {1, 1, 0, 0}) == 0.75);
}

TEST_CASE("asr equals the exhaustive threshold sweep and bounds the constant rule") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 500; ++trial) {
    Instance in = random_instance(rng, trial % 2 == 0);
    const double got = asr(in.scores, in.labels);
    CHECK(got == doctest::Approx(oracle::best_threshold_accuracy(in.scores, in.labels))
                     .epsilon(1e-12));
    long long members = std::count(in.labels.begin(), in.labels.end(), 1);
    long long total = static_cast<long long>(in.labels.size());
    const double majority = static_cast<double>(std::max(members, total - members)) /
                            static_cast<double>(total);
    CHECK(got >= majority - 1e-12);
  }
}

TEST_CASE("tpr_at_fpr on worked examples") {
  std::vector<double> scores{0.9, 0.7, 0.5, 0.6, 0.4, 0.2};
  std::vector<int> labels{1, 1, 1, 0, 0, 0};
  CHECK(tpr_at_fpr(scores, labels, 0.0) == doctest::Approx(2.0 / 3.0));
  CHECK(tpr_at_fpr(scores, labels, 1.0) == 1.0);
  CHECK(tpr_at_fpr({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0}, 0.01) == 1.0);
}

TEST_CASE("tpr_at_fpr matches oracle and is monotone in the target") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    Instance in = random_instance(rng, trial % 2 == 1);
    double last = -1.0;
    for (double target : {0.0, 0.01, 0.05, 0.1, 0.25, 0.5, 1.0}) {
      const double got = tpr_at_fpr(in.scores, in.labels, target);
      CHECK(got == doctest::Approx(oracle::tpr_at_fpr(in.scores, in.labels, target))
                       .epsilon(1e-12));
      CHECK(got >= last);
      last = got;
    }
  }
}

TEST_CASE("answer normalization") {
  CHECK(normalize_answer("The Cat!") == "cat");
  CHECK(normalize_answer("Hello,  World!", false) == "hello world");
  CHECK(normalize_answer("an apple a day") == "apple day");
  CHECK(normalize_answer("") == "");
  CHECK(normalize_answer("the a an") == "");
  // Idempotence.
  CHECK(normalize_answer(normalize_answer("A  messy, THE string")) ==
        normalize_answer("A  messy, THE string"));
}

TEST_CASE("exact match and token F1 worked examples") {
  CHECK(exact_match("The Cat!", "cat") == 1);
  CHECK(token_f1("The Cat!", "cat") == 1.0);
  CHECK(token_f1("the cat sat", "cat") == doctest::Approx(2.0 / 3.0));
  CHECK(exact_match("same words here", "same words here") == 1);
  CHECK(token_f1("same words here", "same words here") == 1.0);
  CHECK(exact_match("", "gold") == 0);
  CHECK(token_f1("", "gold") == 0.0);
  CHECK(token_f1("completely different", "gold text") == 0.0);
}

TEST_CASE("EM of one implies F1 of one") {
  std::mt19937_64 rng(29);
  const char* words[] = {"a", "the", "cat", "dog", "ran", "Fast!", "slow,"};
  for (int trial = 0; trial < 2000; ++trial) {
    std::string pred;
    std::string gold;
    std::uniform_int_distribution<int> len(0, 5);
    std::uniform_int_distribution<int> pick(0, 6);
    for (int i = len(rng); i > 0; --i) pred += std::string(words[pick(rng)]) + " ";
    for (int i = len(rng); i > 0; --i) gold += std::string(words[pick(rng)]) + " ";
    if (exact_match(pred, gold) == 1) CHECK(token_f1(pred, gold) == 1.0);
  }
}

TEST_CASE("token F1 counts multiset overlap") {
  // pred: cat cat dog, gold: cat dog dog. overlap = cat + dog = 2.
  CHECK(token_f1("cat cat dog", "cat dog dog") == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("relative change and cell rendering") {
  auto rc = relative_change(0.601, 0.763);
  REQUIRE(rc.has_value());
  CHECK(std::llround(*rc) == -21);
  CHECK(render_cell(0.601, 0.763) == "0.601(-21)");
  CHECK(render_cell(0.030, 0.010) == "0.030(+200)");
  CHECK(render_cell(0.5, 0.5) == "0.500(0)");
  CHECK(render_cell(0.25, std::nullopt) == "0.250");
  CHECK(render_cell(0.25, 0.0) == "0.250(—)");
  CHECK(!relative_change(0.1, 0.0).has_value());
}
