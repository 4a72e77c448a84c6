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

#include "entailsum/selection.hpp"
#include "test_util.hpp"

using namespace entailsum;
using testutil::TempDir;

namespace {

MetricRecord record(const std::string& model, int64_t step, const std::string& language,
                    double rouge, double nli) {
  MetricRecord r;
  r.model_id = model;
  r.checkpoint_step = step;
  r.language = language;
  r.rouge_l = rouge;
  r.nli = nli;
  r.length_ratio = 1.0;
  r.n_examples = 100;
  return r;
}

// Three models whose cross-language means peak at fixed steps: the
// entailment-best checkpoint early, the ROUGE-best one late.
std::vector<MetricRecord> fixture_table() {
  struct ModelPlan {
    const char* model;
    int64_t nli_step;
    int64_t rouge_step;
    std::vector<int64_t> steps;
  };
  const std::vector<ModelPlan> plans = {
      {"vanilla", 3600, 15000, {1000, 3600, 8000, 15000}},
      {"filtered", 2200, 12000, {1000, 2200, 8000, 12000}},
      {"controlled", 3400, 8800, {1000, 3400, 8800, 12000}},
  };
  const std::vector<std::string> languages = {"amharic", "english", "yoruba"};
  std::vector<MetricRecord> out;
  for (const auto& plan : plans) {
    for (int64_t step : plan.steps) {
      for (size_t li = 0; li < languages.size(); ++li) {
        // Per-language jitter that cancels in neither direction; the peak is
        // decided by the step bonus alone.
        double jitter = 0.3 * static_cast<double>(li);
        double rouge = 30.0 + jitter + (step == plan.rouge_step ? 3.0 : 0.0);
        double nli = 60.0 + jitter + (step == plan.nli_step ? 5.0 : 0.0);
        out.push_back(record(plan.model, step, languages[li], rouge, nli));
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("cross-language means pick the planted peak checkpoints") {
  auto records = fixture_table();
  struct Expected {
    const char* model;
    int64_t nli_step;
    int64_t rouge_step;
  };
  for (const auto& e : std::vector<Expected>{{"vanilla", 3600, 15000},
                                             {"filtered", 2200, 12000},
                                             {"controlled", 3400, 8800}}) {
    auto nli = select_checkpoint(records, e.model, SelectionCriterion::nli);
    auto rouge = select_checkpoint(records, e.model, SelectionCriterion::rouge);
    CHECK(nli.checkpoint_step == e.nli_step);
    CHECK(rouge.checkpoint_step == e.rouge_step);
    CHECK(nli.n_languages == 3);
    CHECK(best_nli_earlier(nli, rouge));
  }
}

TEST_CASE("single checkpoint wins both criteria") {
  std::vector<MetricRecord> records = {record("m", 500, "thai", 31, 60),
                                       record("m", 500, "welsh", 33, 62)};
  auto nli = select_checkpoint(records, "m", SelectionCriterion::nli);
  auto rouge = select_checkpoint(records, "m", SelectionCriterion::rouge);
  CHECK(nli.checkpoint_step == 500);
  CHECK(rouge.checkpoint_step == 500);
  CHECK(nli.criterion_mean == Catch::Approx(61.0));
  CHECK_FALSE(best_nli_earlier(nli, rouge));  // equal steps are not earlier
}

TEST_CASE("equal means tie-break toward the smaller step") {
  std::vector<MetricRecord> records = {
      record("m", 100, "thai", 30, 60), record("m", 200, "thai", 30, 60)};
  CHECK(select_checkpoint(records, "m", SelectionCriterion::rouge).checkpoint_step == 100);
  CHECK(select_checkpoint(records, "m", SelectionCriterion::nli).checkpoint_step == 100);
}

TEST_CASE("later nli step reports not-earlier") {
  std::vector<MetricRecord> records = {
      record("m", 5, "thai", 30, 50), record("m", 10, "thai", 20, 60)};
  auto nli = select_checkpoint(records, "m", SelectionCriterion::nli);
  auto rouge = select_checkpoint(records, "m", SelectionCriterion::rouge);
  CHECK(nli.checkpoint_step == 10);
  CHECK(rouge.checkpoint_step == 5);
  CHECK_FALSE(best_nli_earlier(nli, rouge));
}

TEST_CASE("ragged language coverage is rejected with the missing cells") {
  std::vector<MetricRecord> records = {
      record("m", 100, "thai", 30, 60), record("m", 100, "welsh", 30, 60),
      record("m", 200, "thai", 31, 61)};
  try {
    select_checkpoint(records, "m", SelectionCriterion::nli);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    std::string what = e.what();
    CHECK(what.find("200") != std::string::npos);
    CHECK(what.find("welsh") != std::string::npos);
  }
}

TEST_CASE("unknown model is rejected") {
  auto records = fixture_table();
  CHECK_THROWS_AS(select_checkpoint(records, "missing", SelectionCriterion::nli),
                  ValidationError);
}

TEST_CASE("positive scaling leaves the chosen step unchanged") {
  auto records = fixture_table();
  auto baseline = select_checkpoint(records, "filtered", SelectionCriterion::nli);
  for (auto& r : records) {
    r.nli *= 7.5;
    r.rouge_l *= 0.25;
  }
  CHECK(select_checkpoint(records, "filtered", SelectionCriterion::nli).checkpoint_step ==
        baseline.checkpoint_step);
  CHECK(select_checkpoint(records, "filtered", SelectionCriterion::rouge).checkpoint_step ==
        12000);
}

TEST_CASE("adding a checkpoint-constant language does not move the argmax") {
  auto records = fixture_table();
  auto baseline = select_checkpoint(records, "vanilla", SelectionCriterion::nli);
  for (int64_t step : {1000, 3600, 8000, 15000}) {
    records.push_back(record("vanilla", step, "zulu", 29.0, 55.0));
  }
  auto with_extra = select_checkpoint(records, "vanilla", SelectionCriterion::nli);
  CHECK(with_extra.checkpoint_step == baseline.checkpoint_step);
  CHECK(with_extra.n_languages == baseline.n_languages + 1);
}

TEST_CASE("selection is deterministic for identical tables") {
  auto a = fixture_table();
  auto b = fixture_table();
  auto ca = select_checkpoint(a, "controlled", SelectionCriterion::rouge);
  auto cb = select_checkpoint(b, "controlled", SelectionCriterion::rouge);
  CHECK(ca.checkpoint_step == cb.checkpoint_step);
  CHECK(ca.criterion_mean == cb.criterion_mean);
}

TEST_CASE("weighted mode weights languages by example count") {
  std::vector<MetricRecord> records;
  auto big = record("m", 100, "thai", 10, 10);
  big.n_examples = 900;
  auto small = record("m", 100, "welsh", 90, 90);
  small.n_examples = 100;
  records.push_back(big);
  records.push_back(small);
  auto big2 = record("m", 200, "thai", 40, 40);
  big2.n_examples = 900;
  auto small2 = record("m", 200, "welsh", 45, 45);
  small2.n_examples = 100;
  records.push_back(big2);
  records.push_back(small2);
  // Unweighted: step 100 mean 50 beats step 200 mean 40.5.
  CHECK(select_checkpoint(records, "m", SelectionCriterion::nli).checkpoint_step == 100);
  // Weighted: step 100 mean 18 loses to step 200 mean 40.5.
  CHECK(select_checkpoint(records, "m", SelectionCriterion::nli, /*weighted=*/true)
            .checkpoint_step == 200);
}

TEST_CASE("choices csv round trips") {
  TempDir dir("choices");
  auto records = fixture_table();
  std::vector<CheckpointChoice> choices = {
      select_checkpoint(records, "vanilla", SelectionCriterion::nli),
      select_checkpoint(records, "vanilla", SelectionCriterion::rouge)};
  auto path = dir.file("choices.csv");
  save_choices_csv(choices, path);
  auto back = load_choices_csv(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].criterion == SelectionCriterion::nli);
  CHECK(back[0].checkpoint_step == 3600);
  CHECK(back[1].checkpoint_step == 15000);
}
