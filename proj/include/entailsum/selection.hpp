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
//
// Cross-language checkpoint selection: for one model, pick the checkpoint
// whose mean metric over all languages is highest. One checkpoint serves
// every language; there is no per-language selection.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "entailsum/csv.hpp"
#include "entailsum/error.hpp"
#include "entailsum/io.hpp"
#include "entailsum/metrics.hpp"
#include "entailsum/parallel.hpp"
#include "entailsum/text.hpp"

namespace entailsum {

enum class SelectionCriterion { rouge, nli };

inline const char* criterion_name(SelectionCriterion c) {
  return c == SelectionCriterion::rouge ? "rouge" : "nli";
}

inline SelectionCriterion criterion_from_name(const std::string& name) {
  if (name == "rouge") return SelectionCriterion::rouge;
  if (name == "nli") return SelectionCriterion::nli;
  throw ValidationError("unknown selection criterion \"" + name + "\"");
}

struct CheckpointChoice {
  std::string model_id;
  SelectionCriterion criterion = SelectionCriterion::rouge;
  int64_t checkpoint_step = 0;
  double criterion_mean = 0.0;
  int64_t n_languages = 0;
};

// Returns the step of `model_id` maximizing the mean of the criterion metric
// over languages. Every checkpoint must cover the same language set; ragged
// coverage is an error listing the missing cells. Ties go to the smaller
// step. With `weighted`, languages are weighted by n_examples instead of
// counting once each.
inline CheckpointChoice select_checkpoint(const std::vector<MetricRecord>& records,
                                          const std::string& model_id,
                                          SelectionCriterion criterion,
                                          bool weighted = false) {
  std::map<int64_t, std::map<std::string, const MetricRecord*>> by_step;
  std::set<std::string> all_languages;
  for (const auto& r : records) {
    if (r.model_id != model_id) continue;
    by_step[r.checkpoint_step][r.language] = &r;
    all_languages.insert(r.language);
  }
  if (by_step.empty()) {
    throw ValidationError("no metric records for model \"" + model_id + "\"");
  }
  std::string missing;
  for (const auto& [step, by_language] : by_step) {
    for (const auto& language : all_languages) {
      if (!by_language.count(language)) {
        missing += " (" + std::to_string(step) + ", " + language + ")";
      }
    }
  }
  if (!missing.empty()) {
    throw ValidationError("ragged language coverage for model \"" + model_id +
                          "\": missing cells:" + missing);
  }

  CheckpointChoice best;
  best.model_id = model_id;
  best.criterion = criterion;
  best.n_languages = static_cast<int64_t>(all_languages.size());
  bool first = true;
  for (const auto& [step, by_language] : by_step) {  // ascending step order
    KahanSum sum;
    KahanSum weight_sum;
    for (const auto& [language, record] : by_language) {
      double v = criterion == SelectionCriterion::rouge ? record->rouge_l : record->nli;
      double w = weighted ? static_cast<double>(record->n_examples) : 1.0;
      sum.add(v * w);
      weight_sum.add(w);
    }
    double mean = sum.value() / weight_sum.value();
    if (first || mean > best.criterion_mean) {  // strict: earlier step wins ties
      best.checkpoint_step = step;
      best.criterion_mean = mean;
      first = false;
    }
  }
  return best;
}

// Diagnostic the report surfaces next to the choices: whether the
// entailment-selected checkpoint comes earlier in training than the
// ROUGE-selected one.
inline bool best_nli_earlier(const CheckpointChoice& nli_choice,
                             const CheckpointChoice& rouge_choice) {
  if (nli_choice.model_id != rouge_choice.model_id) {
    throw ValidationError("choices belong to different models");
  }
  if (nli_choice.criterion != SelectionCriterion::nli ||
      rouge_choice.criterion != SelectionCriterion::rouge) {
    throw ValidationError("best_nli_earlier needs one nli and one rouge choice");
  }
  return nli_choice.checkpoint_step < rouge_choice.checkpoint_step;
}

inline void save_choices_csv(std::vector<CheckpointChoice> choices,
                             const std::filesystem::path& path) {
  std::sort(choices.begin(), choices.end(),
            [](const CheckpointChoice& a, const CheckpointChoice& b) {
              std::string_view ca = criterion_name(a.criterion);
              std::string_view cb = criterion_name(b.criterion);
              return std::tie(a.model_id, ca) < std::tie(b.model_id, cb);
            });
  AtomicFileWriter w(path);
  w.stream() << "model_id,criterion,checkpoint_step,criterion_mean,n_languages\n";
  for (const auto& c : choices) {
    w.stream() << csv_escape(c.model_id) << ',' << criterion_name(c.criterion) << ','
               << c.checkpoint_step << ',' << format_fixed(c.criterion_mean, 6) << ','
               << c.n_languages << '\n';
  }
  w.commit();
}

inline std::vector<CheckpointChoice> load_choices_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read choices file: " + path.string());
  const std::string ctx = "choices " + path.string();
  CsvTable table = CsvTable::read(in, ctx);
  table.require_columns(
      {"model_id", "criterion", "checkpoint_step", "criterion_mean", "n_languages"}, ctx);
  std::vector<CheckpointChoice> out;
  for (const auto& row : table.rows()) {
    CheckpointChoice c;
    c.model_id = row[table.column("model_id", ctx)];
    c.criterion = criterion_from_name(row[table.column("criterion", ctx)]);
    c.checkpoint_step = parse_int_field(row[table.column("checkpoint_step", ctx)], ctx);
    c.criterion_mean = std::stod(row[table.column("criterion_mean", ctx)]);
    c.n_languages = parse_int_field(row[table.column("n_languages", ctx)], ctx);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace entailsum
