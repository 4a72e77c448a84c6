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
// Entailment scoring. A Scorer estimates p(hypothesis is entailed by
// premise) in [0,1]; `annotate` runs one over a corpus stream in batches and
// emits one annotation per example, in corpus order, regardless of batch size
// or how many batches are in flight.

#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"

#include "entailsum/corpus.hpp"
#include "entailsum/error.hpp"
#include "entailsum/io.hpp"
#include "entailsum/text.hpp"

namespace entailsum {

struct EntailmentAnnotation {
  std::string example_id;
  double score = 0.0;     // in [0,1]
  bool entailed = false;  // score > threshold, strictly
  double threshold = 0.5;
  std::string scorer_id;
};

struct ScorePair {
  std::string premise;
  std::string hypothesis;
};

// Implementations must be safe for concurrent score()/score_batch() calls
// and deterministic for a fixed configuration.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::string id() const = 0;
  virtual double score(const std::string& premise, const std::string& hypothesis) = 0;

  virtual std::vector<double> score_batch(const std::vector<ScorePair>& pairs) {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(score(p.premise, p.hypothesis));
    return out;
  }
};

// Deterministic stand-in scorer: the fraction of distinct summary tokens that
// also occur in the document, under whitespace tokenization. It makes the
// full pipeline testable without a model; it is not an NLI quality claim.
class OracleScorer : public Scorer {
 public:
  std::string id() const override { return "oracle-containment/v1"; }

  double score(const std::string& premise, const std::string& hypothesis) override {
    if (trim(premise).empty() || trim(hypothesis).empty()) {
      throw ValidationError("oracle scorer requires non-empty premise and hypothesis");
    }
    std::unordered_set<std::string_view> doc_tokens;
    for (auto t : whitespace_tokens(premise)) doc_tokens.insert(t);
    std::unordered_set<std::string_view> summary_tokens;
    for (auto t : whitespace_tokens(hypothesis)) summary_tokens.insert(t);
    size_t contained = 0;
    for (auto t : summary_tokens) {
      if (doc_tokens.count(t)) ++contained;
    }
    return static_cast<double>(contained) / static_cast<double>(summary_tokens.size());
  }
};

struct AnnotateOptions {
  double threshold = 0.5;
  int64_t batch_size = 32;
  int max_in_flight = 1;  // concurrent batches; output order is unaffected

  void validate() const {
    if (!(threshold > 0.0 && threshold < 1.0)) {
      throw ValidationError("threshold must be in (0,1), got " + format_fixed(threshold, 6));
    }
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (max_in_flight < 1) throw ValidationError("max_in_flight must be >= 1");
  }
};

struct AnnotateReport {
  int64_t annotated = 0;
  int64_t batches = 0;
  // High-water mark of examples resident in the pipeline (pending batches
  // plus the one being filled). Bounded by batch_size * (max_in_flight + 1),
  // independent of corpus length.
  int64_t peak_buffered_examples = 0;
};

using ExampleSource = std::function<std::optional<Example>()>;
using AnnotationSink = std::function<void(const EntailmentAnnotation&, const Example&)>;

// Streams examples from `source`, scores them in batches (up to
// max_in_flight batches concurrently) and emits annotations in input order.
// Scorer failures are rethrown with the id of the first example of the
// failing batch attached; previously emitted annotations stay valid.
inline AnnotateReport annotate(const ExampleSource& source, Scorer& scorer,
                               const AnnotateOptions& options,
                               const AnnotationSink& sink) {
  options.validate();
  AnnotateReport report;

  struct Batch {
    std::vector<Example> examples;
    std::future<std::vector<double>> scores;
  };
  std::deque<Batch> window;
  int64_t buffered = 0;
  bool exhausted = false;

  auto note_peak = [&] {
    report.peak_buffered_examples = std::max(report.peak_buffered_examples, buffered);
  };

  auto drain_front = [&] {
    Batch batch = std::move(window.front());
    window.pop_front();
    std::vector<double> scores;
    try {
      scores = batch.scores.get();
    } catch (const ValidationError& e) {
      throw ValidationError(std::string(e.what()) + " (while scoring example \"" +
                            batch.examples.front().id + "\")");
    } catch (const ServiceError& e) {
      throw ServiceError(std::string(e.what()) + " (while scoring example \"" +
                         batch.examples.front().id + "\")");
    }
    if (scores.size() != batch.examples.size()) {
      throw ServiceError("scorer returned " + std::to_string(scores.size()) +
                         " scores for a batch of " + std::to_string(batch.examples.size()));
    }
    for (size_t i = 0; i < batch.examples.size(); ++i) {
      double s = scores[i];
      if (s < 0.0 || s > 1.0) {
        throw ServiceError("score out of [0,1] for example \"" +
                           batch.examples[i].id + "\": " + format_fixed(s, 6));
      }
      EntailmentAnnotation ann;
      ann.example_id = batch.examples[i].id;
      ann.score = s;
      ann.threshold = options.threshold;
      ann.entailed = s > options.threshold;
      ann.scorer_id = scorer.id();
      sink(ann, batch.examples[i]);
      ++report.annotated;
    }
    buffered -= static_cast<int64_t>(batch.examples.size());
  };

  while (!exhausted || !window.empty()) {
    // Fill the window up to max_in_flight pending batches.
    while (!exhausted && static_cast<int>(window.size()) < options.max_in_flight) {
      std::vector<Example> examples;
      examples.reserve(static_cast<size_t>(options.batch_size));
      while (static_cast<int64_t>(examples.size()) < options.batch_size) {
        auto ex = source();
        if (!ex) {
          exhausted = true;
          break;
        }
        examples.push_back(std::move(*ex));
      }
      if (examples.empty()) break;
      buffered += static_cast<int64_t>(examples.size());
      note_peak();
      ++report.batches;
      Batch batch;
      batch.examples = std::move(examples);
      std::vector<ScorePair> pairs;
      pairs.reserve(batch.examples.size());
      for (const auto& ex : batch.examples) pairs.push_back({ex.document, ex.summary});
      if (options.max_in_flight == 1) {
        // Synchronous path; no thread churn for the common case.
        std::promise<std::vector<double>> ready;
        try {
          ready.set_value(scorer.score_batch(pairs));
        } catch (...) {
          ready.set_exception(std::current_exception());
        }
        batch.scores = ready.get_future();
      } else {
        batch.scores = std::async(std::launch::async,
                                  [&scorer, pairs = std::move(pairs)] {
                                    return scorer.score_batch(pairs);
                                  });
      }
      window.push_back(std::move(batch));
    }
    if (window.empty()) break;
    drain_front();
  }
  return report;
}

// ---------------------------------------------------------------------------
// Annotation file: JSON lines, append-friendly so long remote runs can be
// resumed. Scores and thresholds carry six decimals.

inline std::string annotation_to_json_line(const EntailmentAnnotation& a) {
  std::string out = "{\"example_id\":";
  out += nlohmann::json(a.example_id).dump();
  out += ",\"score\":" + format_fixed(a.score, 6);
  out += ",\"entailed\":";
  out += a.entailed ? "true" : "false";
  out += ",\"threshold\":" + format_fixed(a.threshold, 6);
  out += ",\"scorer_id\":" + nlohmann::json(a.scorer_id).dump();
  out += "}";
  return out;
}

inline EntailmentAnnotation parse_annotation_line(const std::string& line,
                                                  size_t line_no) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("annotation line " + std::to_string(line_no) +
                          ": invalid JSON (" + e.what() + ")");
  }
  EntailmentAnnotation a;
  try {
    a.example_id = j.at("example_id").get<std::string>();
    a.score = j.at("score").get<double>();
    a.entailed = j.at("entailed").get<bool>();
    a.threshold = j.at("threshold").get<double>();
    a.scorer_id = j.at("scorer_id").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("annotation line " + std::to_string(line_no) +
                          ": bad record (" + e.what() + ")");
  }
  return a;
}

inline std::vector<EntailmentAnnotation> read_annotations(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read annotation file: " + path.string());
  std::vector<EntailmentAnnotation> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    out.push_back(parse_annotation_line(line, line_no));
  }
  return out;
}

// Id-keyed view over annotations. Duplicate ids are rejected.
inline std::unordered_map<std::string, EntailmentAnnotation> annotation_index(
    const std::vector<EntailmentAnnotation>& annotations) {
  std::unordered_map<std::string, EntailmentAnnotation> out;
  out.reserve(annotations.size());
  for (const auto& a : annotations) {
    if (!out.emplace(a.example_id, a).second) {
      throw ValidationError("duplicate annotation for example id \"" + a.example_id + "\"");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-language entailment statistics.

struct EntailmentStatsRow {
  std::string language;
  int64_t n_train = 0;
  int64_t n_entailed = 0;
  double pct_entailed = 0.0;  // 100 * n_entailed / n_train, rounded to 2 dp
};

struct EntailmentStats {
  std::vector<EntailmentStatsRow> rows;  // sorted by language key
  double avg_n_train = 0.0;              // unweighted means over rows
  double avg_n_entailed = 0.0;
  double avg_pct_entailed = 0.0;
};

// Pure arithmetic over per-language (total, entailed) counts.
inline EntailmentStats stats_from_counts(
    const std::map<std::string, std::pair<int64_t, int64_t>>& counts) {
  EntailmentStats stats;
  double sum_train = 0, sum_ent = 0, sum_pct = 0;
  for (const auto& [language, c] : counts) {
    auto [n_train, n_entailed] = c;
    if (n_train <= 0) {
      throw ValidationError("language \"" + language + "\" has no examples");
    }
    if (n_entailed < 0 || n_entailed > n_train) {
      throw ValidationError("entailed count out of range for language \"" + language + "\"");
    }
    EntailmentStatsRow row;
    row.language = language;
    row.n_train = n_train;
    row.n_entailed = n_entailed;
    row.pct_entailed = round2(100.0 * static_cast<double>(n_entailed) /
                              static_cast<double>(n_train));
    sum_train += static_cast<double>(n_train);
    sum_ent += static_cast<double>(n_entailed);
    sum_pct += row.pct_entailed;
    stats.rows.push_back(std::move(row));
  }
  if (!stats.rows.empty()) {
    double n = static_cast<double>(stats.rows.size());
    stats.avg_n_train = sum_train / n;
    stats.avg_n_entailed = sum_ent / n;
    stats.avg_pct_entailed = sum_pct / n;
  }
  return stats;
}

// Joins a materialized corpus with its annotations; every example must have
// exactly one annotation.
inline EntailmentStats compute_stats(const std::vector<Example>& examples,
                                     const std::vector<EntailmentAnnotation>& annotations) {
  auto index = annotation_index(annotations);
  if (index.size() != examples.size()) {
    throw ValidationError("annotation count (" + std::to_string(index.size()) +
                          ") does not match corpus size (" +
                          std::to_string(examples.size()) + ")");
  }
  std::map<std::string, std::pair<int64_t, int64_t>> counts;
  for (const auto& ex : examples) {
    auto it = index.find(ex.id);
    if (it == index.end()) {
      throw ValidationError("missing annotation for example id \"" + ex.id + "\"");
    }
    auto& c = counts[ex.language];
    ++c.first;
    if (it->second.entailed) ++c.second;
  }
  return stats_from_counts(counts);
}

// CSV layout: one row per language plus a terminal "average" row.
inline void write_stats_csv(const EntailmentStats& stats,
                            const std::filesystem::path& path) {
  AtomicFileWriter w(path);
  w.stream() << "language,n_train,n_entailed,pct_entailed\n";
  for (const auto& row : stats.rows) {
    w.stream() << csv_escape(row.language) << ',' << row.n_train << ','
               << row.n_entailed << ',' << format_fixed(row.pct_entailed, 2) << '\n';
  }
  if (!stats.rows.empty()) {
    w.stream() << "average," << format_fixed(stats.avg_n_train, 2) << ','
               << format_fixed(stats.avg_n_entailed, 2) << ','
               << format_fixed(stats.avg_pct_entailed, 2) << '\n';
  }
  w.commit();
}

}  // namespace entailsum
