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
// Run configuration and the command implementations behind the CLI:
// annotate -> curate -> evaluate -> select -> aggregate -> report. A fixed
// config plus fixed inputs produces byte-identical artifacts, across runs
// and across worker counts.

#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "entailsum/aggregate.hpp"
#include "entailsum/corpus.hpp"
#include "entailsum/curation.hpp"
#include "entailsum/entailment.hpp"
#include "entailsum/error.hpp"
#include "entailsum/hash.hpp"
#include "entailsum/humaneval.hpp"
#include "entailsum/io.hpp"
#include "entailsum/metrics.hpp"
#include "entailsum/remote_scorer.hpp"
#include "entailsum/selection.hpp"
#include "entailsum/version.hpp"

namespace entailsum {

inline constexpr const char* kEndpointEnvVar = "ENTAILSUM_SCORE_ENDPOINT";

enum class ScorerKind { oracle, remote };

struct ScorerConfig {
  ScorerKind kind = ScorerKind::oracle;
  std::string endpoint;
  int64_t batch_size = 32;
  int max_in_flight = 1;
  int retries = 3;
  int backoff_ms = 50;
};

struct RunConfig {
  std::string corpus_path;
  std::string profiles_path;
  ScorerConfig scorer;
  double threshold = 0.5;
  TokenizerSpec tokenizer;
  ControlTokens control_tokens;
  uint64_t seed = 0;
  std::string quotas_from;  // manifest of a previous curation run
  std::string out_dir = ".";
  bool strict = false;
  double beta = 1.0;
  QualityMode quality_mode = QualityMode::top_label;
  TierThresholds tiers;
  bool weighted_selection = false;
  bool nli_raw_scores = false;
  bool resume = false;

  // The endpoint can be swapped out per environment (CI stubs).
  void apply_environment() {
    if (scorer.kind != ScorerKind::remote) return;
    if (const char* env = std::getenv(kEndpointEnvVar); env && *env) {
      scorer.endpoint = env;
    }
  }

  void validate() const {
    if (scorer.kind == ScorerKind::remote && scorer.endpoint.empty()) {
      throw ValidationError("remote scorer requires an endpoint (flag, config or $" +
                            std::string(kEndpointEnvVar) + ")");
    }
    if (scorer.kind == ScorerKind::oracle && !scorer.endpoint.empty()) {
      throw ValidationError("oracle scorer does not take an endpoint");
    }
    if (!(threshold > 0.0 && threshold < 1.0)) {
      throw ValidationError("threshold must be in (0,1)");
    }
    if (scorer.batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (scorer.max_in_flight < 1) throw ValidationError("max_in_flight must be >= 1");
    tiers.validate();
  }

  // Hash of the output-determining settings. Execution knobs (batch size,
  // in-flight window, retry policy) are excluded on purpose: they cannot
  // change any artifact byte, and reruns at different parallelism must
  // produce the same manifest.
  std::string config_hash() const {
    nlohmann::ordered_json j;
    j["scorer_kind"] = scorer.kind == ScorerKind::oracle ? "oracle" : "remote";
    if (scorer.kind == ScorerKind::remote) j["endpoint"] = scorer.endpoint;
    j["threshold"] = format_fixed(threshold, 6);
    j["tokenizer"] = {{"kind", tokenizer_kind_name(tokenizer.kind)},
                      {"vocab", tokenizer.vocab_path},
                      {"lowercase", tokenizer.lowercase}};
    j["control_tokens"] = {{"pos", control_tokens.pos}, {"neg", control_tokens.neg}};
    j["seed"] = seed;
    j["beta"] = format_fixed(beta, 6);
    j["quality_mode"] = quality_mode == QualityMode::top_label ? "top_label" : "normalized_mean";
    j["tiers"] = {{"high_min", tiers.high_min}, {"low_max", tiers.low_max}};
    j["weighted_selection"] = weighted_selection;
    j["nli_raw_scores"] = nli_raw_scores;
    j["strict"] = strict;
    return hex64(fnv1a64(j.dump()));
  }
};

inline RunConfig load_run_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid config " + path.string() + ": " + e.what());
  }
  RunConfig c;
  auto get_str = [&](const char* key, std::string& dst) {
    if (j.contains(key)) dst = j.at(key).get<std::string>();
  };
  get_str("corpus", c.corpus_path);
  get_str("profiles", c.profiles_path);
  get_str("quotas_from", c.quotas_from);
  get_str("out", c.out_dir);
  if (j.contains("threshold")) c.threshold = j["threshold"].get<double>();
  if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
  if (j.contains("strict")) c.strict = j["strict"].get<bool>();
  if (j.contains("beta")) c.beta = j["beta"].get<double>();
  if (j.contains("resume")) c.resume = j["resume"].get<bool>();
  if (j.contains("weighted_selection")) c.weighted_selection = j["weighted_selection"].get<bool>();
  if (j.contains("nli_raw_scores")) c.nli_raw_scores = j["nli_raw_scores"].get<bool>();
  if (j.contains("quality_mode")) {
    c.quality_mode = quality_mode_from_name(j["quality_mode"].get<std::string>());
  }
  if (j.contains("scorer")) {
    const auto& s = j["scorer"];
    if (s.contains("kind")) {
      std::string kind = s["kind"].get<std::string>();
      if (kind == "oracle") c.scorer.kind = ScorerKind::oracle;
      else if (kind == "remote") c.scorer.kind = ScorerKind::remote;
      else throw ValidationError("unknown scorer kind \"" + kind + "\"");
    }
    if (s.contains("endpoint")) c.scorer.endpoint = s["endpoint"].get<std::string>();
    if (s.contains("batch_size")) c.scorer.batch_size = s["batch_size"].get<int64_t>();
    if (s.contains("max_in_flight")) c.scorer.max_in_flight = s["max_in_flight"].get<int>();
    if (s.contains("retries")) c.scorer.retries = s["retries"].get<int>();
    if (s.contains("backoff_ms")) c.scorer.backoff_ms = s["backoff_ms"].get<int>();
  }
  if (j.contains("tokenizer")) {
    const auto& t = j["tokenizer"];
    if (t.contains("kind")) c.tokenizer.kind = tokenizer_kind_from_name(t["kind"].get<std::string>());
    if (t.contains("vocab")) c.tokenizer.vocab_path = t["vocab"].get<std::string>();
    if (t.contains("lowercase")) c.tokenizer.lowercase = t["lowercase"].get<bool>();
  }
  if (j.contains("control_tokens")) {
    const auto& t = j["control_tokens"];
    if (t.contains("pos")) c.control_tokens.pos = t["pos"].get<std::string>();
    if (t.contains("neg")) c.control_tokens.neg = t["neg"].get<std::string>();
  }
  if (j.contains("tiers")) {
    const auto& t = j["tiers"];
    if (t.contains("high_min")) c.tiers.high_min = t["high_min"].get<int64_t>();
    if (t.contains("low_max")) c.tiers.low_max = t["low_max"].get<int64_t>();
  }
  return c;
}

inline std::unique_ptr<Scorer> make_scorer(const RunConfig& config) {
  if (config.scorer.kind == ScorerKind::oracle) return std::make_unique<OracleScorer>();
  RemoteScorerOptions options;
  options.endpoint = config.scorer.endpoint;
  options.max_retries = config.scorer.retries;
  options.initial_backoff_ms = config.scorer.backoff_ms;
  return std::make_unique<RemoteScorer>(options);
}

namespace paths {

inline std::filesystem::path annotations(const RunConfig& c) {
  return std::filesystem::path(c.out_dir) / "annotations.jsonl";
}
inline std::filesystem::path stats(const RunConfig& c) {
  return std::filesystem::path(c.out_dir) / "stats.csv";
}
inline std::filesystem::path curated(const RunConfig& c, CurationRecipe r) {
  return std::filesystem::path(c.out_dir) / ("curated_" + std::string(recipe_name(r)) + ".jsonl");
}
inline std::filesystem::path curated_manifest(const RunConfig& c, CurationRecipe r) {
  return std::filesystem::path(c.out_dir) /
         ("curated_" + std::string(recipe_name(r)) + ".manifest.json");
}
inline std::filesystem::path metrics(const RunConfig& c) {
  return std::filesystem::path(c.out_dir) / "metrics.csv";
}
inline std::filesystem::path choices(const RunConfig& c) {
  return std::filesystem::path(c.out_dir) / "choices.csv";
}
inline std::filesystem::path humaneval_scores(const RunConfig& c) {
  return std::filesystem::path(c.out_dir) / "humaneval_scores.csv";
}
inline std::filesystem::path report_dir(const RunConfig& c) {
  return std::filesystem::path(c.out_dir) / "report";
}

}  // namespace paths

namespace detail {

inline void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ValidationError(std::string(what) + " path not configured");
  if (!std::filesystem::exists(path)) {
    throw ValidationError(std::string(what) + " not found: " + path);
  }
}

inline void ensure_out_dir(const RunConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec) throw ValidationError("cannot create output directory: " + config.out_dir);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// annotate: score every corpus example, write the annotation stream and the
// per-language stats table.
//
// The annotation file is the one artifact written incrementally instead of
// via temp-and-rename: lines are appended as batches complete so an
// interrupted long run leaves a valid prefix, and --resume skips ids that
// are already present.

struct AnnotateSummary {
  AnnotateReport report;
  int64_t resumed = 0;  // examples skipped because already annotated
  EntailmentStats stats;
};

inline AnnotateSummary cmd_annotate(RunConfig config) {
  config.apply_environment();
  config.validate();
  detail::require_file(config.corpus_path, "corpus");
  detail::ensure_out_dir(config);

  CorpusReadOptions read_options;
  read_options.strict = config.strict;
  std::optional<ProfileTable> profiles;
  if (!config.profiles_path.empty()) {
    detail::require_file(config.profiles_path, "profiles");
    profiles = load_profiles(config.profiles_path, config.tiers);
    read_options.known_languages = profiles->keys();
  }

  auto annotations_path = paths::annotations(config);
  std::map<std::string, std::pair<int64_t, int64_t>> counts;
  std::unordered_map<std::string, bool> done;  // id -> entailed (resume only)
  if (config.resume && std::filesystem::exists(annotations_path)) {
    for (const auto& a : read_annotations(annotations_path)) {
      done[a.example_id] = a.entailed;
    }
  }

  auto scorer = make_scorer(config);
  CorpusReader reader(config.corpus_path, read_options);
  AnnotateSummary summary;

  // Append only when resuming; a fresh run replaces any stale file.
  auto open_mode = (config.resume ? std::ios::app : std::ios::trunc) | std::ios::binary;
  std::ofstream out(annotations_path, open_mode);
  if (!out) throw ValidationError("cannot open annotation file: " + annotations_path.string());

  ExampleSource source = [&]() -> std::optional<Example> {
    while (auto ex = reader.next()) {
      auto it = done.find(ex->id);
      if (it != done.end()) {
        ++summary.resumed;
        auto& c = counts[ex->language];
        ++c.first;
        if (it->second) ++c.second;
        continue;
      }
      return ex;
    }
    return std::nullopt;
  };

  int64_t since_flush = 0;
  AnnotationSink sink = [&](const EntailmentAnnotation& ann, const Example& ex) {
    out << annotation_to_json_line(ann) << '\n';
    if (++since_flush >= 256) {
      out.flush();
      since_flush = 0;
    }
    auto& c = counts[ex.language];
    ++c.first;
    if (ann.entailed) ++c.second;
  };

  AnnotateOptions options;
  options.threshold = config.threshold;
  options.batch_size = config.scorer.batch_size;
  options.max_in_flight = config.scorer.max_in_flight;
  summary.report = annotate(source, *scorer, options, sink);
  out.flush();
  if (!out) throw ValidationError("write failed: " + annotations_path.string());

  summary.stats = stats_from_counts(counts);
  write_stats_csv(summary.stats, paths::stats(config));

  nlohmann::ordered_json manifest;
  manifest["tool_version"] = kToolVersion;
  manifest["config_hash"] = config.config_hash();
  manifest["corpus"] = config.corpus_path;
  manifest["corpus_digest"] = file_digest(config.corpus_path);
  manifest["scorer_id"] = scorer->id();
  manifest["threshold"] = format_fixed(config.threshold, 6);
  manifest["annotated"] = summary.report.annotated;
  manifest["resumed"] = summary.resumed;
  manifest["skipped_lines"] = reader.stats().skipped;
  manifest["unknown_language"] = reader.stats().unknown_language;
  write_file_atomic(std::filesystem::path(config.out_dir) / "annotate_manifest.json",
                    manifest.dump(2) + "\n");
  return summary;
}

// ---------------------------------------------------------------------------
// curate: produce one derived training set.

inline CurationOutput cmd_curate(RunConfig config, CurationRecipe recipe) {
  config.apply_environment();
  config.validate();
  detail::require_file(config.corpus_path, "corpus");
  detail::ensure_out_dir(config);

  CorpusReadOptions read_options;
  read_options.strict = config.strict;
  Corpus corpus = load_corpus(config.corpus_path, read_options);

  auto need_annotations = [&]() {
    auto path = paths::annotations(config);
    if (!std::filesystem::exists(path)) {
      throw ValidationError("recipe \"" + std::string(recipe_name(recipe)) +
                            "\" needs an annotation file; expected " + path.string() +
                            " (run annotate first)");
    }
    return annotation_index(read_annotations(path));
  };
  auto need_quotas = [&]() {
    detail::require_file(config.quotas_from, "quota source manifest");
    return quotas_from_manifest(config.quotas_from);
  };

  CurationOutput out;
  switch (recipe) {
    case CurationRecipe::vanilla:
      out = passthrough_vanilla(corpus);
      break;
    case CurationRecipe::filtered:
      out = filter_entailed(corpus, need_annotations(), config.threshold);
      // Sibling file in the same output directory; keeps bundles relocatable.
      out.provenance.annotation_uri = paths::annotations(config).filename().string();
      break;
    case CurationRecipe::controlled:
      out = augment_controlled(corpus, need_annotations(), config.control_tokens,
                               config.strict);
      out.provenance.annotation_uri = paths::annotations(config).filename().string();
      break;
    case CurationRecipe::random_selection:
      out = random_select(corpus, need_quotas(), config.seed);
      break;
    case CurationRecipe::self_rouge:
      out = self_rouge_select(corpus, need_quotas(), Tokenizer(config.tokenizer),
                              config.beta);
      break;
  }
  write_corpus_jsonl(paths::curated(config, recipe), out.examples);
  write_curation_manifest(out, paths::curated_manifest(config, recipe));
  return out;
}

// Inference-time prefixing, exposed separately from the training recipes.
inline CurationOutput cmd_prepare_inference(RunConfig config,
                                            OnAlreadyPrefixed on_prefixed = OnAlreadyPrefixed::warn) {
  config.validate();
  detail::require_file(config.corpus_path, "corpus");
  detail::ensure_out_dir(config);
  CorpusReadOptions read_options;
  read_options.strict = config.strict;
  Corpus corpus = load_corpus(config.corpus_path, read_options);
  CurationOutput out = prepare_inference(corpus, config.control_tokens.pos, on_prefixed);
  auto path = std::filesystem::path(config.out_dir) / "inference_input.jsonl";
  write_corpus_jsonl(path, out.examples);
  write_curation_manifest(out, std::filesystem::path(config.out_dir) /
                                   "inference_input.manifest.json");
  return out;
}

// ---------------------------------------------------------------------------
// evaluate: score one (model, checkpoint) run and append rows to the
// metrics table.

struct EvaluateRequest {
  std::string predictions_path;
  std::string references_path;
  std::string documents_path;
  std::string model_id;
  int64_t checkpoint_step = 0;
  std::string language;  // fallback when files carry no language field
};

inline std::vector<MetricRecord> cmd_evaluate(RunConfig config, const EvaluateRequest& request) {
  config.apply_environment();
  config.validate();
  detail::require_file(request.predictions_path, "predictions");
  detail::require_file(request.references_path, "references");
  detail::require_file(request.documents_path, "documents");
  if (request.model_id.empty()) throw ValidationError("model_id is required");
  detail::ensure_out_dir(config);

  PredictionFile predictions = load_prediction_file(request.predictions_path);
  PredictionFile references = load_prediction_file(request.references_path);
  PredictionFile documents = load_prediction_file(request.documents_path);
  if (predictions.text_by_id.empty()) {
    throw ValidationError("predictions file is empty: " + request.predictions_path);
  }
  detail::require_same_ids(predictions.text_by_id, references.text_by_id, "predictions",
                           "references");
  detail::require_same_ids(predictions.text_by_id, documents.text_by_id, "predictions",
                           "documents");

  // Language per id: reference file first, then prediction file, then the
  // request-level label.
  std::map<std::string, std::vector<std::string>> ids_by_language;
  for (const auto& [id, _] : predictions.text_by_id) {
    std::string language;
    if (auto it = references.language_by_id.find(id); it != references.language_by_id.end()) {
      language = it->second;
    } else if (auto it2 = predictions.language_by_id.find(id);
               it2 != predictions.language_by_id.end()) {
      language = it2->second;
    } else if (!request.language.empty()) {
      language = normalize_language_key(request.language);
    } else {
      throw ValidationError("no language for id \"" + id +
                            "\": add a \"language\" field or pass --language");
    }
    ids_by_language[language].push_back(id);
  }

  Tokenizer tokenizer(config.tokenizer);
  auto scorer = make_scorer(config);
  int workers = config.scorer.max_in_flight;

  std::vector<MetricRecord> fresh;
  for (const auto& [language, ids] : ids_by_language) {
    TextById pred, ref, doc;
    for (const auto& id : ids) {
      pred[id] = predictions.text_by_id.at(id);
      ref[id] = references.text_by_id.at(id);
      doc[id] = documents.text_by_id.at(id);
    }
    MetricRecord record;
    record.model_id = request.model_id;
    record.checkpoint_step = request.checkpoint_step;
    record.language = language;
    record.rouge_l = corpus_rouge(pred, ref, tokenizer, config.beta, workers);
    record.nli = corpus_nli(pred, doc, *scorer, config.threshold, config.nli_raw_scores,
                            workers);
    record.length_ratio = length_ratio(pred, ref, tokenizer, workers);
    record.n_examples = static_cast<int64_t>(ids.size());
    fresh.push_back(std::move(record));
  }

  std::vector<MetricRecord> all;
  auto metrics_path = paths::metrics(config);
  if (std::filesystem::exists(metrics_path)) all = load_metrics_csv(metrics_path);
  all.insert(all.end(), fresh.begin(), fresh.end());
  save_metrics_csv(std::move(all), metrics_path);  // rejects duplicate keys
  return fresh;
}

// ---------------------------------------------------------------------------
// select-checkpoint

inline std::vector<CheckpointChoice> cmd_select_checkpoint(RunConfig config,
                                                           const std::string& only_model = "") {
  config.validate();
  auto metrics_path = paths::metrics(config);
  detail::require_file(metrics_path.string(), "metrics table");
  auto records = load_metrics_csv(metrics_path);

  std::set<std::string> models;
  for (const auto& r : records) {
    if (only_model.empty() || r.model_id == only_model) models.insert(r.model_id);
  }
  if (models.empty()) {
    throw ValidationError("no metric records" +
                          (only_model.empty() ? std::string() : " for model \"" + only_model + "\""));
  }
  std::vector<CheckpointChoice> choices;
  for (const auto& model : models) {
    choices.push_back(select_checkpoint(records, model, SelectionCriterion::nli,
                                        config.weighted_selection));
    choices.push_back(select_checkpoint(records, model, SelectionCriterion::rouge,
                                        config.weighted_selection));
  }
  save_choices_csv(choices, paths::choices(config));
  return choices;
}

// ---------------------------------------------------------------------------
// aggregate

inline std::vector<GroupReport> cmd_aggregate(RunConfig config) {
  config.validate();
  auto metrics_path = paths::metrics(config);
  detail::require_file(metrics_path.string(), "metrics table");
  detail::require_file(config.profiles_path, "profiles");
  auto records = load_metrics_csv(metrics_path);
  auto profiles = load_profiles(config.profiles_path, config.tiers);
  detail::ensure_out_dir(config);

  std::vector<GroupReport> reports;
  for (Grouping g : {Grouping::tier, Grouping::family, Grouping::xnli}) {
    GroupReport report = group_average(records, profiles, g);
    std::string base = std::string("groups_") + grouping_name(g);
    write_file_atomic(std::filesystem::path(config.out_dir) / (base + ".csv"),
                      render_group_report_csv(report));
    write_file_atomic(std::filesystem::path(config.out_dir) / (base + ".md"),
                      render_group_report_markdown(report));
    reports.push_back(std::move(report));
  }
  return reports;
}

// ---------------------------------------------------------------------------
// humaneval

struct HumanEvalSummary {
  std::vector<SystemScores> scores;
  std::vector<std::string> warnings;
};

inline HumanEvalSummary cmd_humaneval(RunConfig config, const std::string& ratings_path) {
  config.validate();
  detail::require_file(ratings_path, "ratings");
  detail::ensure_out_dir(config);
  RatingSet ratings = load_ratings(ratings_path);
  HumanEvalSummary summary;
  summary.scores = score_systems(ratings, config.quality_mode);
  summary.warnings = ratings.warnings;
  save_system_scores_csv(summary.scores, paths::humaneval_scores(config));
  return summary;
}

// ---------------------------------------------------------------------------
// report: render the deterministic bundle from the upstream artifacts.

namespace detail {

struct StatsFileRow {
  std::string language;
  std::string n_train, n_entailed, pct;
};

inline std::vector<StatsFileRow> load_stats_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read stats file: " + path.string());
  const std::string ctx = "stats " + path.string();
  CsvTable table = CsvTable::read(in, ctx);
  table.require_columns({"language", "n_train", "n_entailed", "pct_entailed"}, ctx);
  std::vector<StatsFileRow> rows;
  for (const auto& row : table.rows()) {
    rows.push_back({row[table.column("language", ctx)], row[table.column("n_train", ctx)],
                    row[table.column("n_entailed", ctx)],
                    row[table.column("pct_entailed", ctx)]});
  }
  return rows;
}

}  // namespace detail

inline void cmd_report(RunConfig config) {
  config.validate();
  auto stats_path = paths::stats(config);
  auto metrics_path = paths::metrics(config);
  auto choices_path = paths::choices(config);
  detail::require_file(stats_path.string(), "stats table");
  detail::require_file(metrics_path.string(), "metrics table");
  detail::require_file(choices_path.string(), "choices table");
  detail::require_file(config.profiles_path, "profiles");

  auto stats_rows = detail::load_stats_rows(stats_path);
  auto records = load_metrics_csv(metrics_path);
  auto choices = load_choices_csv(choices_path);
  auto profiles = load_profiles(config.profiles_path, config.tiers);
  bool have_humaneval = std::filesystem::exists(paths::humaneval_scores(config));
  std::vector<SystemScores> humaneval;
  if (have_humaneval) humaneval = load_system_scores_csv(paths::humaneval_scores(config));

  auto report_dir = paths::report_dir(config);
  std::filesystem::create_directories(report_dir);
  std::map<std::string, std::string> inputs;
  inputs["stats.csv"] = file_digest(stats_path);
  inputs["metrics.csv"] = file_digest(metrics_path);
  inputs["choices.csv"] = file_digest(choices_path);
  inputs["profiles"] = file_digest(config.profiles_path);
  if (have_humaneval) inputs["humaneval_scores.csv"] = file_digest(paths::humaneval_scores(config));

  std::vector<std::string> outputs;

  auto emit = [&](const std::string& name, const std::string& body) {
    write_file_atomic(report_dir / name, body);
    outputs.push_back(name);
  };

  // Entailment stats, as-is plus a markdown view.
  {
    std::string csv = "language,n_train,n_entailed,pct_entailed\n";
    std::string md = "| language | n_train | n_entailed | % entailed |\n|---|---|---|---|\n";
    for (const auto& row : stats_rows) {
      csv += csv_escape(row.language) + "," + row.n_train + "," + row.n_entailed + "," +
             row.pct + "\n";
      md += "| " + row.language + " | " + row.n_train + " | " + row.n_entailed + " | " +
            row.pct + " |\n";
    }
    emit("stats.csv", csv);
    emit("stats.md", md);
  }

  // Checkpoint choices with the earliness diagnostic.
  {
    std::map<std::string, std::map<SelectionCriterion, const CheckpointChoice*>> by_model;
    for (const auto& c : choices) by_model[c.model_id][c.criterion] = &c;
    std::string csv = "model_id,best_nli_step,best_nli_mean,best_rouge_step,best_rouge_mean,nli_earlier\n";
    std::string md =
        "| model | best NLI step | NLI mean | best ROUGE step | ROUGE mean | NLI earlier |\n"
        "|---|---|---|---|---|---|\n";
    for (const auto& [model, by_criterion] : by_model) {
      auto nli_it = by_criterion.find(SelectionCriterion::nli);
      auto rouge_it = by_criterion.find(SelectionCriterion::rouge);
      if (nli_it == by_criterion.end() || rouge_it == by_criterion.end()) {
        throw ValidationError("choices table misses a criterion for model \"" + model + "\"");
      }
      const auto* n = nli_it->second;
      const auto* r = rouge_it->second;
      bool earlier = best_nli_earlier(*n, *r);
      csv += csv_escape(model) + "," + std::to_string(n->checkpoint_step) + "," +
             format_fixed(n->criterion_mean, 2) + "," + std::to_string(r->checkpoint_step) +
             "," + format_fixed(r->criterion_mean, 2) + "," + (earlier ? "true" : "false") +
             "\n";
      md += "| " + model + " | " + std::to_string(n->checkpoint_step) + " | " +
            format_fixed(n->criterion_mean, 2) + " | " + std::to_string(r->checkpoint_step) +
            " | " + format_fixed(r->criterion_mean, 2) + " | " + (earlier ? "yes" : "no") +
            " |\n";
    }
    emit("checkpoints.csv", csv);
    emit("checkpoints.md", md);
  }

  for (Grouping g : {Grouping::tier, Grouping::family, Grouping::xnli}) {
    GroupReport report = group_average(records, profiles, g);
    std::string base = std::string("groups_") + grouping_name(g);
    emit(base + ".csv", render_group_report_csv(report));
    emit(base + ".md", render_group_report_markdown(report));
  }

  if (have_humaneval) {
    // One table per measure: language rows x system columns.
    struct Measure {
      const char* name;
      double LanguageRates::*field;
    };
    const Measure measures[] = {{"quality", &LanguageRates::quality_rate},
                                {"attribution", &LanguageRates::attribution_rate},
                                {"informativeness", &LanguageRates::informativeness_rate}};
    std::vector<std::string> systems;
    std::set<std::string> languages;
    for (const auto& s : humaneval) {
      systems.push_back(s.system_id);
      for (const auto& row : s.per_language) languages.insert(row.language);
    }
    std::sort(systems.begin(), systems.end());
    for (const auto& m : measures) {
      std::string csv = "language";
      std::string md = "| language |";
      for (const auto& sys : systems) {
        csv += "," + csv_escape(sys);
        md += " " + sys + " |";
      }
      csv += "\n";
      md += "\n|---|";
      for (size_t i = 0; i < systems.size(); ++i) md += "---|";
      md += "\n";
      auto value_for = [&](const std::string& sys, const std::string& language) -> std::string {
        for (const auto& s : humaneval) {
          if (s.system_id != sys) continue;
          if (language == "overall") return format_fixed(s.overall.*(m.field), 2);
          for (const auto& row : s.per_language) {
            if (row.language == language) return format_fixed(row.*(m.field), 2);
          }
        }
        return "";
      };
      for (const auto& language : languages) {
        csv += csv_escape(language);
        md += "| " + language + " |";
        for (const auto& sys : systems) {
          std::string v = value_for(sys, language);
          csv += "," + v;
          md += " " + v + " |";
        }
        csv += "\n";
        md += "\n";
      }
      csv += "overall";
      md += "| overall |";
      for (const auto& sys : systems) {
        std::string v = value_for(sys, "overall");
        csv += "," + v;
        md += " " + v + " |";
      }
      csv += "\n";
      md += "\n";
      emit(std::string("humaneval_") + m.name + ".csv", csv);
      emit(std::string("humaneval_") + m.name + ".md", md);
    }
  }

  // Manifest: run metadata lives here, never in table bodies.
  nlohmann::ordered_json manifest;
  manifest["tool_version"] = kToolVersion;
  manifest["config_hash"] = config.config_hash();
  nlohmann::ordered_json in_digests;
  for (const auto& [name, digest] : inputs) in_digests[name] = digest;
  manifest["inputs"] = std::move(in_digests);
  nlohmann::ordered_json out_digests;
  std::sort(outputs.begin(), outputs.end());
  for (const auto& name : outputs) out_digests[name] = file_digest(report_dir / name);
  manifest["outputs"] = std::move(out_digests);
  write_file_atomic(report_dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace entailsum
