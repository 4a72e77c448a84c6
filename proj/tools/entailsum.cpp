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
// entailsum: entailment-signal corpus curation and evaluation.
//
// Subcommands: annotate, curate, evaluate, select-checkpoint, aggregate,
// humaneval, report. Exit codes: 0 success, 1 validation error, 2 scoring
// service failure. Errors also go to stderr as one-line JSON records.

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "entailsum/pipeline.hpp"
#include "entailsum/version.hpp"

namespace {

using namespace entailsum;

struct CommonFlags {
  std::string config_path;
  std::string corpus;
  std::string profiles;
  std::string scorer;
  std::string endpoint;
  double threshold = -1.0;
  int64_t seed = -1;
  std::string tokenizer;
  std::string out;
  int batch_size = 0;
  int max_in_flight = 0;
  bool strict = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file; flags override it");
  cmd->add_option("--corpus", flags.corpus, "corpus file (JSON lines)");
  cmd->add_option("--profiles", flags.profiles, "language profile CSV");
  cmd->add_option("--scorer", flags.scorer, "scorer kind: oracle or remote");
  cmd->add_option("--endpoint", flags.endpoint, "remote scoring endpoint URL");
  cmd->add_option("--threshold", flags.threshold, "entailment threshold (default 0.5)");
  cmd->add_option("--seed", flags.seed, "seed for random selection");
  cmd->add_option("--tokenizer", flags.tokenizer,
                  "tokenizer kind: whitespace, character or subword_vocab");
  cmd->add_option("--out", flags.out, "output directory");
  cmd->add_option("--batch-size", flags.batch_size, "scoring batch size");
  cmd->add_option("--max-in-flight", flags.max_in_flight, "concurrent scoring batches");
  cmd->add_flag("--strict", flags.strict, "abort on malformed or duplicate records");
}

RunConfig build_config(const CommonFlags& flags) {
  RunConfig config;
  if (!flags.config_path.empty()) config = load_run_config(flags.config_path);
  if (!flags.corpus.empty()) config.corpus_path = flags.corpus;
  if (!flags.profiles.empty()) config.profiles_path = flags.profiles;
  if (!flags.scorer.empty()) {
    if (flags.scorer == "oracle") config.scorer.kind = ScorerKind::oracle;
    else if (flags.scorer == "remote") config.scorer.kind = ScorerKind::remote;
    else throw ValidationError("unknown scorer kind \"" + flags.scorer + "\"");
  }
  if (!flags.endpoint.empty()) config.scorer.endpoint = flags.endpoint;
  if (flags.threshold >= 0.0) config.threshold = flags.threshold;
  if (flags.seed >= 0) config.seed = static_cast<uint64_t>(flags.seed);
  if (!flags.tokenizer.empty()) config.tokenizer.kind = tokenizer_kind_from_name(flags.tokenizer);
  if (!flags.out.empty()) config.out_dir = flags.out;
  if (flags.batch_size > 0) config.scorer.batch_size = flags.batch_size;
  if (flags.max_in_flight > 0) config.scorer.max_in_flight = flags.max_in_flight;
  if (flags.strict) config.strict = true;
  return config;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

int error_record(const char* kind, const std::string& message) {
  nlohmann::json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  std::cerr << j.dump() << "\n";
  return std::string(kind) == "service" ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entailment-signal corpus curation and evaluation toolkit"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  CommonFlags flags;

  auto* annotate_cmd =
      app.add_subcommand("annotate", "score a corpus and write annotations plus stats");
  add_common_flags(annotate_cmd, flags);
  bool resume = false;
  annotate_cmd->add_flag("--resume", resume, "skip ids already present in the annotation file");

  auto* curate_cmd = app.add_subcommand("curate", "produce a derived training set");
  add_common_flags(curate_cmd, flags);
  std::string recipe = "filtered";
  curate_cmd->add_option("--recipe", recipe,
                         "vanilla, filtered, controlled, random, self_rouge or inference");
  std::string quotas_from;
  curate_cmd->add_option("--quotas-from", quotas_from,
                         "manifest whose per-language counts become quotas");
  std::string on_prefixed = "warn";
  curate_cmd->add_option("--on-already-prefixed", on_prefixed,
                         "inference recipe: warn or error on already-prefixed documents");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "score predictions into the metrics table");
  add_common_flags(evaluate_cmd, flags);
  EvaluateRequest eval_request;
  evaluate_cmd->add_option("--predictions", eval_request.predictions_path, "predictions JSONL")
      ->required();
  evaluate_cmd->add_option("--references", eval_request.references_path, "references JSONL")
      ->required();
  evaluate_cmd->add_option("--documents", eval_request.documents_path, "source documents JSONL")
      ->required();
  evaluate_cmd->add_option("--model", eval_request.model_id, "model id label")->required();
  evaluate_cmd->add_option("--checkpoint", eval_request.checkpoint_step, "checkpoint step label");
  evaluate_cmd->add_option("--language", eval_request.language,
                           "language label when files carry none");

  auto* select_cmd = app.add_subcommand("select-checkpoint",
                                        "pick best checkpoints per model from the metrics table");
  add_common_flags(select_cmd, flags);
  std::string only_model;
  select_cmd->add_option("--model", only_model, "restrict to one model id");

  auto* aggregate_cmd =
      app.add_subcommand("aggregate", "average metrics over language groups");
  add_common_flags(aggregate_cmd, flags);

  auto* humaneval_cmd = app.add_subcommand("humaneval", "aggregate human ratings per system");
  add_common_flags(humaneval_cmd, flags);
  std::string ratings_path;
  humaneval_cmd->add_option("--ratings", ratings_path, "ratings CSV")->required();
  std::string quality_mode;
  humaneval_cmd->add_option("--quality-mode", quality_mode, "top_label or normalized_mean");

  auto* report_cmd = app.add_subcommand("report", "render the deterministic report bundle");
  add_common_flags(report_cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);  // prints usage or help/version text
    return code == 0 ? 0 : 1;
  }

  try {
    RunConfig config = build_config(flags);
    if (annotate_cmd->parsed()) {
      config.resume = resume;
      auto summary = cmd_annotate(config);
      std::cout << "annotated " << summary.report.annotated << " example(s) in "
                << summary.report.batches << " batch(es)";
      if (summary.resumed > 0) std::cout << ", resumed past " << summary.resumed;
      std::cout << "\n";
    } else if (curate_cmd->parsed()) {
      if (!quotas_from.empty()) config.quotas_from = quotas_from;
      if (recipe == "inference") {
        auto out = cmd_prepare_inference(config, on_prefixed == "error"
                                                     ? OnAlreadyPrefixed::error
                                                     : OnAlreadyPrefixed::warn);
        print_warnings(out.warnings);
        std::cout << "prepared " << out.examples.size() << " inference input(s)\n";
      } else {
        auto out = cmd_curate(config, recipe_from_name(recipe));
        print_warnings(out.warnings);
        std::cout << "recipe " << recipe_name(out.recipe) << ": kept " << out.examples.size()
                  << " example(s)\n";
      }
    } else if (evaluate_cmd->parsed()) {
      auto rows = cmd_evaluate(config, eval_request);
      for (const auto& r : rows) {
        std::cout << r.model_id << "@" << r.checkpoint_step << " " << r.language
                  << ": rouge_l=" << format_fixed(r.rouge_l, 2)
                  << " nli=" << format_fixed(r.nli, 2)
                  << " length_ratio=" << format_fixed(r.length_ratio, 2) << " n="
                  << r.n_examples << "\n";
      }
    } else if (select_cmd->parsed()) {
      auto choices = cmd_select_checkpoint(config, only_model);
      for (const auto& c : choices) {
        std::cout << c.model_id << " " << criterion_name(c.criterion) << ": step "
                  << c.checkpoint_step << " (mean " << format_fixed(c.criterion_mean, 2)
                  << " over " << c.n_languages << " language(s))\n";
      }
    } else if (aggregate_cmd->parsed()) {
      auto reports = cmd_aggregate(config);
      std::cout << "wrote " << reports.size() << " group report(s) to " << config.out_dir
                << "\n";
    } else if (humaneval_cmd->parsed()) {
      if (!quality_mode.empty()) config.quality_mode = quality_mode_from_name(quality_mode);
      auto summary = cmd_humaneval(config, ratings_path);
      print_warnings(summary.warnings);
      for (const auto& s : summary.scores) {
        std::cout << s.system_id << ": quality=" << format_fixed(s.overall.quality_rate, 2)
                  << " attribution=" << format_fixed(s.overall.attribution_rate, 2)
                  << " informativeness=" << format_fixed(s.overall.informativeness_rate, 2)
                  << "\n";
      }
    } else if (report_cmd->parsed()) {
      cmd_report(config);
      std::cout << "report bundle written to "
                << paths::report_dir(config).string() << "\n";
    }
  } catch (const ServiceError& e) {
    return error_record("service", e.what());
  } catch (const ValidationError& e) {
    return error_record("validation", e.what());
  } catch (const std::exception& e) {
    return error_record("validation", e.what());
  }
  return 0;
}
