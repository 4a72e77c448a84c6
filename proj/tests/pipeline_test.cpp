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

#include <cstdlib>
#include <sys/wait.h>
#include <thread>

#include "httplib.h"

#include "entailsum/pipeline.hpp"
#include "test_util.hpp"

using namespace entailsum;
using testutil::TempDir;

namespace {

std::string example_line(const std::string& id, const std::string& language,
                         const std::string& document, const std::string& summary) {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["language"] = language;
  j["document"] = document;
  j["summary"] = summary;
  return j.dump() + "\n";
}

// Ten examples over three languages; with the containment oracle at
// threshold 0.5 exactly six are entailed (thai 3/4, welsh 2/3, amharic 1/3).
void write_fixture_corpus(const std::filesystem::path& path) {
  std::string text;
  auto entailed = [&](const std::string& id, const std::string& language) {
    text += example_line(id, language, "alpha beta gamma delta " + id, "alpha beta");
  };
  auto not_entailed = [&](const std::string& id, const std::string& language) {
    text += example_line(id, language, "alpha beta gamma delta " + id, "omega psi");
  };
  entailed("t1", "thai");
  entailed("t2", "thai");
  entailed("t3", "thai");
  not_entailed("t4", "thai");
  entailed("w1", "welsh");
  entailed("w2", "welsh");
  not_entailed("w3", "welsh");
  entailed("a1", "amharic");
  not_entailed("a2", "amharic");
  not_entailed("a3", "amharic");
  testutil::write_text(path, text);
}

RunConfig fixture_config(const TempDir& dir, const std::filesystem::path& corpus) {
  RunConfig config;
  config.corpus_path = corpus.string();
  config.profiles_path = testutil::default_profiles();
  config.out_dir = dir.file("out").string();
  return config;
}

int run_cli(const std::string& args, std::string* output = nullptr) {
  std::string command = std::string(ENTAILSUM_CLI_PATH) + " " + args;
  std::string capture = "/tmp/entailsum_cli_out_" + std::to_string(::getpid()) + ".txt";
  command += " >" + capture + " 2>&1";
  int status = std::system(command.c_str());
  if (output) *output = testutil::slurp(capture);
  std::filesystem::remove(capture);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("annotate produces one annotation per example plus per-language stats") {
  TempDir dir("pipe");
  auto corpus = dir.file("corpus.jsonl");
  write_fixture_corpus(corpus);
  RunConfig config = fixture_config(dir, corpus);
  auto summary = cmd_annotate(config);
  CHECK(summary.report.annotated == 10);

  auto annotations = read_annotations(paths::annotations(config));
  REQUIRE(annotations.size() == 10);
  CHECK(annotations[0].example_id == "t1");
  CHECK(annotations[0].scorer_id == "oracle-containment/v1");

  REQUIRE(summary.stats.rows.size() == 3);
  CHECK(summary.stats.rows[0].language == "amharic");
  CHECK(summary.stats.rows[0].n_entailed == 1);
  CHECK(summary.stats.rows[1].language == "thai");
  CHECK(summary.stats.rows[1].pct_entailed == Catch::Approx(75.0));
  CHECK(summary.stats.rows[2].language == "welsh");

  std::string stats_text = testutil::slurp(paths::stats(config));
  CHECK(stats_text.find("thai,4,3,75.00") != std::string::npos);
  CHECK(stats_text.find("average,") != std::string::npos);
}

TEST_CASE("annotate against a stub endpoint yields the same file shape") {
  httplib::Server server;
  server.Post("/score", [](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    nlohmann::json scores = nlohmann::json::array();
    for (size_t i = 0; i < body["pairs"].size(); ++i) scores.push_back(0.7);
    res.set_content(nlohmann::json{{"scores", scores}}.dump(), "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  TempDir dir("pipe");
  auto corpus = dir.file("corpus.jsonl");
  write_fixture_corpus(corpus);
  RunConfig config = fixture_config(dir, corpus);
  config.scorer.kind = ScorerKind::remote;
  config.scorer.endpoint = "http://127.0.0.1:" + std::to_string(port);
  config.scorer.batch_size = 3;
  auto summary = cmd_annotate(config);
  server.stop();
  listener.join();

  CHECK(summary.report.annotated == 10);
  auto annotations = read_annotations(paths::annotations(config));
  REQUIRE(annotations.size() == 10);
  for (const auto& a : annotations) {
    CHECK(a.score == Catch::Approx(0.7));
    CHECK(a.entailed);
    CHECK(a.scorer_id == "remote-nli/v1");
  }
}

TEST_CASE("annotate resume skips already-annotated ids") {
  TempDir dir("pipe");
  auto corpus = dir.file("corpus.jsonl");
  write_fixture_corpus(corpus);
  RunConfig config = fixture_config(dir, corpus);
  cmd_annotate(config);
  config.resume = true;
  auto second = cmd_annotate(config);
  CHECK(second.report.annotated == 0);
  CHECK(second.resumed == 10);
  CHECK(read_annotations(paths::annotations(config)).size() == 10);
  // Stats still cover the whole corpus.
  CHECK(second.stats.rows.size() == 3);
}

TEST_CASE("missing corpus path fails naming the path") {
  TempDir dir("pipe");
  RunConfig config;
  config.corpus_path = dir.file("nope.jsonl").string();
  config.out_dir = dir.file("out").string();
  try {
    cmd_annotate(config);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("nope.jsonl") != std::string::npos);
  }
}

TEST_CASE("config validation rejects endpoint mismatches") {
  RunConfig config;
  config.scorer.kind = ScorerKind::remote;
  CHECK_THROWS_AS(config.validate(), ValidationError);
  config.scorer.kind = ScorerKind::oracle;
  config.scorer.endpoint = "http://somewhere";
  CHECK_THROWS_AS(config.validate(), ValidationError);
}

TEST_CASE("curate recipes: filtered, controlled, and quota-driven baselines") {
  TempDir dir("pipe");
  auto corpus = dir.file("corpus.jsonl");
  write_fixture_corpus(corpus);
  RunConfig config = fixture_config(dir, corpus);
  cmd_annotate(config);

  auto filtered = cmd_curate(config, CurationRecipe::filtered);
  CHECK(filtered.examples.size() == 6);
  CHECK(filtered.per_language_selected.at("thai") == 3);
  CHECK(filtered.per_language_selected.at("welsh") == 2);
  CHECK(filtered.per_language_selected.at("amharic") == 1);

  auto controlled = cmd_curate(config, CurationRecipe::controlled);
  CHECK(controlled.examples.size() == 10);
  for (const auto& ex : controlled.examples) {
    bool pos = starts_with(ex.document, "<entailed> ");
    bool neg = starts_with(ex.document, "<not-entailed> ");
    CHECK((pos || neg));
  }

  config.quotas_from = paths::curated_manifest(config, CurationRecipe::filtered).string();
  config.seed = 7;
  auto random_out = cmd_curate(config, CurationRecipe::random_selection);
  CHECK(random_out.per_language_selected == filtered.per_language_selected);
  auto self_rouge_out = cmd_curate(config, CurationRecipe::self_rouge);
  CHECK(self_rouge_out.per_language_selected == filtered.per_language_selected);

  auto inference = cmd_prepare_inference(config);
  CHECK(inference.examples.size() == 10);
  for (const auto& ex : inference.examples) CHECK(starts_with(ex.document, "<entailed> "));
}

TEST_CASE("curate without annotations tells the user to annotate first") {
  TempDir dir("pipe");
  auto corpus = dir.file("corpus.jsonl");
  write_fixture_corpus(corpus);
  RunConfig config = fixture_config(dir, corpus);
  try {
    cmd_curate(config, CurationRecipe::filtered);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("annotate") != std::string::npos);
  }
}

namespace {

// Writes prediction/reference/document files for two languages under
// `model` labels; predictions equal references and are contained in the
// documents, so every metric is at its ceiling.
void write_eval_files(const TempDir& dir, const std::string& stem) {
  TextById text, docs;
  std::map<std::string, std::string> langs;
  for (const auto& [id, language] : std::map<std::string, std::string>{
           {"e1", "thai"}, {"e2", "thai"}, {"e3", "welsh"}}) {
    text[id] = "alpha beta " + id;
    docs[id] = "alpha beta " + id + " gamma";
    langs[id] = language;
  }
  write_prediction_file(dir.file(stem + "_pred.jsonl"), text, &langs);
  write_prediction_file(dir.file(stem + "_ref.jsonl"), text, &langs);
  write_prediction_file(dir.file(stem + "_doc.jsonl"), docs, &langs);
}

}  // namespace

TEST_CASE("evaluate on perfect predictions hits the metric ceilings per language") {
  TempDir dir("pipe");
  write_eval_files(dir, "m");
  RunConfig config;
  config.out_dir = dir.file("out").string();
  EvaluateRequest request;
  request.predictions_path = dir.file("m_pred.jsonl").string();
  request.references_path = dir.file("m_ref.jsonl").string();
  request.documents_path = dir.file("m_doc.jsonl").string();
  request.model_id = "vanilla";
  request.checkpoint_step = 100;
  auto rows = cmd_evaluate(config, request);
  REQUIRE(rows.size() == 2);  // two languages -> two rows
  for (const auto& r : rows) {
    CHECK(r.rouge_l == Catch::Approx(100.0));
    CHECK(r.nli == Catch::Approx(100.0));
    CHECK(r.length_ratio == Catch::Approx(1.0));
  }
  CHECK(rows[0].language == "thai");
  CHECK(rows[0].n_examples == 2);
  CHECK(rows[1].language == "welsh");

  // Appending the same labels again collides on the unique key.
  CHECK_THROWS_AS(cmd_evaluate(config, request), ValidationError);
}

TEST_CASE("evaluate rejects an empty predictions file without writing rows") {
  TempDir dir("pipe");
  write_eval_files(dir, "m");
  testutil::write_text(dir.file("empty.jsonl"), "");
  RunConfig config;
  config.out_dir = dir.file("out").string();
  EvaluateRequest request;
  request.predictions_path = dir.file("empty.jsonl").string();
  request.references_path = dir.file("m_ref.jsonl").string();
  request.documents_path = dir.file("m_doc.jsonl").string();
  request.model_id = "vanilla";
  CHECK_THROWS_AS(cmd_evaluate(config, request), ValidationError);
  CHECK_FALSE(std::filesystem::exists(paths::metrics(config)));
}

namespace {

// Writes the shared pipeline inputs (corpus, eval files, ratings) once.
void write_pipeline_inputs(const TempDir& dir) {
  write_fixture_corpus(dir.file("corpus.jsonl"));
  write_eval_files(dir, "shared");
  std::string ratings = "example_id,language,system_id,rater_id,quality,attribution,informativeness\n";
  for (int i = 0; i < 6; ++i) {
    ratings += "e" + std::to_string(i) + ",thai,vanilla,r" + std::to_string(i % 3) + ",3," +
               (i % 2 ? "1" : "0") + ",1\n";
    ratings += "e" + std::to_string(i) + ",welsh,filtered,r" + std::to_string(i % 3) +
               ",2,1,0\n";
  }
  testutil::write_text(dir.file("ratings.csv"), ratings);
}

// End-to-end pipeline over the shared inputs; returns the run config (whose
// out_dir holds every artifact). A fixed config plus fixed inputs must yield
// identical bytes, so only the out directory and the worker count vary
// between calls.
RunConfig run_full_pipeline(const TempDir& dir, const std::string& tag, int workers) {
  RunConfig config;
  config.corpus_path = dir.file("corpus.jsonl").string();
  config.profiles_path = testutil::default_profiles();
  config.out_dir = dir.file(tag + "_out").string();
  config.scorer.max_in_flight = workers;
  config.seed = 7;
  cmd_annotate(config);
  cmd_curate(config, CurationRecipe::filtered);
  cmd_curate(config, CurationRecipe::controlled);
  config.quotas_from = paths::curated_manifest(config, CurationRecipe::filtered).string();
  cmd_curate(config, CurationRecipe::random_selection);
  cmd_curate(config, CurationRecipe::self_rouge);

  for (const auto& [model, step] : std::vector<std::pair<std::string, int64_t>>{
           {"vanilla", 100}, {"vanilla", 200}, {"filtered", 100}, {"filtered", 200}}) {
    EvaluateRequest request;
    request.predictions_path = dir.file("shared_pred.jsonl").string();
    request.references_path = dir.file("shared_ref.jsonl").string();
    request.documents_path = dir.file("shared_doc.jsonl").string();
    request.model_id = model;
    request.checkpoint_step = step;
    cmd_evaluate(config, request);
  }
  cmd_select_checkpoint(config);
  cmd_aggregate(config);
  cmd_humaneval(config, dir.file("ratings.csv").string());
  cmd_report(config);
  return config;
}

std::map<std::string, std::string> snapshot_dir(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) {
      out[std::filesystem::relative(entry.path(), root).string()] =
          testutil::slurp(entry.path());
    }
  }
  return out;
}

}  // namespace

TEST_CASE("the full pipeline bundle is byte-identical across runs and worker counts") {
  TempDir dir("pipe");
  write_pipeline_inputs(dir);
  auto first = run_full_pipeline(dir, "one", 1);
  auto second = run_full_pipeline(dir, "two", 1);
  auto parallel = run_full_pipeline(dir, "par", 8);

  auto a = snapshot_dir(first.out_dir);
  auto b = snapshot_dir(second.out_dir);
  auto c = snapshot_dir(parallel.out_dir);
  REQUIRE(!a.empty());
  REQUIRE(a.size() == b.size());
  REQUIRE(a.size() == c.size());
  for (const auto& [name, body] : a) {
    INFO(name);
    CHECK(b.at(name) == body);
    CHECK(c.at(name) == body);
  }
  CHECK(a.count("report/manifest.json") == 1);
  CHECK(a.count("report/checkpoints.csv") == 1);
  CHECK(a.count("report/groups_tier.csv") == 1);
  CHECK(a.count("report/humaneval_attribution.csv") == 1);
}

TEST_CASE("report reruns are byte-identical and corrupted inputs name the column") {
  TempDir dir("pipe");
  write_pipeline_inputs(dir);
  RunConfig config = run_full_pipeline(dir, "rpt", 1);
  std::filesystem::path out = config.out_dir;

  auto before = snapshot_dir(out / "report");
  cmd_report(config);
  auto after = snapshot_dir(out / "report");
  REQUIRE(before.size() == after.size());
  for (const auto& [name, body] : before) {
    INFO(name);
    CHECK(after.at(name) == body);
  }

  // Break the metrics header and expect the schema error to name the column.
  auto metrics_path = out / "metrics.csv";
  std::string text = testutil::slurp(metrics_path);
  auto pos = text.find("length_ratio");
  text.replace(pos, std::string("length_ratio").size(), "length_ratiX");
  testutil::write_text(metrics_path, text);
  try {
    cmd_report(config);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("length_ratio") != std::string::npos);
  }
}

TEST_CASE("report refuses to run with missing upstream artifacts") {
  TempDir dir("pipe");
  RunConfig config;
  config.out_dir = dir.file("empty_out").string();
  config.profiles_path = testutil::default_profiles();
  std::filesystem::create_directories(config.out_dir);
  try {
    cmd_report(config);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("stats") != std::string::npos);
  }
}

TEST_CASE("cli: annotate then curate exits zero and writes artifacts") {
  TempDir dir("cli");
  auto corpus = dir.file("corpus.jsonl");
  write_fixture_corpus(corpus);
  auto out = dir.file("out");
  std::string log;
  int code = run_cli("annotate --corpus " + corpus.string() + " --profiles " +
                         testutil::default_profiles() + " --out " + out.string(),
                     &log);
  INFO(log);
  CHECK(code == 0);
  CHECK(std::filesystem::exists(out / "annotations.jsonl"));
  CHECK(std::filesystem::exists(out / "stats.csv"));

  code = run_cli("curate --recipe filtered --corpus " + corpus.string() + " --out " +
                     out.string(),
                 &log);
  INFO(log);
  CHECK(code == 0);
  CHECK(log.find("kept 6") != std::string::npos);
}

TEST_CASE("cli: validation failures exit 1 with a machine-readable record") {
  std::string log;
  int code = run_cli("annotate --corpus /nonexistent/x.jsonl --out /tmp/e_out", &log);
  CHECK(code == 1);
  CHECK(log.find("\"error\"") != std::string::npos);
  CHECK(log.find("validation") != std::string::npos);
  CHECK(log.find("x.jsonl") != std::string::npos);
}

TEST_CASE("cli: service failures exit 2") {
  TempDir dir("cli");
  auto corpus = dir.file("corpus.jsonl");
  write_fixture_corpus(corpus);
  std::string log;
  int code = run_cli("annotate --corpus " + corpus.string() +
                         " --scorer remote --endpoint http://127.0.0.1:1 --out " +
                         dir.file("out").string(),
                     &log);
  CHECK(code == 2);
  CHECK(log.find("service") != std::string::npos);
}

TEST_CASE("cli: the environment variable overrides the scoring endpoint") {
  httplib::Server server;
  server.Post("/score", [](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    nlohmann::json scores = nlohmann::json::array();
    for (size_t i = 0; i < body["pairs"].size(); ++i) scores.push_back(0.9);
    res.set_content(nlohmann::json{{"scores", scores}}.dump(), "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  TempDir dir("cli");
  auto corpus = dir.file("corpus.jsonl");
  write_fixture_corpus(corpus);
  auto out = dir.file("out");
  std::string log;
  // Configured endpoint points nowhere; the environment variable wins.
  std::string command = std::string("env ") + kEndpointEnvVar + "=http://127.0.0.1:" +
                        std::to_string(port) + " " + ENTAILSUM_CLI_PATH +
                        " annotate --scorer remote --endpoint http://127.0.0.1:1 --corpus " +
                        corpus.string() + " --out " + out.string() + " >/dev/null 2>&1";
  int status = std::system(command.c_str());
  server.stop();
  listener.join();
  CHECK(WEXITSTATUS(status) == 0);
  auto annotations = read_annotations(out / "annotations.jsonl");
  REQUIRE(annotations.size() == 10);
  CHECK(annotations[0].score == Catch::Approx(0.9));
}

TEST_CASE("cli: a declarative config file drives a run and flags override it") {
  TempDir dir("cli");
  auto corpus = dir.file("corpus.jsonl");
  write_fixture_corpus(corpus);
  auto out = dir.file("out");
  nlohmann::json config;
  config["corpus"] = corpus.string();
  config["profiles"] = testutil::default_profiles();
  config["out"] = out.string();
  config["threshold"] = 0.5;
  config["scorer"] = {{"kind", "oracle"}, {"batch_size", 4}};
  auto config_path = dir.file("config.json");
  testutil::write_text(config_path, config.dump(2));

  std::string log;
  int code = run_cli("annotate --config " + config_path.string(), &log);
  INFO(log);
  CHECK(code == 0);
  CHECK(std::filesystem::exists(out / "stats.csv"));

  // A flag override redirects the output directory without touching the file.
  auto out2 = dir.file("out2");
  code = run_cli("annotate --config " + config_path.string() + " --out " + out2.string(),
                 &log);
  CHECK(code == 0);
  CHECK(std::filesystem::exists(out2 / "stats.csv"));

  // Broken config files are validation errors.
  testutil::write_text(config_path, "{not json");
  code = run_cli("annotate --config " + config_path.string(), &log);
  CHECK(code == 1);
  CHECK(log.find("validation") != std::string::npos);
}

TEST_CASE("cli: every documented subcommand exists") {
  for (const char* sub : {"annotate", "curate", "evaluate", "select-checkpoint",
                          "aggregate", "humaneval", "report"}) {
    std::string log;
    int code = run_cli(std::string(sub) + " --help", &log);
    INFO(sub << ": " << log);
    CHECK(code == 0);
  }
}

TEST_CASE("cli: usage errors honor the exit-code contract") {
  std::string log;
  CHECK(run_cli("", &log) == 1);                   // missing subcommand
  CHECK(run_cli("annotate --bogus", &log) == 1);   // unknown flag
  CHECK(run_cli("--help", &log) == 0);
  CHECK(run_cli("--version", &log) == 0);
}
