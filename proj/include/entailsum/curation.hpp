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
// Derived training sets: the entailment-filtered subset, the control-token
// augmented corpus, inference-time prefixing, and the two selection
// baselines (random, self-similarity by ROUGE). Every recipe emits examples
// in source order and tallies per-language counts.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "entailsum/corpus.hpp"
#include "entailsum/entailment.hpp"
#include "entailsum/error.hpp"
#include "entailsum/hash.hpp"
#include "entailsum/io.hpp"
#include "entailsum/metrics.hpp"
#include "entailsum/version.hpp"

namespace entailsum {

enum class CurationRecipe { vanilla, filtered, controlled, random_selection, self_rouge };

inline const char* recipe_name(CurationRecipe r) {
  switch (r) {
    case CurationRecipe::vanilla: return "vanilla";
    case CurationRecipe::filtered: return "filtered";
    case CurationRecipe::controlled: return "controlled";
    case CurationRecipe::random_selection: return "random";
    case CurationRecipe::self_rouge: return "self_rouge";
  }
  return "?";
}

inline CurationRecipe recipe_from_name(const std::string& name) {
  if (name == "vanilla") return CurationRecipe::vanilla;
  if (name == "filtered") return CurationRecipe::filtered;
  if (name == "controlled") return CurationRecipe::controlled;
  if (name == "random") return CurationRecipe::random_selection;
  if (name == "self_rouge") return CurationRecipe::self_rouge;
  throw ValidationError("unknown curation recipe \"" + name + "\"");
}

struct CurationProvenance {
  std::string source_uri;
  std::string annotation_uri;
  std::optional<double> threshold;
  std::optional<std::string> generator;  // seeded sampling procedure identity
};

struct CurationOutput {
  CurationRecipe recipe = CurationRecipe::vanilla;
  std::vector<Example> examples;  // source order
  std::map<std::string, int64_t> per_language_selected;
  std::optional<uint64_t> seed;
  std::map<std::string, int64_t> quotas;  // recipes that take quotas
  CurationProvenance provenance;
  std::vector<std::string> warnings;
};

struct ControlTokens {
  std::string pos = "<entailed>";
  std::string neg = "<not-entailed>";

  void validate() const {
    if (pos.empty() || neg.empty()) throw ValidationError("control tokens must be non-empty");
    if (pos == neg) throw ValidationError("control tokens must differ");
  }
};

namespace detail {

inline const EntailmentAnnotation& annotation_for(
    const std::unordered_map<std::string, EntailmentAnnotation>& index,
    const Example& ex) {
  auto it = index.find(ex.id);
  if (it == index.end()) {
    throw ValidationError("missing annotation for example id \"" + ex.id + "\"");
  }
  return it->second;
}

inline void tally(CurationOutput& out, const Example& ex) {
  ++out.per_language_selected[ex.language];
}

// Shared quota validation: every quota language must exist in the corpus and
// no quota may exceed availability. All violations are reported at once.
inline void validate_quotas(const std::map<std::string, int64_t>& quotas,
                            const std::map<std::string, int64_t>& available) {
  std::string violations;
  for (const auto& [language, quota] : quotas) {
    auto it = available.find(language);
    if (it == available.end()) {
      violations += " unknown language \"" + language + "\";";
    } else if (quota < 0 || quota > it->second) {
      violations += " quota " + std::to_string(quota) + " for \"" + language +
                    "\" exceeds available " + std::to_string(it->second) + ";";
    }
  }
  if (!violations.empty()) throw ValidationError("invalid quotas:" + violations);
}

}  // namespace detail

// Keeps exactly the examples whose score is strictly above the threshold.
// `dropped`, when given, receives the complement.
inline CurationOutput filter_entailed(
    const Corpus& corpus,
    const std::unordered_map<std::string, EntailmentAnnotation>& annotations,
    double threshold, std::vector<Example>* dropped = nullptr) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ValidationError("threshold must be in (0,1)");
  }
  CurationOutput out;
  out.recipe = CurationRecipe::filtered;
  out.provenance.source_uri = corpus.source_uri;
  out.provenance.threshold = threshold;
  for (const auto& ex : corpus.examples) {
    const auto& ann = detail::annotation_for(annotations, ex);
    if (ann.score > threshold) {
      out.examples.push_back(ex);
      detail::tally(out, ex);
    } else if (dropped) {
      dropped->push_back(ex);
    }
  }
  // Languages that lost everything still get an explicit zero row.
  for (const auto& [language, _] : corpus.stats.counts_by_language) {
    out.per_language_selected.try_emplace(language, 0);
  }
  if (out.examples.empty() && !corpus.examples.empty()) {
    out.warnings.push_back("filter kept no examples (all scores <= threshold)");
  }
  return out;
}

// Prefixes every document with the entailment control token that matches its
// annotation: "<pos> d" when entailed, "<neg> d" otherwise. Size, order and
// summaries are preserved.
inline CurationOutput augment_controlled(
    const Corpus& corpus,
    const std::unordered_map<std::string, EntailmentAnnotation>& annotations,
    const ControlTokens& tokens, bool strict = false) {
  tokens.validate();
  CurationOutput out;
  out.recipe = CurationRecipe::controlled;
  out.provenance.source_uri = corpus.source_uri;
  int64_t collisions = 0;
  for (const auto& ex : corpus.examples) {
    if (starts_with(ex.document, tokens.pos + " ") ||
        starts_with(ex.document, tokens.neg + " ")) {
      ++collisions;
      if (strict) {
        throw ValidationError("document for id \"" + ex.id +
                              "\" already starts with a control token");
      }
    }
    const auto& ann = detail::annotation_for(annotations, ex);
    Example augmented = ex;
    augmented.document = (ann.entailed ? tokens.pos : tokens.neg) + " " + ex.document;
    out.examples.push_back(std::move(augmented));
    detail::tally(out, ex);
  }
  if (collisions > 0) {
    out.warnings.push_back(std::to_string(collisions) +
                           " document(s) already started with a control token");
  }
  return out;
}

// Inverse of augment_controlled for a single document.
inline std::string strip_control_token(const std::string& document,
                                       const ControlTokens& tokens) {
  for (const std::string* t : {&tokens.pos, &tokens.neg}) {
    if (starts_with(document, *t + " ")) return document.substr(t->size() + 1);
  }
  throw ValidationError("document does not start with a known control token");
}

enum class OnAlreadyPrefixed { warn, error };

// Unconditionally prefixes every document with the positive token, the
// inference-time counterpart of augment_controlled.
inline CurationOutput prepare_inference(const Corpus& corpus, const std::string& pos_token,
                                        OnAlreadyPrefixed on_prefixed = OnAlreadyPrefixed::warn) {
  if (pos_token.empty()) throw ValidationError("control token must be non-empty");
  CurationOutput out;
  out.recipe = CurationRecipe::controlled;
  out.provenance.source_uri = corpus.source_uri;
  int64_t already = 0;
  for (const auto& ex : corpus.examples) {
    if (starts_with(ex.document, pos_token + " ")) {
      ++already;
      if (on_prefixed == OnAlreadyPrefixed::error) {
        throw ValidationError("document for id \"" + ex.id +
                              "\" is already prefixed with \"" + pos_token + "\"");
      }
    }
    Example prefixed = ex;
    prefixed.document = pos_token + " " + ex.document;
    out.examples.push_back(std::move(prefixed));
    detail::tally(out, ex);
  }
  if (already > 0) {
    out.warnings.push_back(std::to_string(already) +
                           " document(s) were already prefixed; prefixed again");
  }
  return out;
}

// Uniform per-language sampling without replacement. The generator is
// mt19937_64 seeded per language from (seed, language key); selections are
// reproducible across runs and platforms for a fixed seed.
inline CurationOutput random_select(const Corpus& corpus,
                                    const std::map<std::string, int64_t>& quotas,
                                    uint64_t seed) {
  detail::validate_quotas(quotas, corpus.stats.counts_by_language);
  std::map<std::string, std::vector<size_t>> positions;
  for (size_t i = 0; i < corpus.examples.size(); ++i) {
    const auto& language = corpus.examples[i].language;
    if (quotas.count(language)) positions[language].push_back(i);
  }
  std::vector<char> selected(corpus.examples.size(), 0);
  for (auto& [language, pool] : positions) {
    int64_t quota = quotas.at(language);
    std::mt19937_64 rng(mix64(seed ^ fnv1a64(language)));
    // Partial Fisher-Yates: after k swaps the first k slots are a uniform
    // draw without replacement.
    for (int64_t k = 0; k < quota; ++k) {
      size_t j = static_cast<size_t>(k) +
                 static_cast<size_t>(bounded_rand(rng, pool.size() - static_cast<size_t>(k)));
      std::swap(pool[static_cast<size_t>(k)], pool[j]);
      selected[pool[static_cast<size_t>(k)]] = 1;
    }
  }
  CurationOutput out;
  out.recipe = CurationRecipe::random_selection;
  out.seed = seed;
  out.quotas = quotas;
  out.provenance.source_uri = corpus.source_uri;
  out.provenance.generator = kRandomGeneratorId;
  for (size_t i = 0; i < corpus.examples.size(); ++i) {
    if (selected[i]) {
      out.examples.push_back(corpus.examples[i]);
      detail::tally(out, corpus.examples[i]);
    }
  }
  for (const auto& [language, quota] : quotas) {
    out.per_language_selected.try_emplace(language, 0);
    (void)quota;
  }
  return out;
}

// Per language, keeps the quota examples whose summary scores highest in
// ROUGE-L F against its own source document. Ties break by (score desc,
// id asc) so the selection is a total order.
inline CurationOutput self_rouge_select(const Corpus& corpus,
                                        const std::map<std::string, int64_t>& quotas,
                                        const Tokenizer& tokenizer, double beta = 1.0) {
  detail::validate_quotas(quotas, corpus.stats.counts_by_language);

  struct Scored {
    double score;
    const std::string* id;
    size_t position;
  };
  std::map<std::string, std::vector<Scored>> by_language;
  for (size_t i = 0; i < corpus.examples.size(); ++i) {
    const auto& ex = corpus.examples[i];
    if (!quotas.count(ex.language)) continue;
    double f = rouge_l(tokenizer.tokenize(ex.summary), tokenizer.tokenize(ex.document), beta).f;
    by_language[ex.language].push_back({f, &ex.id, i});
  }
  std::vector<char> selected(corpus.examples.size(), 0);
  for (auto& [language, pool] : by_language) {
    int64_t quota = quotas.at(language);
    auto better = [](const Scored& a, const Scored& b) {
      if (a.score != b.score) return a.score > b.score;
      return *a.id < *b.id;
    };
    std::sort(pool.begin(), pool.end(), better);
    for (int64_t k = 0; k < quota; ++k) selected[pool[static_cast<size_t>(k)].position] = 1;
  }
  CurationOutput out;
  out.recipe = CurationRecipe::self_rouge;
  out.quotas = quotas;
  out.provenance.source_uri = corpus.source_uri;
  for (size_t i = 0; i < corpus.examples.size(); ++i) {
    if (selected[i]) {
      out.examples.push_back(corpus.examples[i]);
      detail::tally(out, corpus.examples[i]);
    }
  }
  for (const auto& [language, quota] : quotas) {
    out.per_language_selected.try_emplace(language, 0);
    (void)quota;
  }
  return out;
}

// Identity recipe; exists so the pipeline can emit an unmodified training
// set with the same bookkeeping as the derived ones.
inline CurationOutput passthrough_vanilla(const Corpus& corpus) {
  CurationOutput out;
  out.recipe = CurationRecipe::vanilla;
  out.provenance.source_uri = corpus.source_uri;
  for (const auto& ex : corpus.examples) {
    out.examples.push_back(ex);
    detail::tally(out, ex);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sidecar manifest

inline nlohmann::ordered_json curation_manifest_json(const CurationOutput& out) {
  nlohmann::ordered_json j;
  j["recipe"] = recipe_name(out.recipe);
  j["tool_version"] = kToolVersion;
  j["source"] = out.provenance.source_uri;
  if (!out.provenance.annotation_uri.empty()) j["annotations"] = out.provenance.annotation_uri;
  if (out.provenance.threshold) j["threshold"] = format_fixed(*out.provenance.threshold, 6);
  if (out.seed) j["seed"] = *out.seed;
  if (out.provenance.generator) j["generator"] = *out.provenance.generator;
  if (!out.quotas.empty()) {
    nlohmann::ordered_json q;
    for (const auto& [language, quota] : out.quotas) q[language] = quota;
    j["quotas"] = std::move(q);
  }
  nlohmann::ordered_json counts;
  for (const auto& [language, n] : out.per_language_selected) counts[language] = n;
  j["counts"] = std::move(counts);
  j["total"] = static_cast<int64_t>(out.examples.size());
  if (!out.warnings.empty()) j["warnings"] = out.warnings;
  return j;
}

inline void write_curation_manifest(const CurationOutput& out,
                                    const std::filesystem::path& path) {
  write_file_atomic(path, curation_manifest_json(out).dump(2) + "\n");
}

// Reads the per-language counts of a previous curation run, the quota source
// for the baseline recipes.
inline std::map<std::string, int64_t> quotas_from_manifest(
    const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid manifest " + path.string() + ": " + e.what());
  }
  if (!j.contains("counts") || !j["counts"].is_object()) {
    throw ValidationError("manifest " + path.string() + " has no \"counts\" object");
  }
  std::map<std::string, int64_t> out;
  for (auto it = j["counts"].begin(); it != j["counts"].end(); ++it) {
    out[it.key()] = it.value().get<int64_t>();
  }
  return out;
}

}  // namespace entailsum
