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
// Article/summary corpus ingestion. Corpora are UTF-8 JSON-lines files, one
// object per line with keys {"id","language","document","summary"}; unknown
// keys are carried through untouched so derived corpora keep upstream
// metadata.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "entailsum/csv.hpp"
#include "entailsum/error.hpp"
#include "entailsum/io.hpp"
#include "entailsum/text.hpp"

namespace entailsum {

struct Example {
  std::string id;
  std::string language;  // normalized key, see normalize_language_key()
  std::string document;
  std::string summary;
  // Passthrough fields in their original order.
  nlohmann::ordered_json extras = nlohmann::ordered_json::object();
};

struct CorpusStats {
  std::map<std::string, int64_t> counts_by_language;
  int64_t total = 0;
  int64_t skipped = 0;            // malformed lines (lenient mode only)
  int64_t unknown_language = 0;   // language missing from the profile table
};

struct CorpusReadOptions {
  bool strict = false;
  // When set, languages outside this set bump CorpusStats::unknown_language.
  std::optional<std::set<std::string>> known_languages;
};

namespace detail {

inline Example parse_example_line(const std::string& line, size_t line_no) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("line " + std::to_string(line_no) + ": invalid JSON (" +
                          e.what() + ")");
  }
  if (!j.is_object()) {
    throw ValidationError("line " + std::to_string(line_no) + ": record is not an object");
  }
  Example ex;
  for (const char* key : {"id", "language", "document", "summary"}) {
    if (!j.contains(key) || !j[key].is_string()) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": missing or non-string field \"" + key + "\"");
    }
  }
  ex.id = j["id"].get<std::string>();
  ex.language = normalize_language_key(j["language"].get<std::string>());
  ex.document = j["document"].get<std::string>();
  ex.summary = j["summary"].get<std::string>();
  if (ex.id.empty()) {
    throw ValidationError("line " + std::to_string(line_no) + ": empty id");
  }
  if (ex.language.empty()) {
    throw ValidationError("line " + std::to_string(line_no) + ": empty language");
  }
  if (trim(ex.document).empty() || trim(ex.summary).empty()) {
    throw ValidationError("line " + std::to_string(line_no) +
                          ": empty document or summary for id \"" + ex.id + "\"");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "id" || it.key() == "language" || it.key() == "document" ||
        it.key() == "summary") {
      continue;
    }
    ex.extras[it.key()] = it.value();
  }
  return ex;
}

}  // namespace detail

// Single-pass streaming reader, file order preserved. Duplicate-id detection
// is active only in strict mode: the id set grows with the corpus and lenient
// mode keeps memory bounded for multi-million-line streams.
class CorpusReader {
 public:
  CorpusReader(const std::filesystem::path& path, CorpusReadOptions options = {})
      : path_(path), options_(std::move(options)), in_(path) {
    if (!in_) throw ValidationError("cannot read corpus file: " + path.string());
  }

  // Returns std::nullopt at end of stream.
  std::optional<Example> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (trim(line).empty()) continue;
      Example ex;
      try {
        ex = detail::parse_example_line(line, line_no_);
      } catch (const ValidationError& e) {
        if (options_.strict) {
          throw ValidationError(path_.string() + ": " + e.what());
        }
        ++stats_.skipped;
        continue;
      }
      if (options_.strict) {
        if (!seen_ids_.insert(ex.id).second) {
          throw ValidationError(path_.string() + ": duplicate id \"" + ex.id +
                                "\" at line " + std::to_string(line_no_));
        }
      }
      if (options_.known_languages &&
          !options_.known_languages->count(ex.language)) {
        ++stats_.unknown_language;
      }
      ++stats_.total;
      ++stats_.counts_by_language[ex.language];
      return ex;
    }
    return std::nullopt;
  }

  const CorpusStats& stats() const { return stats_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  CorpusReadOptions options_;
  std::ifstream in_;
  size_t line_no_ = 0;
  CorpusStats stats_;
  std::unordered_set<std::string> seen_ids_;
};

// Fully materialized corpus, for the curation/evaluation paths where random
// access and multiple passes are convenient.
struct Corpus {
  std::string source_uri;
  std::vector<Example> examples;
  CorpusStats stats;
};

inline Corpus load_corpus(const std::filesystem::path& path,
                          CorpusReadOptions options = {}) {
  CorpusReader reader(path, std::move(options));
  Corpus corpus;
  corpus.source_uri = path.string();
  while (auto ex = reader.next()) corpus.examples.push_back(std::move(*ex));
  corpus.stats = reader.stats();
  return corpus;
}

inline std::string example_to_json_line(const Example& ex) {
  nlohmann::ordered_json j;
  j["id"] = ex.id;
  j["language"] = ex.language;
  j["document"] = ex.document;
  j["summary"] = ex.summary;
  for (auto it = ex.extras.begin(); it != ex.extras.end(); ++it) {
    j[it.key()] = it.value();
  }
  return j.dump();
}

inline void write_corpus_jsonl(const std::filesystem::path& path,
                               const std::vector<Example>& examples) {
  AtomicFileWriter w(path);
  for (const auto& ex : examples) w.stream() << example_to_json_line(ex) << '\n';
  w.commit();
}

// ---------------------------------------------------------------------------
// Language profiles

enum class ResourceTier { high, medium, low };

inline const char* tier_name(ResourceTier t) {
  switch (t) {
    case ResourceTier::high: return "high";
    case ResourceTier::medium: return "medium";
    case ResourceTier::low: return "low";
  }
  return "?";
}

struct TierThresholds {
  int64_t high_min = 10000;  // tier=high when train_count >= high_min
  int64_t low_max = 6000;    // tier=low when train_count < low_max

  void validate() const {
    if (low_max < 0 || high_min <= low_max) {
      throw ValidationError("inconsistent tier thresholds: require high_min > low_max >= 0, got high_min=" +
                            std::to_string(high_min) + " low_max=" + std::to_string(low_max));
    }
  }
};

inline ResourceTier tier_for(int64_t train_count, const TierThresholds& t) {
  if (train_count >= t.high_min) return ResourceTier::high;
  if (train_count < t.low_max) return ResourceTier::low;
  return ResourceTier::medium;
}

struct LanguageProfile {
  std::string key;
  std::string display_name;
  std::string family;
  bool xnli_member = false;
  int64_t train_count = 0;
  ResourceTier resource_tier = ResourceTier::medium;
};

class ProfileTable {
 public:
  void add(LanguageProfile profile) {
    if (index_.count(profile.key)) {
      throw ValidationError("duplicate language profile key \"" + profile.key + "\"");
    }
    index_[profile.key] = profiles_.size();
    profiles_.push_back(std::move(profile));
  }

  const LanguageProfile* find(const std::string& key) const {
    auto it = index_.find(key);
    return it == index_.end() ? nullptr : &profiles_[it->second];
  }

  const LanguageProfile& at(const std::string& key) const {
    const LanguageProfile* p = find(key);
    if (!p) throw ValidationError("no profile for language \"" + key + "\"");
    return *p;
  }

  const std::vector<LanguageProfile>& all() const { return profiles_; }

  std::set<std::string> keys() const {
    std::set<std::string> out;
    for (const auto& p : profiles_) out.insert(p.key);
    return out;
  }

 private:
  std::vector<LanguageProfile> profiles_;
  std::map<std::string, size_t> index_;
};

// Profile file: CSV with columns key,display_name,family,xnli_member,train_count.
inline ProfileTable load_profiles(const std::filesystem::path& path,
                                  TierThresholds thresholds = {}) {
  thresholds.validate();
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read profile file: " + path.string());
  const std::string ctx = "profiles " + path.string();
  CsvTable table = CsvTable::read(in, ctx);
  table.require_columns({"key", "display_name", "family", "xnli_member", "train_count"}, ctx);
  size_t c_key = table.column("key", ctx);
  size_t c_name = table.column("display_name", ctx);
  size_t c_family = table.column("family", ctx);
  size_t c_xnli = table.column("xnli_member", ctx);
  size_t c_train = table.column("train_count", ctx);

  ProfileTable out;
  for (const auto& row : table.rows()) {
    LanguageProfile p;
    p.key = normalize_language_key(row[c_key]);
    p.display_name = row[c_name];
    p.family = std::string(trim(row[c_family]));
    if (p.key.empty()) throw ValidationError(ctx + ": empty key");
    if (p.family.empty()) throw ValidationError(ctx + ": empty family for key \"" + p.key + "\"");
    p.xnli_member = parse_bool_field(row[c_xnli], ctx + " key " + p.key);
    p.train_count = parse_int_field(row[c_train], ctx + " key " + p.key);
    if (p.train_count < 0) throw ValidationError(ctx + ": negative train_count for \"" + p.key + "\"");
    p.resource_tier = tier_for(p.train_count, thresholds);
    out.add(std::move(p));
  }
  return out;
}

}  // namespace entailsum
