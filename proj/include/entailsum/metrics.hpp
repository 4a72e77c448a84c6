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
// Automatic evaluation: tokenization, ROUGE-L, corpus entailment rate, and
// length ratio. Corpus-level means reduce in sorted-id order with
// compensated summation, so results are bitwise identical across worker
// counts.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "entailsum/csv.hpp"
#include "entailsum/entailment.hpp"
#include "entailsum/error.hpp"
#include "entailsum/io.hpp"
#include "entailsum/parallel.hpp"
#include "entailsum/text.hpp"

namespace entailsum {

// ---------------------------------------------------------------------------
// Tokenization

enum class TokenizerKind { whitespace, character, subword_vocab };

struct TokenizerSpec {
  TokenizerKind kind = TokenizerKind::whitespace;
  std::string vocab_path;  // required iff kind == subword_vocab
  bool lowercase = false;
};

inline TokenizerKind tokenizer_kind_from_name(const std::string& name) {
  if (name == "whitespace") return TokenizerKind::whitespace;
  if (name == "character") return TokenizerKind::character;
  if (name == "subword_vocab" || name == "subword") return TokenizerKind::subword_vocab;
  throw ValidationError("unknown tokenizer kind \"" + name + "\"");
}

inline const char* tokenizer_kind_name(TokenizerKind k) {
  switch (k) {
    case TokenizerKind::whitespace: return "whitespace";
    case TokenizerKind::character: return "character";
    case TokenizerKind::subword_vocab: return "subword_vocab";
  }
  return "?";
}

// SentencePiece-style word boundary marker (U+2581).
inline constexpr const char* kWordBoundaryMarker = "\xe2\x96\x81";

// Deterministic, total tokenizer. Subword mode segments each
// marker-prefixed word by greedy longest match against the piece vocabulary;
// positions no piece covers fall back to a single UTF-8 character, so no
// input text is ever lost.
class Tokenizer {
 public:
  explicit Tokenizer(TokenizerSpec spec) : spec_(std::move(spec)) {
    if (spec_.kind == TokenizerKind::subword_vocab) {
      if (spec_.vocab_path.empty()) {
        throw ValidationError("subword tokenizer requires a vocabulary file");
      }
      load_vocab(spec_.vocab_path);
    }
  }

  const TokenizerSpec& spec() const { return spec_; }

  std::vector<std::string> tokenize(std::string_view text) const {
    std::string lowered;
    if (spec_.lowercase) {
      lowered = ascii_lower(text);
      text = lowered;
    }
    switch (spec_.kind) {
      case TokenizerKind::whitespace: {
        std::vector<std::string> out;
        for (auto t : whitespace_tokens(text)) out.emplace_back(t);
        return out;
      }
      case TokenizerKind::character: {
        std::vector<std::string> out;
        size_t i = 0;
        while (i < text.size()) {
          if (is_space(text[i])) {
            ++i;
            continue;
          }
          size_t len = utf8_sequence_length(static_cast<unsigned char>(text[i]));
          len = std::min(len, text.size() - i);
          out.emplace_back(text.substr(i, len));
          i += len;
        }
        return out;
      }
      case TokenizerKind::subword_vocab: {
        std::vector<std::string> out;
        for (auto word : whitespace_tokens(text)) {
          std::string marked = std::string(kWordBoundaryMarker) + std::string(word);
          segment_word(marked, out);
        }
        return out;
      }
    }
    return {};
  }

 private:
  struct TrieNode {
    std::map<char, int> next;
    bool terminal = false;
  };

  void load_vocab(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read vocabulary file: " + path);
    nodes_.push_back(TrieNode{});
    std::string line;
    size_t pieces = 0;
    while (std::getline(in, line)) {
      std::string_view piece = line;
      auto tab = piece.find('\t');  // optional score column, ignored
      if (tab != std::string_view::npos) piece = piece.substr(0, tab);
      if (piece.empty()) continue;
      insert(piece);
      ++pieces;
    }
    if (pieces == 0) throw ValidationError("empty vocabulary file: " + path);
  }

  void insert(std::string_view piece) {
    int node = 0;
    for (char c : piece) {
      auto it = nodes_[node].next.find(c);
      if (it == nodes_[node].next.end()) {
        nodes_.push_back(TrieNode{});
        int fresh = static_cast<int>(nodes_.size()) - 1;
        nodes_[node].next[c] = fresh;
        node = fresh;
      } else {
        node = it->second;
      }
    }
    nodes_[node].terminal = true;
  }

  void segment_word(std::string_view marked, std::vector<std::string>& out) const {
    size_t pos = 0;
    while (pos < marked.size()) {
      int node = 0;
      size_t best = 0;
      for (size_t i = pos; i < marked.size(); ++i) {
        auto it = nodes_[node].next.find(marked[i]);
        if (it == nodes_[node].next.end()) break;
        node = it->second;
        if (nodes_[node].terminal) best = i - pos + 1;
      }
      if (best == 0) {
        best = utf8_sequence_length(static_cast<unsigned char>(marked[pos]));
        best = std::min(best, marked.size() - pos);
      }
      out.emplace_back(marked.substr(pos, best));
      pos += best;
    }
  }

  TokenizerSpec spec_;
  std::vector<TrieNode> nodes_;
};

// ---------------------------------------------------------------------------
// ROUGE-L

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

namespace detail {

// LCS length through match positions: for each candidate token, its
// positions in the reference (taken in decreasing order) feed a longest
// strictly-increasing-subsequence pass. Equivalent to the classic dynamic
// program but O((n + matches) log n), which matters for document-length
// references in self-similarity scoring.
inline size_t lcs_length(const std::vector<std::string>& candidate,
                         const std::vector<std::string>& reference) {
  if (candidate.empty() || reference.empty()) return 0;
  std::unordered_map<std::string_view, std::vector<int>> positions;
  positions.reserve(reference.size());
  for (int i = 0; i < static_cast<int>(reference.size()); ++i) {
    positions[reference[i]].push_back(i);
  }
  std::vector<int> tails;
  for (const auto& token : candidate) {
    auto it = positions.find(std::string_view(token));
    if (it == positions.end()) continue;
    const auto& ps = it->second;
    for (auto rit = ps.rbegin(); rit != ps.rend(); ++rit) {
      auto slot = std::lower_bound(tails.begin(), tails.end(), *rit);
      if (slot == tails.end()) tails.push_back(*rit);
      else *slot = *rit;
    }
  }
  return tails.size();
}

}  // namespace detail

// Conventions: both sequences empty -> perfect score; exactly one empty ->
// zero. f uses the beta-weighted harmonic mean and is 0 when the denominator
// vanishes.
inline RougeScore rouge_l(const std::vector<std::string>& candidate,
                          const std::vector<std::string>& reference,
                          double beta = 1.0) {
  RougeScore score;
  if (candidate.empty() && reference.empty()) {
    score.precision = score.recall = score.f = 1.0;
    return score;
  }
  if (candidate.empty() || reference.empty()) return score;
  double lcs = static_cast<double>(detail::lcs_length(candidate, reference));
  score.precision = lcs / static_cast<double>(candidate.size());
  score.recall = lcs / static_cast<double>(reference.size());
  double b2 = beta * beta;
  double denom = score.recall + b2 * score.precision;
  score.f = denom > 0.0 ? (1.0 + b2) * score.precision * score.recall / denom : 0.0;
  return score;
}

// ---------------------------------------------------------------------------
// Corpus-level metrics

using TextById = std::map<std::string, std::string>;

namespace detail {

inline void require_same_ids(const TextById& a, const TextById& b,
                             const std::string& a_name, const std::string& b_name) {
  std::vector<std::string> only_a, only_b;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      only_a.push_back(ia->first);
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      only_b.push_back(ib->first);
      ++ib;
    } else {
      ++ia;
      ++ib;
    }
  }
  if (only_a.empty() && only_b.empty()) return;
  auto preview = [](const std::vector<std::string>& ids) {
    std::string out;
    for (size_t i = 0; i < ids.size() && i < 5; ++i) {
      if (i) out += ", ";
      out += ids[i];
    }
    if (ids.size() > 5) out += ", ...";
    return out;
  };
  throw ValidationError("id mismatch: " + std::to_string(only_a.size()) + " only in " +
                        a_name + " [" + preview(only_a) + "], " +
                        std::to_string(only_b.size()) + " only in " + b_name + " [" +
                        preview(only_b) + "]");
}

inline std::vector<std::string> sorted_ids(const TextById& m) {
  std::vector<std::string> ids;
  ids.reserve(m.size());
  for (const auto& [id, _] : m) ids.push_back(id);
  return ids;  // std::map iterates in sorted order already
}

}  // namespace detail

// Mean ROUGE-L F over examples, scaled by 100.
inline double corpus_rouge(const TextById& predictions, const TextById& references,
                           const Tokenizer& tokenizer, double beta = 1.0,
                           int workers = 1) {
  detail::require_same_ids(predictions, references, "predictions", "references");
  if (predictions.empty()) throw ValidationError("no examples to evaluate");
  auto ids = detail::sorted_ids(predictions);
  std::vector<double> f(ids.size());
  parallel_for_indexed(ids.size(), workers, [&](size_t i) {
    f[i] = rouge_l(tokenizer.tokenize(predictions.at(ids[i])),
                   tokenizer.tokenize(references.at(ids[i])), beta)
               .f;
  });
  KahanSum sum;
  for (double v : f) sum.add(v);
  return 100.0 * sum.value() / static_cast<double>(ids.size());
}

// Mean of the binary entailment indicator [score > threshold], scaled by
// 100. With average_raw_scores the raw scores are averaged instead.
inline double corpus_nli(const TextById& predictions, const TextById& documents,
                         Scorer& scorer, double threshold = 0.5,
                         bool average_raw_scores = false, int workers = 1) {
  detail::require_same_ids(predictions, documents, "predictions", "documents");
  if (predictions.empty()) throw ValidationError("no examples to evaluate");
  auto ids = detail::sorted_ids(predictions);
  std::vector<double> value(ids.size());
  parallel_for_indexed(ids.size(), workers, [&](size_t i) {
    double s = scorer.score(documents.at(ids[i]), predictions.at(ids[i]));
    value[i] = average_raw_scores ? s : (s > threshold ? 1.0 : 0.0);
  });
  KahanSum sum;
  for (double v : value) sum.add(v);
  return 100.0 * sum.value() / static_cast<double>(ids.size());
}

// Mean over examples of |tokens(prediction)| / |tokens(reference)|.
inline double length_ratio(const TextById& predictions, const TextById& references,
                           const Tokenizer& tokenizer, int workers = 1) {
  detail::require_same_ids(predictions, references, "predictions", "references");
  if (predictions.empty()) throw ValidationError("no examples to evaluate");
  auto ids = detail::sorted_ids(predictions);
  std::vector<double> ratio(ids.size());
  std::vector<char> empty_ref(ids.size(), 0);
  parallel_for_indexed(ids.size(), workers, [&](size_t i) {
    size_t ref_len = tokenizer.tokenize(references.at(ids[i])).size();
    if (ref_len == 0) {
      empty_ref[i] = 1;
      return;
    }
    size_t pred_len = tokenizer.tokenize(predictions.at(ids[i])).size();
    ratio[i] = static_cast<double>(pred_len) / static_cast<double>(ref_len);
  });
  std::string offenders;
  int offender_count = 0;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (empty_ref[i]) {
      if (offender_count < 5) {
        if (offender_count) offenders += ", ";
        offenders += ids[i];
      }
      ++offender_count;
    }
  }
  if (offender_count > 0) {
    throw ValidationError("zero-token reference for " + std::to_string(offender_count) +
                          " example(s): " + offenders + (offender_count > 5 ? ", ..." : ""));
  }
  KahanSum sum;
  for (double v : ratio) sum.add(v);
  return sum.value() / static_cast<double>(ids.size());
}

// ---------------------------------------------------------------------------
// Metric records (model x checkpoint x language)

struct MetricRecord {
  std::string model_id;
  int64_t checkpoint_step = 0;
  std::string language;
  double rouge_l = 0.0;       // x100 scale
  double nli = 0.0;           // x100 scale
  double length_ratio = 0.0;  // raw ratio
  int64_t n_examples = 0;
};

inline void check_unique_metric_keys(const std::vector<MetricRecord>& records) {
  std::set<std::tuple<std::string, int64_t, std::string>> seen;
  for (const auto& r : records) {
    if (!seen.insert({r.model_id, r.checkpoint_step, r.language}).second) {
      throw ValidationError("duplicate metric record for (" + r.model_id + ", " +
                            std::to_string(r.checkpoint_step) + ", " + r.language + ")");
    }
  }
}

inline void save_metrics_csv(std::vector<MetricRecord> records,
                             const std::filesystem::path& path) {
  check_unique_metric_keys(records);
  std::sort(records.begin(), records.end(), [](const MetricRecord& a, const MetricRecord& b) {
    return std::tie(a.model_id, a.checkpoint_step, a.language) <
           std::tie(b.model_id, b.checkpoint_step, b.language);
  });
  AtomicFileWriter w(path);
  w.stream() << "model_id,checkpoint_step,language,rouge_l,nli,length_ratio,n_examples\n";
  for (const auto& r : records) {
    w.stream() << csv_escape(r.model_id) << ',' << r.checkpoint_step << ','
               << csv_escape(r.language) << ',' << format_fixed(r.rouge_l, 6) << ','
               << format_fixed(r.nli, 6) << ',' << format_fixed(r.length_ratio, 6) << ','
               << r.n_examples << '\n';
  }
  w.commit();
}

inline std::vector<MetricRecord> load_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read metrics file: " + path.string());
  const std::string ctx = "metrics " + path.string();
  CsvTable table = CsvTable::read(in, ctx);
  table.require_columns({"model_id", "checkpoint_step", "language", "rouge_l", "nli",
                         "length_ratio", "n_examples"},
                        ctx);
  size_t c_model = table.column("model_id", ctx);
  size_t c_step = table.column("checkpoint_step", ctx);
  size_t c_lang = table.column("language", ctx);
  size_t c_rouge = table.column("rouge_l", ctx);
  size_t c_nli = table.column("nli", ctx);
  size_t c_len = table.column("length_ratio", ctx);
  size_t c_n = table.column("n_examples", ctx);

  auto parse_real = [&](const std::string& raw, const char* col) {
    try {
      size_t pos = 0;
      double v = std::stod(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument("trailing chars");
      return v;
    } catch (const std::exception&) {
      throw ValidationError(ctx + ": invalid value \"" + raw + "\" in column \"" + col + "\"");
    }
  };

  std::vector<MetricRecord> out;
  for (const auto& row : table.rows()) {
    MetricRecord r;
    r.model_id = row[c_model];
    r.checkpoint_step = parse_int_field(row[c_step], ctx + " column checkpoint_step");
    r.language = normalize_language_key(row[c_lang]);
    r.rouge_l = parse_real(row[c_rouge], "rouge_l");
    r.nli = parse_real(row[c_nli], "nli");
    r.length_ratio = parse_real(row[c_len], "length_ratio");
    r.n_examples = parse_int_field(row[c_n], ctx + " column n_examples");
    if (r.n_examples < 1) throw ValidationError(ctx + ": n_examples must be >= 1");
    out.push_back(std::move(r));
  }
  check_unique_metric_keys(out);
  return out;
}

// ---------------------------------------------------------------------------
// Prediction files: JSON lines {"id","text"} with an optional "language".

struct PredictionFile {
  TextById text_by_id;
  std::map<std::string, std::string> language_by_id;  // only ids that carry one
};

inline PredictionFile load_prediction_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read predictions file: " + path.string());
  PredictionFile out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string() + " line " + std::to_string(line_no) +
                            ": invalid JSON (" + e.what() + ")");
    }
    if (!j.contains("id") || !j["id"].is_string() || !j.contains("text") ||
        !j["text"].is_string()) {
      throw ValidationError(path.string() + " line " + std::to_string(line_no) +
                            ": record needs string fields \"id\" and \"text\"");
    }
    std::string id = j["id"].get<std::string>();
    if (!out.text_by_id.emplace(id, j["text"].get<std::string>()).second) {
      throw ValidationError(path.string() + ": duplicate id \"" + id + "\"");
    }
    if (j.contains("language") && j["language"].is_string()) {
      out.language_by_id[id] = normalize_language_key(j["language"].get<std::string>());
    }
  }
  return out;
}

inline void write_prediction_file(const std::filesystem::path& path,
                                  const TextById& text_by_id,
                                  const std::map<std::string, std::string>* language_by_id = nullptr) {
  AtomicFileWriter w(path);
  for (const auto& [id, text] : text_by_id) {
    nlohmann::ordered_json j;
    j["id"] = id;
    j["text"] = text;
    if (language_by_id) {
      auto it = language_by_id->find(id);
      if (it != language_by_id->end()) j["language"] = it->second;
    }
    w.stream() << j.dump() << '\n';
  }
  w.commit();
}

}  // namespace entailsum
