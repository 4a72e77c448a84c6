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
// Human rating ingestion and aggregation. Each record is one rater's
// judgment of one system summary: quality on a 1-3 scale, attribution and
// informativeness as binary flags. Rates aggregate per rating (not by
// majority vote): per language first, then an unweighted mean over
// languages.

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
#include "entailsum/text.hpp"

namespace entailsum {

struct RatingRecord {
  std::string example_id;
  std::string language;
  std::string system_id;
  std::string rater_id;
  int quality = 1;          // 1..3
  int attribution = 0;      // 0/1
  int informativeness = 0;  // 0/1
};

struct RatingSet {
  std::vector<RatingRecord> records;
  // Items whose rater count differs from the expected three; kept as
  // warnings because real collections are rarely perfectly rectangular.
  std::vector<std::string> warnings;
};

inline RatingSet load_ratings(const std::filesystem::path& path,
                              int expected_raters = 3) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read ratings file: " + path.string());
  const std::string ctx = "ratings " + path.string();
  CsvTable table = CsvTable::read(in, ctx);
  table.require_columns({"example_id", "language", "system_id", "rater_id", "quality",
                         "attribution", "informativeness"},
                        ctx);
  size_t c_example = table.column("example_id", ctx);
  size_t c_language = table.column("language", ctx);
  size_t c_system = table.column("system_id", ctx);
  size_t c_rater = table.column("rater_id", ctx);
  size_t c_quality = table.column("quality", ctx);
  size_t c_attr = table.column("attribution", ctx);
  size_t c_inf = table.column("informativeness", ctx);

  RatingSet out;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  std::map<std::pair<std::string, std::string>, int> raters_per_item;
  for (const auto& row : table.rows()) {
    RatingRecord r;
    r.example_id = row[c_example];
    r.language = normalize_language_key(row[c_language]);
    r.system_id = row[c_system];
    r.rater_id = row[c_rater];
    if (r.example_id.empty() || r.language.empty() || r.system_id.empty() ||
        r.rater_id.empty()) {
      throw ValidationError(ctx + ": empty key field in record for example \"" +
                            r.example_id + "\"");
    }
    r.quality = static_cast<int>(parse_int_field(row[c_quality], ctx + " column quality"));
    r.attribution =
        static_cast<int>(parse_int_field(row[c_attr], ctx + " column attribution"));
    r.informativeness =
        static_cast<int>(parse_int_field(row[c_inf], ctx + " column informativeness"));
    if (r.quality < 1 || r.quality > 3) {
      throw ValidationError(ctx + ": quality must be in {1,2,3} for example \"" +
                            r.example_id + "\"");
    }
    if ((r.attribution != 0 && r.attribution != 1) ||
        (r.informativeness != 0 && r.informativeness != 1)) {
      throw ValidationError(ctx + ": binary judgment out of {0,1} for example \"" +
                            r.example_id + "\"");
    }
    if (!seen.insert({r.example_id, r.system_id, r.rater_id}).second) {
      throw ValidationError(ctx + ": duplicate rating (" + r.example_id + ", " +
                            r.system_id + ", " + r.rater_id + ")");
    }
    ++raters_per_item[{r.example_id, r.system_id}];
    out.records.push_back(std::move(r));
  }
  for (const auto& [item, n] : raters_per_item) {
    if (n != expected_raters) {
      out.warnings.push_back("item (" + item.first + ", " + item.second + ") has " +
                             std::to_string(n) + " rater(s), expected " +
                             std::to_string(expected_raters));
    }
  }
  return out;
}

// How 1-3 quality ratings map to a positive rate:
//   top_label       fraction of ratings equal to 3
//   normalized_mean mean of (quality - 1) / 2
enum class QualityMode { top_label, normalized_mean };

inline QualityMode quality_mode_from_name(const std::string& name) {
  if (name == "top_label") return QualityMode::top_label;
  if (name == "normalized_mean") return QualityMode::normalized_mean;
  throw ValidationError("unknown quality mode \"" + name + "\"");
}

struct LanguageRates {
  std::string language;
  double quality_rate = 0.0;
  double attribution_rate = 0.0;
  double informativeness_rate = 0.0;
  int64_t n_ratings = 0;
};

struct SystemScores {
  std::string system_id;
  std::vector<LanguageRates> per_language;  // sorted by language
  LanguageRates overall;                    // language = "overall"; unweighted mean
};

inline std::vector<SystemScores> score_systems(const RatingSet& ratings,
                                               QualityMode quality_mode = QualityMode::top_label) {
  if (ratings.records.empty()) throw ValidationError("empty rating set");

  struct Accum {
    int64_t n = 0;
    int64_t quality_top = 0;
    double quality_mass = 0.0;  // sum of (q-1)/2
    int64_t attribution = 0;
    int64_t informativeness = 0;
  };
  std::map<std::string, std::map<std::string, Accum>> by_system_language;
  for (const auto& r : ratings.records) {
    Accum& a = by_system_language[r.system_id][r.language];
    ++a.n;
    if (r.quality == 3) ++a.quality_top;
    a.quality_mass += (r.quality - 1) / 2.0;
    a.attribution += r.attribution;
    a.informativeness += r.informativeness;
  }

  std::vector<SystemScores> out;
  for (const auto& [system_id, by_language] : by_system_language) {
    SystemScores scores;
    scores.system_id = system_id;
    double q_sum = 0, a_sum = 0, i_sum = 0;
    int64_t n_total = 0;
    for (const auto& [language, a] : by_language) {
      LanguageRates rates;
      rates.language = language;
      rates.n_ratings = a.n;
      double n = static_cast<double>(a.n);
      rates.quality_rate = quality_mode == QualityMode::top_label
                               ? static_cast<double>(a.quality_top) / n
                               : a.quality_mass / n;
      rates.attribution_rate = static_cast<double>(a.attribution) / n;
      rates.informativeness_rate = static_cast<double>(a.informativeness) / n;
      q_sum += rates.quality_rate;
      a_sum += rates.attribution_rate;
      i_sum += rates.informativeness_rate;
      n_total += a.n;
      scores.per_language.push_back(std::move(rates));
    }
    double langs = static_cast<double>(scores.per_language.size());
    scores.overall.language = "overall";
    scores.overall.n_ratings = n_total;
    scores.overall.quality_rate = q_sum / langs;
    scores.overall.attribution_rate = a_sum / langs;
    scores.overall.informativeness_rate = i_sum / langs;
    out.push_back(std::move(scores));
  }
  return out;
}

inline void save_system_scores_csv(const std::vector<SystemScores>& scores,
                                   const std::filesystem::path& path) {
  AtomicFileWriter w(path);
  w.stream() << "system_id,language,quality_rate,attribution_rate,informativeness_rate,n_ratings\n";
  for (const auto& s : scores) {
    for (const auto& row : s.per_language) {
      w.stream() << csv_escape(s.system_id) << ',' << csv_escape(row.language) << ','
                 << format_fixed(row.quality_rate, 6) << ','
                 << format_fixed(row.attribution_rate, 6) << ','
                 << format_fixed(row.informativeness_rate, 6) << ',' << row.n_ratings << '\n';
    }
    w.stream() << csv_escape(s.system_id) << ",overall,"
               << format_fixed(s.overall.quality_rate, 6) << ','
               << format_fixed(s.overall.attribution_rate, 6) << ','
               << format_fixed(s.overall.informativeness_rate, 6) << ','
               << s.overall.n_ratings << '\n';
  }
  w.commit();
}

inline std::vector<SystemScores> load_system_scores_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read system scores file: " + path.string());
  const std::string ctx = "system scores " + path.string();
  CsvTable table = CsvTable::read(in, ctx);
  table.require_columns({"system_id", "language", "quality_rate", "attribution_rate",
                         "informativeness_rate", "n_ratings"},
                        ctx);
  std::map<std::string, SystemScores> by_system;
  for (const auto& row : table.rows()) {
    std::string system_id = row[table.column("system_id", ctx)];
    LanguageRates rates;
    rates.language = row[table.column("language", ctx)];
    rates.quality_rate = std::stod(row[table.column("quality_rate", ctx)]);
    rates.attribution_rate = std::stod(row[table.column("attribution_rate", ctx)]);
    rates.informativeness_rate = std::stod(row[table.column("informativeness_rate", ctx)]);
    rates.n_ratings = parse_int_field(row[table.column("n_ratings", ctx)], ctx);
    auto& scores = by_system[system_id];
    scores.system_id = system_id;
    if (rates.language == "overall") scores.overall = rates;
    else scores.per_language.push_back(rates);
  }
  std::vector<SystemScores> out;
  for (auto& [_, scores] : by_system) out.push_back(std::move(scores));
  return out;
}

}  // namespace entailsum
