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
// Grouped reporting: metric records averaged over language groups (resource
// tier, language family, XNLI membership). Aggregation runs at full
// precision; rounding happens only when tables are rendered.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "entailsum/corpus.hpp"
#include "entailsum/error.hpp"
#include "entailsum/metrics.hpp"
#include "entailsum/parallel.hpp"
#include "entailsum/text.hpp"

namespace entailsum {

enum class Grouping { tier, family, xnli };

inline const char* grouping_name(Grouping g) {
  switch (g) {
    case Grouping::tier: return "tier";
    case Grouping::family: return "family";
    case Grouping::xnli: return "xnli";
  }
  return "?";
}

inline Grouping grouping_from_name(const std::string& name) {
  if (name == "tier") return Grouping::tier;
  if (name == "family") return Grouping::family;
  if (name == "xnli") return Grouping::xnli;
  throw ValidationError("unknown grouping \"" + name + "\"");
}

// One (model, checkpoint) column of a grouped table.
struct GroupColumn {
  std::string model_id;
  int64_t checkpoint_step = 0;

  bool operator<(const GroupColumn& other) const {
    return std::tie(model_id, checkpoint_step) <
           std::tie(other.model_id, other.checkpoint_step);
  }
  bool operator==(const GroupColumn& other) const {
    return model_id == other.model_id && checkpoint_step == other.checkpoint_step;
  }
};

struct GroupCell {
  double rouge_l = 0.0;
  double nli = 0.0;
  double length_ratio = 0.0;
};

struct GroupRow {
  std::string group_name;
  int64_t n_languages = 0;
  std::vector<GroupCell> cells;  // aligned with GroupReport::columns
};

struct GroupReport {
  Grouping grouping = Grouping::tier;
  std::vector<GroupColumn> columns;
  std::vector<GroupRow> rows;
  GroupRow footer;  // overall mean across every grouped language
  // Group sizes before any display filtering (family reports drop small
  // clusters from rows but they still count here and in the footer).
  std::map<std::string, int64_t> all_group_sizes;
};

namespace detail {

inline std::string group_key_for(const LanguageProfile& profile, Grouping grouping) {
  switch (grouping) {
    case Grouping::tier: return tier_name(profile.resource_tier);
    case Grouping::family: return profile.family;
    case Grouping::xnli: return profile.xnli_member ? "xnli" : "non-xnli";
  }
  return "?";
}

}  // namespace detail

// Unweighted mean over member languages for every (model, checkpoint)
// column. Every language in the records must have a profile, and every
// language must cover every column (rectangular table). Family reports omit
// clusters with fewer than three members from the rows; the footer and
// all_group_sizes still include them.
inline GroupReport group_average(const std::vector<MetricRecord>& records,
                                 const ProfileTable& profiles, Grouping grouping) {
  GroupReport report;
  report.grouping = grouping;

  std::set<GroupColumn> column_set;
  std::set<std::string> languages;
  for (const auto& r : records) {
    if (!profiles.find(r.language)) {
      throw ValidationError("no profile for language \"" + r.language +
                            "\" in metrics table");
    }
    column_set.insert({r.model_id, r.checkpoint_step});
    languages.insert(r.language);
  }
  if (records.empty()) throw ValidationError("empty metrics table");
  report.columns.assign(column_set.begin(), column_set.end());

  std::map<std::pair<std::string, int64_t>, std::map<std::string, const MetricRecord*>> cells;
  for (const auto& r : records) {
    cells[{r.model_id, r.checkpoint_step}][r.language] = &r;
  }
  std::string missing;
  for (const auto& col : report.columns) {
    const auto& by_language = cells.at({col.model_id, col.checkpoint_step});
    for (const auto& language : languages) {
      if (!by_language.count(language)) {
        missing += " (" + col.model_id + ", " + std::to_string(col.checkpoint_step) +
                   ", " + language + ")";
      }
    }
  }
  if (!missing.empty()) {
    throw ValidationError("metrics table is ragged; missing cells:" + missing);
  }

  std::map<std::string, std::vector<std::string>> members;
  for (const auto& language : languages) {
    members[detail::group_key_for(profiles.at(language), grouping)].push_back(language);
  }
  for (const auto& [name, langs] : members) {
    report.all_group_sizes[name] = static_cast<int64_t>(langs.size());
  }

  auto mean_row = [&](const std::string& name, const std::vector<std::string>& langs) {
    GroupRow row;
    row.group_name = name;
    row.n_languages = static_cast<int64_t>(langs.size());
    for (const auto& col : report.columns) {
      const auto& by_language = cells.at({col.model_id, col.checkpoint_step});
      KahanSum rouge, nli, len;
      for (const auto& language : langs) {
        const MetricRecord* r = by_language.at(language);
        rouge.add(r->rouge_l);
        nli.add(r->nli);
        len.add(r->length_ratio);
      }
      double n = static_cast<double>(langs.size());
      row.cells.push_back({rouge.value() / n, nli.value() / n, len.value() / n});
    }
    return row;
  };

  // Canonical row order: tiers high->low, families by size descending then
  // name, XNLI members first.
  std::vector<std::string> order;
  if (grouping == Grouping::tier) {
    for (const char* t : {"high", "medium", "low"}) {
      if (members.count(t)) order.push_back(t);
    }
  } else if (grouping == Grouping::xnli) {
    for (const char* t : {"xnli", "non-xnli"}) {
      if (members.count(t)) order.push_back(t);
    }
  } else {
    for (const auto& [name, langs] : members) order.push_back(name);
    std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
      size_t na = members.at(a).size(), nb = members.at(b).size();
      if (na != nb) return na > nb;
      return a < b;
    });
  }
  for (const auto& name : order) {
    if (grouping == Grouping::family && members.at(name).size() < 3) continue;
    report.rows.push_back(mean_row(name, members.at(name)));
  }

  std::vector<std::string> all_langs(languages.begin(), languages.end());
  report.footer = mean_row("all", all_langs);
  return report;
}

// ---------------------------------------------------------------------------
// Rendering. Output is byte-deterministic: fixed column order, two-decimal
// rounding, no timestamps.

inline std::string group_column_label(const GroupColumn& col) {
  return col.model_id + "@" + std::to_string(col.checkpoint_step);
}

inline std::string render_group_report_csv(const GroupReport& report) {
  std::string out = "group,n_languages";
  for (const auto& col : report.columns) {
    std::string label = group_column_label(col);
    out += "," + csv_escape(label + ":rouge_l") + "," + csv_escape(label + ":nli") + "," +
           csv_escape(label + ":length_ratio");
  }
  out += "\n";
  auto emit = [&](const GroupRow& row) {
    out += csv_escape(row.group_name) + "," + std::to_string(row.n_languages);
    for (const auto& cell : row.cells) {
      out += "," + format_fixed(cell.rouge_l, 2) + "," + format_fixed(cell.nli, 2) + "," +
             format_fixed(cell.length_ratio, 2);
    }
    out += "\n";
  };
  for (const auto& row : report.rows) emit(row);
  emit(report.footer);
  return out;
}

inline std::string render_group_report_markdown(const GroupReport& report) {
  std::string out = "| group | n |";
  for (const auto& col : report.columns) {
    std::string label = group_column_label(col);
    out += " " + label + " ROUGE-L | " + label + " NLI | " + label + " len |";
  }
  out += "\n|---|---|";
  for (size_t i = 0; i < report.columns.size(); ++i) out += "---|---|---|";
  out += "\n";
  auto emit = [&](const GroupRow& row) {
    out += "| " + row.group_name + " | " + std::to_string(row.n_languages) + " |";
    for (const auto& cell : row.cells) {
      out += " " + format_fixed(cell.rouge_l, 2) + " | " + format_fixed(cell.nli, 2) +
             " | " + format_fixed(cell.length_ratio, 2) + " |";
    }
    out += "\n";
  };
  for (const auto& row : report.rows) emit(row);
  emit(report.footer);
  return out;
}

}  // namespace entailsum
