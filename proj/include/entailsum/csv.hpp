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

#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "entailsum/error.hpp"

namespace entailsum {

// Minimal RFC 4180 reader/writer: comma separator, double-quote escaping,
// quoted fields may contain commas, quotes and newlines.

inline bool parse_bool_field(const std::string& raw, const std::string& context) {
  std::string v;
  for (char c : raw) {
    if (c == ' ' || c == '\t') continue;
    v += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
  }
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError(context + ": invalid boolean \"" + raw + "\"");
}

inline int64_t parse_int_field(const std::string& raw, const std::string& context) {
  size_t begin = raw.find_first_not_of(" \t");
  size_t end = raw.find_last_not_of(" \t");
  if (begin == std::string::npos) {
    throw ValidationError(context + ": invalid integer \"" + raw + "\"");
  }
  std::string v = raw.substr(begin, end - begin + 1);
  try {
    size_t pos = 0;
    long long parsed = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing chars");
    return parsed;
  } catch (const std::exception&) {
    throw ValidationError(context + ": invalid integer \"" + raw + "\"");
  }
}

inline std::string csv_escape(std::string_view field) {
  bool needs_quote = false;
  for (char c : field) {
    if (c == ',' || c == '"' || c == '\n' || c == '\r') {
      needs_quote = true;
      break;
    }
  }
  if (!needs_quote) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

inline void write_csv_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << csv_escape(fields[i]);
  }
  os << '\n';
}

// Reads one record (possibly spanning multiple physical lines when fields
// are quoted). Returns false at end of stream.
inline bool read_csv_record(std::istream& is, std::vector<std::string>& fields) {
  fields.clear();
  int c = is.get();
  if (c == EOF) return false;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  while (true) {
    if (c == EOF) {
      fields.push_back(field);
      return true;
    }
    char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        int next = is.peek();
        if (next == '"') {
          field += '"';
          is.get();
        } else {
          in_quotes = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"' && field.empty() && !any) {
      in_quotes = true;
    } else if (ch == ',') {
      fields.push_back(field);
      field.clear();
      any = false;
      c = is.get();
      continue;
    } else if (ch == '\r') {
      // swallow; handled with the following '\n' or treated as terminator
      if (is.peek() == '\n') is.get();
      fields.push_back(field);
      return true;
    } else if (ch == '\n') {
      fields.push_back(field);
      return true;
    } else {
      field += ch;
      any = true;
    }
    c = is.get();
  }
}

// Header-indexed CSV table. Loads everything; the CSV artifacts in this
// toolkit are small (per-language rows, not per-example rows).
class CsvTable {
 public:
  static CsvTable read(std::istream& is, const std::string& context) {
    CsvTable t;
    std::vector<std::string> row;
    if (!read_csv_record(is, t.header_)) {
      throw ValidationError(context + ": empty CSV (missing header)");
    }
    for (size_t i = 0; i < t.header_.size(); ++i) t.index_[t.header_[i]] = i;
    size_t line = 1;
    while (read_csv_record(is, row)) {
      ++line;
      if (row.size() == 1 && row[0].empty()) continue;  // trailing blank line
      if (row.size() != t.header_.size()) {
        throw ValidationError(context + " line " + std::to_string(line) +
                              ": expected " + std::to_string(t.header_.size()) +
                              " fields, got " + std::to_string(row.size()));
      }
      t.rows_.push_back(row);
    }
    return t;
  }

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  size_t column(const std::string& name, const std::string& context) const {
    auto it = index_.find(name);
    if (it == index_.end()) {
      throw ValidationError(context + ": missing required column \"" + name + "\"");
    }
    return it->second;
  }

  void require_columns(const std::vector<std::string>& names,
                       const std::string& context) const {
    for (const auto& n : names) column(n, context);
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::map<std::string, size_t> index_;
};

}  // namespace entailsum
