/*
 * Copyright 2026 The fairscl Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <charconv>
#include <cstdio>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "fairscl/dataset.hpp"
#include "fairscl/error.hpp"

namespace fairscl {
namespace {

struct CsvRow {
  size_t line = 0;  // 1-based line of the row's first character
  std::vector<std::string> fields;
};

// RFC 4180 style: quoted fields may contain commas, quotes ("") and newlines.
std::vector<CsvRow> ParseCsv(std::istream& in, const std::string& source) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  size_t line = 1;
  row.line = 1;
  char c;
  auto end_field = [&] {
    row.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    // A bare empty line carries no data.
    if (!(row.fields.size() == 1 && row.fields[0].empty())) {
      rows.push_back(std::move(row));
    }
    row = CsvRow{};
    row.line = line;
  };
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started || !field.empty()) {
          throw Error(ErrorKind::kParse,
                      source + ":" + std::to_string(line) +
                          ": stray quote inside unquoted field");
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        ++line;
        end_row();
        break;
      default:
        field.push_back(c);
    }
  }
  if (in_quotes) {
    throw Error(ErrorKind::kParse, source + ": unterminated quoted field");
  }
  if (!field.empty() || !row.fields.empty()) end_row();
  return rows;
}

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

bool ParseDouble(const std::string& text, double* out) {
  const std::string t = Trim(text);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, *out);
  return ec == std::errc() && ptr == last;
}

std::string CsvEscape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

TableSchema TableSchema::Conventional(const std::vector<std::string>& header) {
  static const std::regex kFeature("f[0-9]+");
  TableSchema schema;
  for (const auto& col : header) {
    if (col == schema.id_column || col == schema.label_column) continue;
    if (std::regex_match(col, kFeature)) {
      schema.feature_columns.push_back(col);
    } else {
      schema.group_columns.push_back(col);
    }
  }
  return schema;
}

Dataset IngestTable(const std::filesystem::path& path,
                    const TableSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "'");
  }
  const std::string source = path.string();
  std::vector<CsvRow> rows = ParseCsv(in, source);
  if (rows.empty()) {
    throw Error(ErrorKind::kSchema, source + ": missing header row");
  }
  const std::vector<std::string>& header = rows.front().fields;

  if (schema.group_columns.empty()) {
    throw Error(ErrorKind::kSchema, source + ": schema names no group column");
  }
  if (schema.feature_columns.empty()) {
    throw Error(ErrorKind::kSchema,
                source + ": schema names no feature column");
  }
  auto column = [&](const std::string& name) -> size_t {
    for (size_t k = 0; k < header.size(); ++k) {
      if (Trim(header[k]) == name) return k;
    }
    throw Error(ErrorKind::kSchema,
                source + ": missing column '" + name + "'");
  };
  std::set<std::string> roles;
  auto claim = [&](const std::string& name) {
    if (!roles.insert(name).second) {
      throw Error(ErrorKind::kSchema,
                  source + ": column '" + name + "' assigned two roles");
    }
    return column(name);
  };
  const size_t id_col = claim(schema.id_column);
  const size_t label_col = claim(schema.label_column);
  std::vector<size_t> group_cols, feature_cols;
  for (const auto& g : schema.group_columns) group_cols.push_back(claim(g));
  for (const auto& f : schema.feature_columns) feature_cols.push_back(claim(f));

  std::vector<Record> records;
  records.reserve(rows.size() - 1);
  std::vector<std::string> bad_labels;
  for (size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    const std::string where = source + ":" + std::to_string(row.line);
    if (row.fields.size() != header.size()) {
      throw Error(ErrorKind::kParse,
                  where + ": expected " + std::to_string(header.size()) +
                      " fields, found " + std::to_string(row.fields.size()));
    }
    Record rec;
    rec.id = Trim(row.fields[id_col]);
    double label = 0.0;
    if (!ParseDouble(row.fields[label_col], &label) ||
        (label != 0.0 && label != 1.0)) {
      bad_labels.push_back("row " + std::to_string(r) + " (line " +
                           std::to_string(row.line) + ", value '" +
                           row.fields[label_col] + "')");
    }
    rec.label = label == 1.0 ? 1 : 0;
    for (size_t k = 0; k < group_cols.size(); ++k) {
      std::string value = Trim(row.fields[group_cols[k]]);
      if (value.empty()) {
        throw Error(ErrorKind::kValidation,
                    where + ": missing value for group column '" +
                        schema.group_columns[k] + "'");
      }
      rec.groups.emplace(schema.group_columns[k], std::move(value));
    }
    rec.features.reserve(feature_cols.size());
    for (size_t k = 0; k < feature_cols.size(); ++k) {
      double v = 0.0;
      if (!ParseDouble(row.fields[feature_cols[k]], &v)) {
        throw Error(ErrorKind::kParse,
                    where + ": column '" + schema.feature_columns[k] +
                        "' is not numeric: '" + row.fields[feature_cols[k]] +
                        "'");
      }
      rec.features.push_back(v);
    }
    records.push_back(std::move(rec));
  }
  if (!bad_labels.empty()) {
    std::string msg = source + ": non-binary label in ";
    for (size_t k = 0; k < bad_labels.size(); ++k) {
      if (k > 0) msg += ", ";
      msg += bad_labels[k];
    }
    throw Error(ErrorKind::kValidation, msg);
  }
  return Dataset::Create(std::move(records), schema.feature_columns);
}

Dataset IngestTable(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "'");
  }
  std::string first;
  std::getline(in, first);
  std::istringstream header_stream(first);
  std::vector<CsvRow> header = ParseCsv(header_stream, path.string());
  if (header.empty()) {
    throw Error(ErrorKind::kSchema, path.string() + ": missing header row");
  }
  std::vector<std::string> names;
  for (const auto& f : header.front().fields) names.push_back(Trim(f));
  return IngestTable(path, TableSchema::Conventional(names));
}

void EmitTable(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::kIo, "cannot write '" + path.string() + "'");
  }
  std::vector<std::string> attributes;
  for (const auto& a : dataset.attributes()) attributes.push_back(a.name);

  out << "id,label";
  for (const auto& a : attributes) out << ',' << CsvEscape(a);
  for (const auto& f : dataset.feature_names()) out << ',' << CsvEscape(f);
  out << '\n';
  for (const Record& rec : dataset.records()) {
    out << CsvEscape(rec.id) << ',' << rec.label;
    for (const auto& a : attributes) out << ',' << CsvEscape(rec.groups.at(a));
    for (double v : rec.features) out << ',' << FormatDouble(v);
    out << '\n';
  }
  if (!out) {
    throw Error(ErrorKind::kIo, "write failed for '" + path.string() + "'");
  }
}

}  // namespace fairscl
