/*******************************************************************************
 * Copyright 2026 The cjt-engine Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 ******************************************************************************/

#include "cjt/csv.hpp"

#include <fstream>
#include <sstream>

#include "cjt/error.hpp"

namespace cjt {

int CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

namespace {

std::vector<std::vector<std::string>> parse_records(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> cur;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        any = true;
        break;
      case ',':
        cur.push_back(std::move(field));
        field.clear();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        if (any || !field.empty() || !cur.empty()) {
          cur.push_back(std::move(field));
          field.clear();
          records.push_back(std::move(cur));
          cur.clear();
          any = false;
        }
        break;
      default:
        field += c;
        any = true;
    }
  }
  if (any || !field.empty() || !cur.empty()) {
    cur.push_back(std::move(field));
    records.push_back(std::move(cur));
  }
  return records;
}

std::string escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  auto records = parse_records(text);
  require(!records.empty(), "csv has no header row");
  CsvTable t;
  t.header = std::move(records[0]);
  for (size_t i = 1; i < records.size(); ++i) {
    require(records[i].size() == t.header.size(),
            "csv row has wrong column count");
    t.rows.push_back(std::move(records[i]));
  }
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open csv file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::string format_csv(const CsvTable& table) {
  std::ostringstream os;
  for (size_t i = 0; i < table.header.size(); ++i) {
    if (i) os << ',';
    os << escape(table.header[i]);
  }
  os << '\n';
  for (auto& row : table.rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      os << escape(row[i]);
    }
    os << '\n';
  }
  return os.str();
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write csv file: " + path);
  out << format_csv(table);
}

}  // namespace cjt
