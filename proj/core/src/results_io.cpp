// Copyright 2026 The fba Authors. All rights reserved.
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

#include "fba/results_io.hpp"

#include <charconv>
#include <cmath>

#include "fba/bytes.hpp"
#include "fba/errors.hpp"

namespace fba {

namespace {

constexpr std::string_view kProvenancePrefix = "# provenance ";

std::size_t parse_count(std::string_view text, const char* what) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw FormatError(FormatError::Kind::syntax, std::string("bad ") + what + " '" + std::string(text) + "'");
  }
  return value;
}

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

double parse_number(std::string_view text) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw FormatError(FormatError::Kind::syntax, "bad number '" + std::string(text) + "'");
  }
  return value;
}

std::string format_record(const EvalRecord& r) {
  std::string line = quote(r.category) + ',' + to_string(r.imageset) + ',';
  if (r.attention) {
    line += std::string(to_string(r.attention->mode)) + ',' + to_string(r.attention->rectification) + ',' +
            layers_string(r.attention->layers) + ',' + format_number(r.attention->beta);
  } else {
    line += "none,none,none,0";
  }
  line += ',' + std::to_string(r.fold) + ',' + std::to_string(r.tp) + ',' + std::to_string(r.fp) + ',' +
          std::to_string(r.tn) + ',' + std::to_string(r.fn) + ',' + format_number(r.accuracy());
  return line;
}

EvalRecord parse_record(std::string_view line) {
  const auto f = split_csv_line(line);
  if (f.size() != 12) {
    throw FormatError(FormatError::Kind::syntax,
                      "expected 12 fields, found " + std::to_string(f.size()) + " in '" + std::string(line) + "'");
  }
  EvalRecord r;
  r.category = f[0];
  try {
    r.imageset = parse_imageset(f[1]);
    if (f[2] == "none") {
      if (f[3] != "none" || f[4] != "none") {
        throw FormatError(FormatError::Kind::inconsistent, "unattended row with attention fields: " + std::string(line));
      }
    } else {
      AttentionTag tag;
      tag.mode = parse_mode(f[2]);
      tag.rectification = parse_rectification(f[3]);
      tag.layers = parse_layers(f[4]);
      tag.beta = parse_number(f[5]);
      r.attention = tag;
    }
  } catch (const ArgumentError& e) {
    throw FormatError(FormatError::Kind::syntax, e.what());
  }
  r.fold = parse_count(f[6], "fold");
  r.tp = parse_count(f[7], "tp");
  r.fp = parse_count(f[8], "fp");
  r.tn = parse_count(f[9], "tn");
  r.fn = parse_count(f[10], "fn");
  if (parse_number(f[11]) != r.accuracy()) {
    throw FormatError(FormatError::Kind::inconsistent, "accuracy does not match counts in '" + std::string(line) + "'");
  }
  return r;
}

std::string encode_results(std::span<const EvalRecord> records, const std::string& provenance) {
  std::string out = std::string(kProvenancePrefix) + provenance + '\n' + std::string(kResultsColumns) + '\n';
  for (const auto& r : records) out += format_record(r) + '\n';
  return out;
}

ResultsTable decode_results(std::string_view text) {
  ResultsTable table;
  bool header = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.starts_with(kProvenancePrefix)) {
      table.provenance = std::string(line.substr(kProvenancePrefix.size()));
    } else if (line.front() == '#') {
      continue;
    } else if (!header) {
      if (line != kResultsColumns) {
        throw FormatError(FormatError::Kind::syntax, "unexpected results header '" + std::string(line) + "'");
      }
      header = true;
    } else {
      table.records.push_back(parse_record(line));
    }
  }
  return table;
}

void write_results(const std::filesystem::path& path, std::span<const EvalRecord> records,
                   const std::string& provenance) {
  bytes::write_file(path, encode_results(records, provenance));
}

ResultsTable read_results(const std::filesystem::path& path) { return decode_results(bytes::read_file(path)); }

ResultsWriter::ResultsWriter(const std::filesystem::path& path, const std::string& provenance, bool append) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
  if (!out_) throw Error("cannot open " + path.string() + " for writing");
  if (!append) {
    out_ << kProvenancePrefix << provenance << '\n' << kResultsColumns << '\n';
    out_.flush();
  }
}

void ResultsWriter::append(std::span<const EvalRecord> records) {
  for (const auto& r : records) out_ << format_record(r) << '\n';
  out_.flush();
  if (!out_) throw Error("write to results file failed");
}

std::string encode_csv(const CsvTable& table, const std::string& provenance) {
  std::string out = std::string(kProvenancePrefix) + provenance + '\n';
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += quote(fields[i]);
    }
    out += '\n';
  };
  line(table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw ArgumentError("CSV row width does not match its header");
    line(row);
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table, const std::string& provenance) {
  bytes::write_file(path, encode_csv(table, provenance));
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw FormatError(FormatError::Kind::syntax, "unterminated quote in '" + std::string(line) + "'");
  return fields;
}

}  // namespace fba
