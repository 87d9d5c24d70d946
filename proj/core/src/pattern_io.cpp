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

// Pattern file layout (text, one record per line):
//
//   fba-patterns 1
//   network <hash of the weight file the patterns came from>
//   rectification <bidirectional|positive>
//   categories <name> <name> ...
//   counts <n> <n> ...              source images per category
//   channels <k> <k> ...            maps per ReLU layer, in relu order
//   pattern <relu> <category> <v_1> ... <v_k>
//
// Values use %.9g.

#include <cstdio>
#include <sstream>

#include "fba/attention.hpp"
#include "fba/bytes.hpp"
#include "fba/errors.hpp"

namespace fba {

namespace {

[[noreturn]] void bad(std::size_t lineno, const std::string& why) {
  throw FormatError(FormatError::Kind::syntax, "pattern file line " + std::to_string(lineno) + ": " + why);
}

template <typename U>
std::vector<U> rest_of(std::istringstream& in, std::size_t lineno) {
  std::vector<U> out;
  U v;
  while (in >> v) out.push_back(v);
  if (!in.eof()) bad(lineno, "malformed value");
  return out;
}

}  // namespace

std::string encode_patterns(const FeaturePatternSet& set, const std::string& network_hash) {
  for (const auto& name : set.categories) {
    if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
      throw ArgumentError("category name '" + name + "' cannot be stored in a pattern file");
    }
  }
  std::ostringstream out;
  out << "fba-patterns 1\n";
  out << "network " << (network_hash.empty() ? "-" : network_hash) << '\n';
  out << "rectification " << to_string(set.rectification) << '\n';
  out << "categories";
  for (const auto& c : set.categories) out << ' ' << c;
  out << "\ncounts";
  for (auto n : set.counts) out << ' ' << n;
  out << "\nchannels";
  for (auto n : set.channels) out << ' ' << n;
  out << '\n';
  char buf[32];
  for (const auto& [key, values] : set.patterns) {
    out << "pattern " << key.first << ' ' << key.second;
    for (float v : values) {
      std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
      out << ' ' << buf;
    }
    out << '\n';
  }
  return out.str();
}

FeaturePatternSet decode_patterns(const std::string& text, std::string* network_hash) {
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  FeaturePatternSet set;
  bool saw_header = false;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream in(line);
    std::string word;
    in >> word;
    if (!saw_header) {
      int version = 0;
      if (word != "fba-patterns") throw FormatError(FormatError::Kind::bad_magic, "not an fba pattern file");
      if (!(in >> version) || version != 1) {
        throw FormatError(FormatError::Kind::version_mismatch, "pattern file version " + std::to_string(version));
      }
      saw_header = true;
    } else if (word == "network") {
      std::string h;
      in >> h;
      if (network_hash) *network_hash = h;
    } else if (word == "rectification") {
      std::string r;
      in >> r;
      set.rectification = parse_rectification(r);
    } else if (word == "categories") {
      set.categories = rest_of<std::string>(in, lineno);
    } else if (word == "counts") {
      set.counts = rest_of<std::size_t>(in, lineno);
    } else if (word == "channels") {
      set.channels = rest_of<std::size_t>(in, lineno);
    } else if (word == "pattern") {
      int relu = 0, category = 0;
      if (!(in >> relu >> category)) bad(lineno, "pattern needs relu and category indices");
      auto values = rest_of<float>(in, lineno);
      if (relu < 1 || static_cast<std::size_t>(relu) > set.channels.size() || category < 0 ||
          static_cast<std::size_t>(category) >= set.categories.size()) {
        bad(lineno, "pattern index out of range");
      }
      if (values.size() != set.channels[static_cast<std::size_t>(relu - 1)]) {
        throw FormatError(FormatError::Kind::inconsistent,
                          "pattern file line " + std::to_string(lineno) + ": " + std::to_string(values.size()) +
                              " values, relu " + std::to_string(relu) + " has " +
                              std::to_string(set.channels[static_cast<std::size_t>(relu - 1)]) + " maps");
      }
      set.patterns[{relu, category}] = std::move(values);
    } else {
      bad(lineno, "unknown record '" + word + "'");
    }
  }
  if (!saw_header) throw FormatError(FormatError::Kind::bad_magic, "empty pattern file");
  if (set.counts.size() != set.categories.size()) {
    throw FormatError(FormatError::Kind::inconsistent, "counts do not match the category list");
  }
  return set;
}

void save_patterns(const FeaturePatternSet& patterns, const std::filesystem::path& path, const std::string& network_hash) {
  bytes::write_file(path, encode_patterns(patterns, network_hash));
}

FeaturePatternSet load_patterns(const std::filesystem::path& path, std::string* network_hash) {
  return decode_patterns(bytes::read_file(path), network_hash);
}

}  // namespace fba
