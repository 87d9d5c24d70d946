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

#pragma once

// Results table, one record per line:
//
//   # provenance <token>
//   category,imageset,mode,rectification,layers,beta,fold,tp,fp,tn,fn,accuracy
//   disk,array,multiplicative,bidirectional,5,0.6,0,37,9,41,13,0.78
//
// Unattended rows carry "none" in mode, rectification and layers and beta 0.
// Layer sets are written as "5" or "4+5". Reals use the shortest decimal form
// that reads back to the same double.

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fba/records.hpp"

namespace fba {

inline constexpr std::string_view kResultsColumns =
    "category,imageset,mode,rectification,layers,beta,fold,tp,fp,tn,fn,accuracy";

std::string format_number(double value);
double parse_number(std::string_view text);

std::string format_record(const EvalRecord& record);
EvalRecord parse_record(std::string_view line);

struct ResultsTable {
  std::string provenance;
  std::vector<EvalRecord> records;
};

std::string encode_results(std::span<const EvalRecord> records, const std::string& provenance);
ResultsTable decode_results(std::string_view text);
void write_results(const std::filesystem::path& path, std::span<const EvalRecord> records,
                   const std::string& provenance);
ResultsTable read_results(const std::filesystem::path& path);

/// Appends records to a results file, flushing after every batch.
class ResultsWriter {
 public:
  /// Creates the file with its header, or reopens an existing one for appending.
  ResultsWriter(const std::filesystem::path& path, const std::string& provenance, bool append);
  void append(std::span<const EvalRecord> records);

 private:
  std::ofstream out_;
};

/// Plain table for analysis outputs.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Fields containing commas or quotes are quoted.
std::string encode_csv(const CsvTable& table, const std::string& provenance);
void write_csv(const std::filesystem::path& path, const CsvTable& table, const std::string& provenance);
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace fba
