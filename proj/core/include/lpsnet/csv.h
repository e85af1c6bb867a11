// Copyright 2026 The lpsnet Authors
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

#include <string>
#include <string_view>
#include <vector>

#include "lpsnet/config.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {

// Plain comma-separated tables as written by this library: a header row, no
// quoting, no embedded commas. Blank lines are skipped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column position by name; throws ParseError when absent.
  std::size_t column(std::string_view name) const;
};

std::vector<std::string> split_csv_line(std::string_view line);
CsvTable parse_csv(std::string_view text, const std::string& source = "<csv>");
CsvTable read_csv(const std::string& path);

// Shortest text that parses back to the same double.
std::string format_real(double v);
double parse_real(std::string_view text, const std::string& context);
long long parse_integer(std::string_view text, const std::string& context);

}  // namespace lpsnet
