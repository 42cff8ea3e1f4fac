// Copyright 2026 The fedsim Authors. All Rights Reserved.
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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Small text helpers shared by every on-disk format: locale-free number
// formatting/parsing and line splitting.
namespace fedsim::text {

// Shortest decimal that parses back to the same double.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

std::string_view trim(std::string_view s);

// Splits on every occurrence of `sep`; empty fields are kept.
std::vector<std::string_view> split(std::string_view s, char sep);

// Splits on runs of spaces or tabs; empty fields are dropped.
std::vector<std::string_view> split_whitespace(std::string_view s);

template <typename Range, typename Fn>
std::string join(const Range& items, std::string_view sep, Fn&& to_string) {
  std::string out;
  bool first = true;
  for (const auto& item : items) {
    if (!first) out.append(sep);
    first = false;
    out += to_string(item);
  }
  return out;
}

std::string read_file(const std::filesystem::path& path);

// Writes with LF line endings, creating parent directories as needed.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace fedsim::text
