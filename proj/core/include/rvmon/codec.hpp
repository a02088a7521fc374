/*
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rvmon::codec {

/// Percent-encodes '%', ' ', ',', '=' and control bytes; everything else passes through.
std::string encode(std::string_view raw);

/// Inverse of encode(). Accepts any %XX escape; throws ParseError(0, ...) on a truncated escape.
std::string decode(std::string_view text);

std::vector<std::string_view> split(std::string_view text, char sep);

/// Whitespace-separated tokens.
std::vector<std::string_view> tokens(std::string_view line);

/// Strict non-negative decimal integer; nullopt on anything else (sign, junk, overflow).
std::optional<std::int64_t> parse_non_negative(std::string_view text);

/// Finite decimal or "p/q" rational; nullopt on junk.
std::optional<double> parse_rational(std::string_view text);

std::string format_fixed(double value, int decimals);

} // namespace rvmon::codec
