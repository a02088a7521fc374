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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rvmon {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed text input. `line()` is 1-based, 0 when not line-oriented.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& detail)
        : Error(line == 0 ? detail : "line " + std::to_string(line) + ": " + detail), line_(line), detail_(detail) {}

    std::size_t line() const noexcept { return line_; }
    /// Message without the line prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    std::size_t line_;
    std::string detail_;
};

/// Well-formed input that violates a domain invariant (bad event, bad rule set, bad template).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Event fed to a monitor with a timestamp older than its logical clock.
class MonotonicityError : public Error {
public:
    using Error::Error;
};

/// Rule set and event stream disagree, e.g. a session-correlated rule sees an event without session.
class ConfigurationError : public Error {
public:
    using Error::Error;
};

} // namespace rvmon
