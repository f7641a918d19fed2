// Copyright (c) 2026 The crowdnav Authors
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

#include <stdexcept>
#include <string>

namespace crowdnav
{

/// Malformed argument handed to a library call (NaN command, wrong feature length, ...).
class InvalidInput : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Configuration that cannot be used (missing model, bad key, unreadable file).
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// A file on disk that does not follow its documented format.
class FormatError : public std::runtime_error
{
public:
  FormatError(const std::string& what, long line = -1)
    : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what)
    , line_(line)
  {
  }
  long line() const { return line_; }

private:
  long line_;
};

class UnsupportedVersion : public FormatError
{
public:
  using FormatError::FormatError;
};

}  // namespace crowdnav
