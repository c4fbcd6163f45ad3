/* Copyright 2026 The semask Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef SEMASK_ERRORS_HPP_
#define SEMASK_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace semask {

// Shape or size disagreement between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// NaN/Inf where a finite value is required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke an API precondition (e.g. a second backward pass).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Bad external input: audio, files, CLI values.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace semask

#endif  // SEMASK_ERRORS_HPP_
