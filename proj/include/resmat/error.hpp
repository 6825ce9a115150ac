// Copyright 2026 The resmat Authors
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

#ifndef RESMAT_ERROR_HPP
#define RESMAT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace resmat {

/// Base class for all resmat errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A caller or model violated a documented contract (negative potential,
/// non-complete matrix passed where completeness is required, bad cutoffs...).
struct ContractError : Error {
  explicit ContractError(const std::string& what) : Error(what) {}
};

/// Degenerate numeric input: all-zero weight vector, zero column sum.
struct DegenerateError : Error {
  explicit DegenerateError(const std::string& what) : Error(what) {}
};

/// Malformed file or config input.
struct ParseError : Error {
  explicit ParseError(const std::string& what) : Error(what) {}
};

/// Operation requested on a run that did not record the data it needs.
struct UnsupportedError : Error {
  explicit UnsupportedError(const std::string& what) : Error(what) {}
};

}  // namespace resmat

#endif
