/* Copyright 2026 The Mantra Authors. All Rights Reserved.

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

#ifndef MANTRA_ERRORS_HPP_
#define MANTRA_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace mantra {

// Invalid or inconsistent configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing, malformed or schema-mismatched input data. Maps to exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values or failed numerical procedures. Maps to exit code 4.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// More than one manoeuvre transition inside a single change period.
class MultipleTransitionsInPeriod : public DataError {
 public:
  MultipleTransitionsInPeriod(int period, int transitions)
      : DataError("period " + std::to_string(period) + " contains " +
                  std::to_string(transitions) + " manoeuvre transitions"),
        period_(period) {}
  int period() const { return period_; }

 private:
  int period_;
};

}  // namespace mantra

#endif  // MANTRA_ERRORS_HPP_
