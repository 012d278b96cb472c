// Copyright 2026 The acsum Authors.
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

#ifndef ACSUM_ERROR_HPP_
#define ACSUM_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace acsum {

enum class ErrorKind {
  kInvalidArgument,  // bad shapes, bad config, malformed input
  kIo,               // unreadable or unwritable files
  kFormat,           // corrupt or mismatched checkpoint/vocabulary
  kNumerical,        // non-finite loss or gradient
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace acsum

#endif  // ACSUM_ERROR_HPP_
