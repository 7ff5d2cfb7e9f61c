// Copyright 2026 The bdcd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BDCD_ERRORS_HPP_
#define BDCD_ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace bdcd {

enum class ErrorCode {
  kInvalidShape,
  kInvalidParameter,
  kNotFound,
  kEmptyDataset,
  kIo,
  kDecode,
  kFormat,
  kVersion,
  kCorruption,
};

std::string_view error_code_name(ErrorCode code) noexcept;

/// Base class of every error raised by the library. The code lets callers
/// (the CLI, the HTTP service, the Python module) map failures without
/// catching each subclass separately.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define BDCD_DEFINE_ERROR(Name, Code)                                 \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& message) : Error(Code, message) {} \
  }

BDCD_DEFINE_ERROR(InvalidShapeError, ErrorCode::kInvalidShape);
BDCD_DEFINE_ERROR(InvalidParameterError, ErrorCode::kInvalidParameter);
BDCD_DEFINE_ERROR(NotFoundError, ErrorCode::kNotFound);
BDCD_DEFINE_ERROR(EmptyDatasetError, ErrorCode::kEmptyDataset);
BDCD_DEFINE_ERROR(IoError, ErrorCode::kIo);
BDCD_DEFINE_ERROR(DecodeError, ErrorCode::kDecode);
BDCD_DEFINE_ERROR(FormatError, ErrorCode::kFormat);
BDCD_DEFINE_ERROR(VersionError, ErrorCode::kVersion);
BDCD_DEFINE_ERROR(CorruptionError, ErrorCode::kCorruption);

#undef BDCD_DEFINE_ERROR

}  // namespace bdcd

#endif  // BDCD_ERRORS_HPP_
