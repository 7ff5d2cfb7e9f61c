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

#include "bdcd/errors.hpp"

namespace bdcd {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidShape:
      return "invalid_shape";
    case ErrorCode::kInvalidParameter:
      return "invalid_parameter";
    case ErrorCode::kNotFound:
      return "not_found";
    case ErrorCode::kEmptyDataset:
      return "empty_dataset";
    case ErrorCode::kIo:
      return "io";
    case ErrorCode::kDecode:
      return "decode";
    case ErrorCode::kFormat:
      return "format";
    case ErrorCode::kVersion:
      return "version";
    case ErrorCode::kCorruption:
      return "corruption";
  }
  return "unknown";
}

}  // namespace bdcd
