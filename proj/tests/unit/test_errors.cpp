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

#include <doctest.h>

#include "bdcd/errors.hpp"

using namespace bdcd;

TEST_CASE("error codes and names") {
  try {
    throw CorruptionError("bad crc");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCorruption);
    CHECK(std::string(e.what()) == "bad crc");
  }
  CHECK(error_code_name(ErrorCode::kInvalidShape) == "invalid_shape");
  CHECK(error_code_name(ErrorCode::kEmptyDataset) == "empty_dataset");
  CHECK(FormatError("x").code() == ErrorCode::kFormat);
  CHECK(VersionError("x").code() == ErrorCode::kVersion);
}
