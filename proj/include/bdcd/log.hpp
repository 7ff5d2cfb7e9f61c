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

#ifndef BDCD_LOG_HPP_
#define BDCD_LOG_HPP_

#include <spdlog/spdlog.h>

namespace bdcd {

/// Sets the spdlog level from BDCD_LOG (error | info | debug). Unset or
/// unrecognised values leave the level at info. Logs go to stderr.
void init_logging_from_env();

}  // namespace bdcd

#endif  // BDCD_LOG_HPP_
