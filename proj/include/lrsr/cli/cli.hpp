/*
 * Copyright 2026 The lrsr Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <ostream>
#include <string_view>

#include "json.hpp"

namespace lrsr::cli {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `lrsr <subcommand> ...` invocation and returns its exit code.
/// Regular output goes to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Applies a dotted `key.path=value` override to a JSON document. The value
/// is parsed as JSON when possible and taken as a string otherwise. Every
/// path component except the last must already exist, and the last must
/// already exist too unless `allow_new` is set.
void apply_override(nlohmann::json& doc, std::string_view assignment, bool allow_new = false);

}  // namespace lrsr::cli
