/*
 * Copyright 2026 The CoTrans Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cotrans/dataio.hpp"
#include "cotrans/model.hpp"

namespace cotrans {

// Plain `key = value` configuration text. Blank lines and lines starting with
// '#' are ignored.

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

ConfigEntries parse_config_text(std::string_view text);

/// Settings for a run: training hyperparameters plus synthetic-data shape.
struct RunConfig {
  TrainConfig train;
  SynthSpec synth;
  std::uint64_t split_seed = 7;
};

/// Applies one entry. Throws on unknown keys or unparsable values.
void apply_config_entry(RunConfig& config, std::string_view key, std::string_view value);

/// Every key with its resolved value, one `key = value` line each, in a
/// fixed order.
std::string config_to_text(const RunConfig& config);

/// Keys understood by apply_config_entry, in output order.
std::vector<std::string> config_keys();

}  // namespace cotrans
