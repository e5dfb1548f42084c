// Copyright 2026 The mlgcp Authors
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

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "mlgcp/model.hpp"

namespace mlgcp {

// JSON layout: {"alpha": [[...], ...] (row-major, p rows of q entries),
//               "sigma2": [...], "phi": [...], "psi": [...]}
std::string params_to_json(const ModelParams& params, int indent = 2);
ModelParams params_from_json(std::string_view text);

void write_params(const std::filesystem::path& path, const ModelParams& params);
ModelParams read_params(const std::filesystem::path& path);

}  // namespace mlgcp
