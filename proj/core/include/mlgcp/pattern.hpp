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

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mlgcp/model.hpp"

namespace mlgcp {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// p typed point sets observed in a rectangular window.
struct MultiPointPattern {
  Window window;
  std::vector<std::vector<Point>> points;  // points[i] holds type i
  std::vector<std::string> labels;         // label of each type, as in the CSV

  std::size_t types() const { return points.size(); }
  std::size_t total() const;
  /// Throws InputError if p == 0 or a point lies outside the window.
  void validate() const;
};

/// Reads CSV with header `x,y,type`. If every type label is a positive
/// integer the label is the 1-based type index (missing indices become empty
/// types); otherwise labels are mapped to types in order of first appearance.
MultiPointPattern read_pattern_csv(std::istream& in, const Window& window);
MultiPointPattern read_pattern_csv(const std::filesystem::path& path, const Window& window);

void write_pattern_csv(std::ostream& out, const MultiPointPattern& pattern);
void write_pattern_csv(const std::filesystem::path& path, const MultiPointPattern& pattern);

}  // namespace mlgcp
