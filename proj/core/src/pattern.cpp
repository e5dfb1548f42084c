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

#include "mlgcp/pattern.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>

#include "csv.hpp"
#include "mlgcp/error.hpp"

namespace mlgcp {

std::size_t MultiPointPattern::total() const {
  std::size_t n = 0;
  for (const auto& type : points) n += type.size();
  return n;
}

void MultiPointPattern::validate() const {
  window.validate();
  if (points.empty()) throw InputError("pattern has no types");
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (const auto& pt : points[i]) {
      if (!window.contains(pt.x, pt.y)) {
        throw InputError("point (" + std::to_string(pt.x) + ", " + std::to_string(pt.y) +
                         ") of type " + std::to_string(i + 1) + " lies outside the window");
      }
    }
  }
}

namespace {

bool positive_integer(std::string_view s, long& value) {
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, value);
  return res.ec == std::errc() && res.ptr == end && value >= 1;
}

}  // namespace

MultiPointPattern read_pattern_csv(std::istream& in, const Window& window) {
  window.validate();
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw InputError("pattern CSV is empty");
  ++line_no;
  const auto header = detail::split_csv(line);
  if (header.size() != 3 || header[0] != "x" || header[1] != "y" || header[2] != "type") {
    throw InputError("pattern CSV header must be 'x,y,type'");
  }
  struct Row {
    Point pt;
    std::string label;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != 3) {
      throw InputError("line " + std::to_string(line_no) + ": expected 3 fields");
    }
    if (fields[2].empty()) throw InputError("line " + std::to_string(line_no) + ": empty type");
    rows.push_back({{detail::parse_double(fields[0], line_no),
                     detail::parse_double(fields[1], line_no)},
                    std::string(fields[2])});
  }

  bool all_integer = !rows.empty();
  long max_label = 0;
  for (const auto& r : rows) {
    long v = 0;
    if (!positive_integer(r.label, v)) {
      all_integer = false;
      break;
    }
    max_label = std::max(max_label, v);
  }

  MultiPointPattern pattern;
  pattern.window = window;
  if (all_integer) {
    pattern.points.resize(static_cast<std::size_t>(max_label));
    for (long i = 1; i <= max_label; ++i) pattern.labels.push_back(std::to_string(i));
    for (const auto& r : rows) {
      long v = 0;
      positive_integer(r.label, v);
      pattern.points[static_cast<std::size_t>(v - 1)].push_back(r.pt);
    }
  } else {
    std::map<std::string, std::size_t> index;
    for (const auto& r : rows) {
      auto [it, inserted] = index.emplace(r.label, pattern.labels.size());
      if (inserted) {
        pattern.labels.push_back(r.label);
        pattern.points.emplace_back();
      }
      pattern.points[it->second].push_back(r.pt);
    }
  }
  pattern.validate();
  return pattern;
}

MultiPointPattern read_pattern_csv(const std::filesystem::path& path, const Window& window) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  return read_pattern_csv(in, window);
}

void write_pattern_csv(std::ostream& out, const MultiPointPattern& pattern) {
  out << "x,y,type\n" << std::setprecision(17);
  for (std::size_t i = 0; i < pattern.points.size(); ++i) {
    const std::string label =
        i < pattern.labels.size() ? pattern.labels[i] : std::to_string(i + 1);
    for (const auto& pt : pattern.points[i]) out << pt.x << ',' << pt.y << ',' << label << '\n';
  }
}

void write_pattern_csv(const std::filesystem::path& path, const MultiPointPattern& pattern) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  write_pattern_csv(out, pattern);
}

}  // namespace mlgcp
