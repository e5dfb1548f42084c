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

#include "mlgcp/params_json.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "mlgcp/error.hpp"

namespace mlgcp {

namespace {

using nlohmann::json;

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_array()) {
    throw InputError(std::string("params JSON: missing array '") + key + "'");
  }
  const auto& arr = doc[key];
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) {
      throw InputError(std::string("params JSON: non-numeric entry in '") + key + "'");
    }
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

}  // namespace

std::string params_to_json(const ModelParams& params, int indent) {
  json doc;
  json alpha = json::array();
  for (Eigen::Index i = 0; i < params.alpha.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index l = 0; l < params.alpha.cols(); ++l) row.push_back(params.alpha(i, l));
    alpha.push_back(std::move(row));
  }
  doc["alpha"] = std::move(alpha);
  doc["sigma2"] = vector_json(params.sigma2);
  doc["phi"] = vector_json(params.phi);
  doc["psi"] = vector_json(params.psi);
  return doc.dump(indent);
}

ModelParams params_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("params JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InputError("params JSON: expected an object");
  ModelParams params;
  params.sigma2 = vector_from(doc, "sigma2");
  params.phi = vector_from(doc, "phi");
  params.psi = vector_from(doc, "psi");
  if (!doc.contains("alpha") || !doc["alpha"].is_array()) {
    throw InputError("params JSON: missing array 'alpha'");
  }
  const auto& rows = doc["alpha"];
  const auto p = params.sigma2.size();
  const auto q = params.phi.size();
  if (static_cast<Eigen::Index>(rows.size()) != p) {
    throw InputError("params JSON: alpha must have one row per type");
  }
  params.alpha.resize(p, q);
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != q) {
      throw InputError("params JSON: alpha rows must have length q = len(phi)");
    }
    for (Eigen::Index l = 0; l < q; ++l) {
      const auto& v = row[static_cast<std::size_t>(l)];
      if (!v.is_number()) throw InputError("params JSON: non-numeric alpha entry");
      params.alpha(i, l) = v.get<double>();
    }
  }
  params.validate();
  return params;
}

void write_params(const std::filesystem::path& path, const ModelParams& params) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << params_to_json(params) << '\n';
}

ModelParams read_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return params_from_json(buffer.str());
}

}  // namespace mlgcp
