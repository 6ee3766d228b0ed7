// Copyright 2026 The hoptex Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hoptex/size_audit.hpp"

#include "json.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace hoptex {

namespace {

std::string with_commas(std::int64_t v) {
  std::string digits = std::to_string(v < 0 ? -v : v);
  for (int i = static_cast<int>(digits.size()) - 3; i > 0; i -= 3) digits.insert(i, ",");
  return v < 0 ? "-" + digits : digits;
}

std::string stage_equation(int stage, int window_area, int in_channels) {
  const std::string k_out = "K_" + std::to_string(stage);
  if (stage == 1) return std::to_string(window_area * in_channels) + k_out + "+1";
  const std::string k_in = "K_" + std::to_string(stage - 1);
  return std::to_string(window_area) + k_in + k_out + "+" + k_in;
}

}  // namespace

std::int64_t SizeReport::closed_form_total() const {
  std::int64_t t = 0;
  for (const auto& c : components) t += c.closed_form;
  return t;
}

std::int64_t SizeReport::walked_total() const {
  std::int64_t t = 0;
  for (const auto& c : components) t += c.walked;
  return t;
}

bool SizeReport::agrees() const {
  for (const auto& c : components)
    if (c.closed_form != c.walked) return false;
  return true;
}

std::string SizeReport::to_text() const {
  std::ostringstream out;
  out << std::left << std::setw(22) << "Module" << std::setw(16) << "Equation" << std::right
      << std::setw(14) << "Closed form" << std::setw(14) << "Walked" << "\n";
  for (const auto& c : components)
    out << std::left << std::setw(22) << c.name << std::setw(16) << c.equation << std::right
        << std::setw(14) << with_commas(c.closed_form) << std::setw(14) << with_commas(c.walked)
        << "\n";
  out << std::left << std::setw(38) << "Total" << std::right << std::setw(14)
      << with_commas(closed_form_total()) << std::setw(14) << with_commas(walked_total()) << "\n";
  out << "agreement: " << (agrees() ? "yes" : "NO") << "\n";
  return out.str();
}

std::string SizeReport::to_json() const {
  nlohmann::ordered_json j;
  j["components"] = nlohmann::ordered_json::array();
  for (const auto& c : components)
    j["components"].push_back(
        {{"name", c.name}, {"equation", c.equation}, {"closed_form", c.closed_form}, {"walked", c.walked}});
  j["total_closed_form"] = closed_form_total();
  j["total_walked"] = walked_total();
  j["agrees"] = agrees();
  return j.dump(2);
}

SizeReport closed_form_size(const ModelDims& dims) {
  SizeReport report;
  std::int64_t in_channels = dims.input_channels;
  for (std::size_t i = 0; i < dims.hop_channels.size(); ++i) {
    const std::int64_t area = i < dims.windows.size()
                                  ? static_cast<std::int64_t>(dims.windows[i]) * dims.windows[i]
                                  : 0;
    const std::int64_t out = dims.hop_channels[i];
    const std::int64_t biases = i == 0 ? 1 : in_channels;
    report.components.push_back({"Transform - stage " + std::to_string(i + 1),
                                 stage_equation(static_cast<int>(i + 1), static_cast<int>(area),
                                                static_cast<int>(in_channels)),
                                 area * in_channels * out + biases, 0});
    in_channels = out;
  }
  const std::int64_t dr = dims.reduced_dim, n = dims.clusters, f = dims.cdfs, w = dims.codewords;
  report.components.push_back(
      {"Core - SDR", std::to_string(dims.core_map) + "D_r", dims.core_map * dr, 0});
  report.components.push_back({"Core - ICHM(i)", "N", n, 0});
  report.components.push_back({"Core - ICHM(ii)", "FD_r", f * dr, 0});
  report.components.push_back({"Core - ICHM(iii)", "3F+256W", 3 * f + 256 * w, 0});
  return report;
}

SizeReport closed_form_size(int k1, int k2, int reduced_dim, int clusters, int cdfs, int codewords) {
  ModelDims dims;
  dims.input_channels = 3;
  dims.windows = {2, 2};
  dims.hop_channels = {k1, k2};
  dims.core_map = 64;
  dims.reduced_dim = reduced_dim;
  dims.clusters = clusters;
  dims.cdfs = cdfs;
  dims.codewords = codewords;
  return closed_form_size(dims);
}

SizeReport audit_size(const TextureModel& model) {
  SizeReport report = closed_form_size(model.declared);
  std::vector<std::pair<std::string, std::int64_t>> walked;
  // Each hop counted as a dense (block dim x out channels) operator plus one
  // bias per stage; the implicit DC row is counted like any other filter.
  for (std::size_t i = 0; i < model.chain.hops.size(); ++i) {
    const Hop& hop = model.chain.hops[i];
    std::int64_t in_dim = 0;
    for (const auto& s : hop.stages) in_dim += s.block_dim();
    walked.emplace_back("Transform - stage " + std::to_string(i + 1),
                        in_dim * hop.out_channels() + static_cast<std::int64_t>(hop.stages.size()));
  }
  std::int64_t sdr = 0;
  for (const auto& ch : model.core.sdr.channels) sdr += ch.basis.rows() * ch.basis.cols();
  walked.emplace_back("Core - SDR", sdr);
  walked.emplace_back("Core - ICHM(i)", static_cast<std::int64_t>(model.core.clusters.size()));
  std::int64_t ica = 0, refs = 0;
  for (const auto& c : model.core.clusters) {
    ica += c.whitening.rows() * c.whitening.cols();
    refs += 3 * static_cast<std::int64_t>(c.cdfs.size());
  }
  walked.emplace_back("Core - ICHM(ii)", ica);
  walked.emplace_back("Core - ICHM(iii)",
                      refs + model.core.codebook.codewords.rows() * model.core.codebook.codewords.cols());

  for (const auto& [name, count] : walked) {
    auto it = std::find_if(report.components.begin(), report.components.end(),
                           [&](const SizeComponent& c) { return c.name == name; });
    if (it == report.components.end())
      report.components.push_back({name, "-", 0, count});
    else
      it->walked = count;
  }
  return report;
}

}  // namespace hoptex
