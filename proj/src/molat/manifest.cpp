// Copyright 2025 Qilimanjaro Quantum Tech
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

#include "molat/manifest.hpp"

#include <chrono>
#include <ctime>

#include "molat/common.hpp"

#ifndef MOLAT_BUILD_ID
#define MOLAT_BUILD_ID "molat-unknown"
#endif

namespace molat {

using nlohmann::json;

const char* build_id() { return MOLAT_BUILD_ID; }

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json RunManifest::to_json() const {
  json files_j = json::array();
  for (const auto& f : files) files_j.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  return {{"scenario_path", scenario_path}, {"config", config}, {"seed", seed},   {"build_id", build},
          {"rng", rng},                     {"started", started}, {"finished", finished}, {"files", files_j}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  try {
    m.scenario_path = j.at("scenario_path").get<std::string>();
    m.config = j.at("config");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.build = j.at("build_id").get<std::string>();
    m.rng = j.at("rng").get<std::string>();
    m.started = j.at("started").get<std::string>();
    m.finished = j.at("finished").get<std::string>();
    for (const auto& f : j.at("files"))
      m.files.push_back({f.at("name").get<std::string>(), f.at("sha256").get<std::string>(),
                         f.at("bytes").get<std::uintmax_t>()});
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

void write_manifest(const std::filesystem::path& dir, const RunManifest& m) {
  write_file_atomic(dir / "manifest.json", m.to_json().dump(2) + "\n");
}

std::vector<std::string> verify_manifest(const std::filesystem::path& dir) {
  json j;
  try {
    j = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::parse_error& e) {
    throw IoError(std::string("manifest.json: ") + e.what());
  }
  std::vector<std::string> bad;
  for (const auto& f : RunManifest::from_json(j).files) {
    std::error_code ec;
    if (!std::filesystem::exists(dir / f.name, ec) || sha256_file(dir / f.name) != f.sha256) bad.push_back(f.name);
  }
  return bad;
}

}  // namespace molat
