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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "molat/io.hpp"

namespace molat {

const char* build_id();

struct RunManifest {
  std::string scenario_path;
  nlohmann::json config;  // resolved scenario
  std::uint64_t seed = 0;
  std::string build = build_id();
  std::string rng = "splitmix64";
  std::string started, finished;  // ISO 8601 UTC
  std::vector<OutputFile> files;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

std::string utc_timestamp();

// Writes manifest.json atomically into dir. The manifest lists every file
// recorded by `out` but never itself.
void write_manifest(const std::filesystem::path& dir, const RunManifest& m);

// Re-hashes each inventory entry; returns the names that are missing or differ.
std::vector<std::string> verify_manifest(const std::filesystem::path& dir);

}  // namespace molat
