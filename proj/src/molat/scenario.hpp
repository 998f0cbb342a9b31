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

#include "molat/lattice.hpp"
#include "molat/measurement.hpp"

namespace molat {

inline constexpr int kSchemaVersion = 1;

enum class ScenarioKind { kSection, kTransport, kMeasure, kBands, kLyapunov };
const char* to_string(ScenarioKind k);

struct SectionParams {
  double energy = -186.8;
  std::vector<double> energy_sweep;  // extra energies for the island-count trend
  int n_nz = 48;                     // seeds n_z uniform in [-0.98, 0.98]
  int n_phi = 4;                     // times phi = 2 pi j / n_phi
  int n_crossings = 200;
  double dt = 0.002;
};

struct TransportParams {
  int grid_n = 512;
  int periods = 4;
  double dt = 0.002;
  double t_final = 0.0;  // 0: two tunneling periods, 2 pi / zone-averaged splitting each
  int sample_every = 5;
  int n_samples = 2000;  // classical Husimi ensemble
  int n_snapshots = 8;
};

struct MeasureParams {
  std::vector<double> J_list{0.5, 2.0, 10.0, 50.0, 200.0};
  int n_seeds = 20;
  double action = 1000.0;  // initial oscillator action I; z0 = sqrt(2 I / m w)
  double periods = 2.0;
  int sample_every = 10;
  int split_seeds = 200;  // J = 1/2 packets started at the origin
  double split_periods = 1.0;
  // Gaussian-closure check against an SSE ensemble (0 trajectories: skip)
  double riccati_J = 200.0;
  int riccati_trajectories = 0;
  double riccati_t_final = 2.0;
  int riccati_checkpoints = 10;
};

struct BandsParams {
  int n_q = 64;
  int n_bands = 6;
  int n_plane_waves = 0;  // 0: automatic
};

struct LyapunovParams {
  // Chaotic seed: direction (n_z, phi) placed on the shell at `energy`.
  double energy = -186.8;
  double nz = -0.6, phi = 0.0;
  double t_final = 1000.0;
  double dt = 0.002;
  std::vector<double> windows{0.5, 1.0, 2.0};  // renormalization intervals in units of 2 pi / w0
  bool integrable_check = true;  // also run the Bx = 0 comparison
};

struct Scenario {
  int schema_version = kSchemaVersion;
  std::string name;
  ScenarioKind kind = ScenarioKind::kSection;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out_dir;  // root for run directories; empty: env / default
  LatticeConfig lattice;
  MeasurementConfig measurement;
  SectionParams section;
  TransportParams transport;
  MeasureParams measure;
  BandsParams bands;
  LyapunovParams lyapunov;

  // Canonical JSON with every field explicit (defaults resolved).
  nlohmann::json to_json() const;
  // First 12 hex digits of sha256(to_json() without seed, threads, out_dir).
  std::string config_hash() const;
};

// Field-level validation. Errors name the JSON path, e.g. "lattice.F: required".
// Throws ConfigError.
Scenario scenario_from_json(const nlohmann::json& j);
Scenario parse_config(const std::filesystem::path& path);

// Dotted-path override ("lattice.U0" = "50") applied to the JSON before
// validation, so overrides get the same checks as file values.
void apply_override(nlohmann::json& j, const std::string& path, const std::string& value);

// Root for run directories: explicit, then $MOLAT_OUT_ROOT, then "molat-runs".
std::filesystem::path output_root(const std::string& explicit_root);
std::filesystem::path run_directory(const Scenario& s, const std::string& explicit_root);

}  // namespace molat
