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

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "molat/classical.hpp"
#include "molat/io.hpp"
#include "molat/measurement.hpp"
#include "molat/quantum.hpp"
#include "molat/scenario.hpp"

namespace molat {

// --- section scan -----------------------------------------------------------

// Seeds with n_z uniform in [-0.98, 0.98] and phi = 2 pi j / n_phi, each put
// on the energy shell; directions whose shell misses the cell are skipped.
std::vector<ClassicalState> section_seeds(double E, const LatticeConfig& cfg, int n_nz, int n_phi);

struct Island {
  double nz, phi;  // mean of the points around the density peak
  int count;       // points in the peak bin
};

// Grid-density clustering: histogram the section in bins of 0.05 in n_z and
// pi/32 in phi (periodic). A bin is a peak when it holds at least
// max(8, 4 x mean occupied-bin count) points and no neighbor holds more;
// peaks within two bins of a larger one merge into it. Thin invariant curves
// spread evenly over phi and stay below the threshold.
std::vector<Island> detect_islands(const PoincareSection& sec);

struct SectionResult {
  PoincareSection section;
  std::vector<Island> islands;
  std::vector<double> sweep_energy;
  std::vector<int> sweep_islands;
};
SectionResult section_scan(const Scenario& s);

// --- transport ----------------------------------------------------------------

struct TransportResult {
  double splitting_q0 = 0.0, splitting_zone = 0.0;
  double left_population = 0.0;
  double period = 0.0;  // 2 pi / splitting_zone
  std::vector<double> t, Fz_quantum, Fz_classical, classical_right;
  SinusoidFit fit{};
  bool quantum_crosses_zero = false;
  bool classical_keeps_sign = false;  // over the first tunneling period
  double husimi_acceptance = 0.0;
  // Reduced Husimi Q(z, t) of the quantum state.
  std::vector<double> snapshot_t, q_z;
  std::vector<std::vector<double>> q_snapshots;
  std::vector<AdiabaticDecomposition> surfaces;  // at each snapshot time
  SpinorWavefunction final_state;
};
TransportResult transport_compare(const Scenario& s);

struct TunnelingReport {
  std::vector<double> population, mean_energy, barrier;
  double population_sum;
  bool lowest_above_barrier;   // lowest surface energy over its barrier
  bool second_forbidden;       // second surface energy under its barrier
};
TunnelingReport tunneling_diagnostic(const SpinorWavefunction& w, const LatticeConfig& cfg);

// --- measured sweep -----------------------------------------------------------

// Time average of |<z>_q - z_cl| / amplitude over the common samples.
double classicality_metric(const MeasuredTrajectory& q, const std::vector<ClassicalMeasuredPoint>& cl,
                           double amplitude);

// Per-trajectory seed: stream `index` of the master seed. Index i is shared
// across J so the sweep uses common random numbers.
std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index);

struct SweepPoint {
  double J;
  std::vector<double> metric;  // per seed
  double mean, se;
  std::vector<double> mean_populations;  // final m_z populations, m = J..-J
  MeasuredTrajectory example;            // seed index 0
  std::vector<ClassicalMeasuredPoint> classical;
};

struct SplitResult {
  int left = 0, right = 0;
  std::vector<double> final_z;  // per seed, <z> averaged over the last period
  double delta_z = 0.0;
  double sigma_from_even = 0.0;  // (left - n/2) / sqrt(n/4)
};

struct RiccatiValidation {
  double J = 0.0;
  int trajectories = 0;
  std::vector<double> t;
  // entries: Vz, Czp, CzJz, Vp, CpJz, VJz
  static constexpr std::array<const char*, 6> kNames{"Vz", "Czp", "CzJz", "Vp", "CpJz", "VJz"};
  std::vector<std::array<double, 6>> riccati, mean, se, dt_bias, zscore;
  double worst_z = 0.0;
};

struct MeasuredSweepResult {
  std::vector<SweepPoint> points;
  int violations = 0;  // adjacent increases larger than 1 sigma
  SplitResult split;
  bool has_riccati = false;
  RiccatiValidation riccati;
};

std::vector<SweepPoint> measured_sweep(const MeasurementConfig& base, const MeasureParams& p, std::uint64_t seed,
                                       int threads);
SplitResult split_test(const MeasurementConfig& base, int n_seeds, double periods, std::uint64_t seed, int threads);

// Ensemble of SSE trajectories from an x-polarized packet at the origin, run
// at dt and dt/2 on the same Brownian paths. z-scores use
// sigma = sqrt(se^2 + bias^2) with bias = |mean(dt) - mean(dt/2)| / 3 the
// residual step-size error of the dt/2 mean.
RiccatiValidation riccati_validation(const MeasurementConfig& base, double J, int trajectories, double t_final,
                                     int checkpoints, std::uint64_t seed, int threads);

// Adjacent violations: metric[i+1] - metric[i] > sqrt(se_i^2 + se_{i+1}^2).
int monotonicity_violations(const std::vector<SweepPoint>& pts);

// --- Lyapunov ---------------------------------------------------------------------

struct LyapunovReport {
  double omega0 = 0.0;
  ClassicalState seed;
  std::vector<double> windows, exponents;  // chaotic seed, per renormalization window
  double spread = 0.0;                     // (max - min) / mean over windows
  bool has_integrable = false;
  double integrable_exponent = 0.0;  // Bx = 0, in units of omega0
  std::vector<LyapunovResult> runs;
};
LyapunovReport lyapunov_scan(const Scenario& s);

// --- bands --------------------------------------------------------------------------

Table bands_table(const LatticeConfig& cfg, const BandsParams& p);

// --- orchestration -------------------------------------------------------------------

// Runs the scenario, writes CSV / SVG / JSON outputs and manifest.json into
// run_directory(s, out_root), and returns that directory.
std::filesystem::path run_scenario(const Scenario& s, const std::string& scenario_path,
                                   const std::string& out_root);

}  // namespace molat
