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

#include <vector>

#include "molat/common.hpp"

namespace molat {

// Units: hbar = 1, lengths in 1/k, energies in E_R = hbar^2 k^2 / 2m, time in
// hbar/E_R. So k = 1, m = 1/2 and the kinetic energy is p^2.
namespace units {
inline constexpr double kMass = 0.5;
inline constexpr double kWavenumber = 1.0;
inline constexpr double kRecoilHz = 2000.0;  // E_R/h for the Cs lattice
inline double seconds(double t) { return t / (2.0 * kPi * kRecoilHz); }
inline double hertz(double energy) { return energy * kRecoilHz; }
}  // namespace units

struct LatticeConfig {
  double U0 = 100.0;
  double theta_L = 87.0 * kPi / 180.0;
  double Bx = 184.33;  // Zeeman energies mu_B B in E_R
  double Bz = 0.0;
  double F = 4.0;
  int gyro_sign = -1;  // mu = gyro_sign mu_B F/F

  // Throws ConfigError on F, U0, theta_L or gyro_sign out of range.
  void validate() const;
};

// Zeeman energy components of B_eff; by is always zero in this geometry.
struct FieldVector {
  double bx = 0.0, by = 0.0, bz = 0.0;
  double norm() const;
  Vec3 vec() const { return {bx, by, bz}; }
};

double scalar_potential(double z, const LatticeConfig& cfg);
double scalar_potential_dz(double z, const LatticeConfig& cfg);
FieldVector effective_field(double z, const LatticeConfig& cfg);
// d b_z / dz; bx is uniform.
double effective_field_dz(double z, const LatticeConfig& cfg);

// U(z) = U_J I - mu.B_eff with mu = gyro_sign F/F.
Eigen::MatrixXcd potential_matrix(double z, const LatticeConfig& cfg);

// U_J + (M/F)|B_eff| for M = -F..F, ascending.
std::vector<double> adiabatic_potentials(double z, const LatticeConfig& cfg);

// Lowest surface U_J - |B_eff| and the surface with moment at fixed angle
// alpha from the field, U_J - |B_eff| cos(alpha). alpha = 0 is the lowest.
double lowest_surface(double z, const LatticeConfig& cfg);
double alpha_surface(double z, double alpha, const LatticeConfig& cfg);

// Double-well landmarks of the lowest surface inside the cell [0, pi]. The
// inner barrier sits at z = pi/2, the outer one at z = 0 (mod pi).
struct DoubleWell {
  double z_left_min, z_right_min;
  double v_min;
  double inner_barrier, outer_barrier;
  double omega_left;  // harmonic frequency sqrt(2 V'') at the left minimum
  double zg_left;     // ground-state rms width sqrt(1/(2 m omega))
  bool is_double_well;
};
DoubleWell analyze_double_well(const LatticeConfig& cfg);

}  // namespace molat
