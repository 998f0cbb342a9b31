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

#include <functional>
#include <optional>
#include <vector>

#include "molat/lattice.hpp"

namespace molat {

// Phase-space point; n is the unit magnetic-moment direction mu/|mu|.
struct ClassicalState {
  double z = 0.0, p = 0.0;
  Vec3 n = Vec3::UnitZ();
};

struct StateDerivative {
  double dz, dp;
  Vec3 dn;
};

// H = p^2 + U_J(z) - n.B_eff(z)  (|mu| = mu_B, fields are Zeeman energies)
double energy(const ClassicalState& s, const LatticeConfig& cfg);
StateDerivative derivatives(const ClassicalState& s, const LatticeConfig& cfg);

enum class Integrator { kStrang, kYoshida4, kDormandPrince };

// Fixed-step propagator. The split methods are time-symmetric and keep |n|
// exact; Dormand-Prince is an adaptive cross-check that does not.
class ClassicalStepper {
 public:
  ClassicalStepper(const LatticeConfig& cfg, Integrator method = Integrator::kYoshida4);
  void step(ClassicalState& s, double dt) const;
  const LatticeConfig& config() const { return cfg_; }

 private:
  void strang(ClassicalState& s, double dt) const;
  void dormand_prince(ClassicalState& s, double dt) const;
  LatticeConfig cfg_;
  Integrator method_;
  double precession_coeff_;  // gyro_sign / F
};

// Samples every dt from t = 0 to t_final inclusive. Throws NumericalError on
// a non-finite state.
std::vector<ClassicalState> integrate(const ClassicalState& s0, const LatticeConfig& cfg, double dt,
                                      double t_final, Integrator method = Integrator::kYoshida4);

struct SectionPoint {
  double nz, phi;
  int seed_index;
};

struct PoincareSection {
  double energy = 0.0;
  std::vector<SectionPoint> points;
};

struct SectionOptions {
  int n_crossings = 200;
  double dt = 0.002;
  double max_time = 0.0;  // 0: 40 mean periods per crossing budget
  Integrator method = Integrator::kYoshida4;
};

// Crossings p = 0 with dp/dt > 0, located by Henon's trick (integrate in p
// to p = 0). One list per seed, merged in seed order.
PoincareSection poincare_section(const std::vector<ClassicalState>& seeds, const LatticeConfig& cfg,
                                 const SectionOptions& opt, int threads = 1);

// Puts a seed with direction (n_z, phi) at p = 0 on the energy shell, at the
// left turning point of the cell [0, pi]. Empty if the shell misses.
std::optional<ClassicalState> seed_on_shell(double nz, double phi, double E, const LatticeConfig& cfg);

double azimuth(const Vec3& n);

// K(kappa) = int_0^{pi/2} dt / sqrt(1 - kappa^2 sin^2 t) by the AGM.
// Throws ConfigError for kappa outside [0, 1 - 1e-12].
double elliptic_K(double kappa);

struct PendulumActionAngle {
  double C, D, kappa, K, omega0, omega1, omega2;
};

// B_x = 0 pendulum H0 = p^2 + C cos(2z - D) with energy E. Throws ConfigError
// outside the libration range.
PendulumActionAngle pendulum_analysis(double nz, double E, const LatticeConfig& cfg);

struct AdiabaticFrequencies {
  double action;          // (1/2pi) closed-orbit integral of p dz
  double omega1, omega2;  // motional and mean precession frequency
  double z_left, z_right;
  double period;
};

// Motion on V_alpha = U_J - |B| cos(alpha). The orbit is the one through
// z_hint (default: the left minimum of the surface in [0, pi]).
AdiabaticFrequencies adiabatic_analysis(double alpha, double E, const LatticeConfig& cfg,
                                        std::optional<double> z_hint = std::nullopt);

struct LyapunovResult {
  double exponent;
  double renorm_interval;
  std::vector<double> times, history;
};

struct LyapunovOptions {
  double dt = 0.002;
  double renorm_interval = 0.0;  // 0: one harmonic period 2 pi / reference_frequency
  double offset = 1e-8;
  Vec3 offset_direction{1.0, 1.0, 0.0};  // weights on (z, p, n-rotation)
  Integrator method = Integrator::kYoshida4;
};

LyapunovResult max_lyapunov(const ClassicalState& s0, const LatticeConfig& cfg, double t_final,
                            const LyapunovOptions& opt = {});

// Harmonic frequency of the lowest surface at its minimum, falling back to
// the Larmor rate |B|/F when the lattice is off.
double reference_frequency(const LatticeConfig& cfg);

}  // namespace molat
