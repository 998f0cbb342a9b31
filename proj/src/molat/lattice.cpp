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

#include "molat/lattice.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/minima.hpp>

#include "molat/spin.hpp"

namespace molat {

void LatticeConfig::validate() const {
  if (!valid_spin(F)) throw ConfigError("lattice.F: need F >= 1/2 with 2F an integer");
  if (!(U0 > 0.0) || !std::isfinite(U0)) throw ConfigError("lattice.U0: must be positive");
  if (!(theta_L > 0.0 && theta_L < kPi)) throw ConfigError("lattice.theta_L: must lie in (0, pi) radians");
  if (gyro_sign != 1 && gyro_sign != -1) throw ConfigError("lattice.gyro_sign: must be +1 or -1");
  if (!std::isfinite(Bx) || !std::isfinite(Bz)) throw ConfigError("lattice.Bx/Bz: must be finite");
}

double FieldVector::norm() const { return std::sqrt(bx * bx + by * by + bz * bz); }

double scalar_potential(double z, const LatticeConfig& cfg) {
  return 2.0 * cfg.U0 * std::cos(cfg.theta_L) * std::cos(2.0 * z);
}

double scalar_potential_dz(double z, const LatticeConfig& cfg) {
  return -4.0 * cfg.U0 * std::cos(cfg.theta_L) * std::sin(2.0 * z);
}

FieldVector effective_field(double z, const LatticeConfig& cfg) {
  return {cfg.Bx, 0.0, -cfg.U0 * std::sin(cfg.theta_L) * std::sin(2.0 * z) + cfg.Bz};
}

double effective_field_dz(double z, const LatticeConfig& cfg) {
  return -2.0 * cfg.U0 * std::sin(cfg.theta_L) * std::cos(2.0 * z);
}

Eigen::MatrixXcd potential_matrix(double z, const LatticeConfig& cfg) {
  const auto S = spin_matrices(cfg.F);
  const FieldVector b = effective_field(z, cfg);
  const double c = -cfg.gyro_sign / cfg.F;
  Eigen::MatrixXcd U = c * (b.bx * S->Fx + b.bz * S->Fz);
  U.diagonal().array() += scalar_potential(z, cfg);
  return U;
}

std::vector<double> adiabatic_potentials(double z, const LatticeConfig& cfg) {
  const int d = static_cast<int>(std::lround(2.0 * cfg.F)) + 1;
  const double uj = scalar_potential(z, cfg), bn = effective_field(z, cfg).norm();
  std::vector<double> out(d);
  for (int i = 0; i < d; ++i) out[i] = uj + ((-cfg.F + i) / cfg.F) * bn;
  return out;
}

double lowest_surface(double z, const LatticeConfig& cfg) {
  return scalar_potential(z, cfg) - effective_field(z, cfg).norm();
}

double alpha_surface(double z, double alpha, const LatticeConfig& cfg) {
  return scalar_potential(z, cfg) - effective_field(z, cfg).norm() * std::cos(alpha);
}

DoubleWell analyze_double_well(const LatticeConfig& cfg) {
  DoubleWell w{};
  auto V = [&](double z) { return lowest_surface(z, cfg); };
  const int bits = 52;
  auto [zl, vl] = boost::math::tools::brent_find_minima(V, 0.0, 0.5 * kPi, bits);
  auto [zr, vr] = boost::math::tools::brent_find_minima(V, 0.5 * kPi, kPi, bits);
  w.z_left_min = zl;
  w.z_right_min = zr;
  w.v_min = std::min(vl, vr);
  w.inner_barrier = V(0.5 * kPi);
  w.outer_barrier = V(0.0);
  w.is_double_well = w.inner_barrier > vl + 1e-9 && w.inner_barrier > vr + 1e-9 && zl > 1e-6 &&
                     zl < 0.5 * kPi - 1e-6;
  const double h = 1e-4;
  const double curv = (V(zl + h) - 2.0 * V(zl) + V(zl - h)) / (h * h);
  w.omega_left = std::sqrt(std::max(curv, 0.0) / units::kMass);
  w.zg_left = w.omega_left > 0 ? std::sqrt(1.0 / (2.0 * units::kMass * w.omega_left)) : 0.0;
  return w;
}

}  // namespace molat
