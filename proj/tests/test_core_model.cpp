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

// Lattice potentials, fictitious field and spin matrices.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "molat/lattice.hpp"
#include "molat/rng.hpp"
#include "molat/spin.hpp"

using namespace molat;

namespace {

LatticeConfig bare(double U0, double theta, double Bx = 0.0, double Bz = 0.0, double F = 4.0) {
  LatticeConfig c;
  c.U0 = U0;
  c.theta_L = theta;
  c.Bx = Bx;
  c.Bz = Bz;
  c.F = F;
  return c;
}

}  // namespace

TEST_CASE("scalar potential at the tabulated points") {
  const auto c = bare(1.0, kPi / 3);
  CHECK(scalar_potential(0.0, c) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(scalar_potential(kPi / 4, c)) < 1e-15);
  const auto perp = bare(3.0, kPi / 2);
  for (double z : {0.0, 0.3, 1.7, -2.2}) CHECK(std::abs(scalar_potential(z, perp)) < 1e-15);
}

TEST_CASE("effective field components") {
  const auto c = bare(5.0, 1.1, 0.7, -0.3);
  const auto f0 = effective_field(0.0, c);
  CHECK(f0.bx == 0.7);
  CHECK(f0.by == 0.0);
  CHECK(f0.bz == doctest::Approx(-0.3).epsilon(1e-15));

  const auto extremal = effective_field(kPi / 4, bare(5.0, 1.1, 0.7));
  CHECK(extremal.bz == doctest::Approx(-5.0 * std::sin(1.1)).epsilon(1e-15));

  const auto f = effective_field(kPi / 12, bare(1.0, kPi / 2));
  CHECK(std::abs(f.bx) < 1e-15);
  CHECK(f.bz == doctest::Approx(-0.5).epsilon(1e-14));

  // Theta -> 0 switches the fictitious field off.
  for (double z : {0.1, 0.9, 2.5}) CHECK(std::abs(effective_field(z, bare(4.0, 1e-300)).bz) < 1e-290);
}

TEST_CASE("effective field derivative against central differences") {
  const LatticeConfig c;
  const double h = 1e-5;
  for (double z : {0.1, 0.7, 1.3, 2.9}) {
    const double fd = (effective_field(z + h, c).bz - effective_field(z - h, c).bz) / (2 * h);
    CHECK(effective_field_dz(z, c) == doctest::Approx(fd).epsilon(1e-8));
    const double fs = (scalar_potential(z + h, c) - scalar_potential(z - h, c)) / (2 * h);
    CHECK(scalar_potential_dz(z, c) == doctest::Approx(fs).epsilon(1e-8));
  }
}

TEST_CASE("spin matrices") {
  const auto s = spin_matrices(0.5);
  CHECK(s->dim == 2);
  CHECK(std::abs(s->Fz(0, 0) - 0.5) < 1e-15);
  CHECK(std::abs(s->Fz(1, 1) + 0.5) < 1e-15);
  CHECK(std::abs(s->Fz(0, 1)) == 0.0);

  const auto s1 = spin_matrices(1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(s1->Fx);
  CHECK(es.eigenvalues()(0) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(std::abs(es.eigenvalues()(1)) < 1e-14);
  CHECK(es.eigenvalues()(2) == doctest::Approx(1.0).epsilon(1e-14));

  const auto s4 = spin_matrices(4.0);
  CHECK((s4->Fz * s4->Fz).trace().real() == doctest::Approx(60.0).epsilon(1e-14));

  // [Fx, Fy] = i Fz and the Casimir.
  for (double F : {0.5, 1.5, 4.0, 12.0}) {
    const auto S = spin_matrices(F);
    const Eigen::MatrixXcd comm = S->Fx * S->Fy - S->Fy * S->Fx - kI * S->Fz;
    CHECK(comm.norm() < 1e-12 * (F + 1) * (F + 1));
    const Eigen::MatrixXcd cas = S->Fx * S->Fx + S->Fy * S->Fy + S->Fz * S->Fz;
    CHECK((cas - F * (F + 1) * Eigen::MatrixXcd::Identity(S->dim, S->dim)).norm() < 1e-11 * F * F);
  }
  CHECK(spin_matrices(4.0).get() == s4.get());  // cached
  CHECK_THROWS_AS(spin_matrices(0.3), ConfigError);
  CHECK_THROWS_AS(spin_matrices(0.0), ConfigError);
}

TEST_CASE("potential matrix without field is scalar") {
  const auto c = bare(2.0, kPi / 3);  // bz vanishes at z = 0 when Bx = Bz = 0
  const Eigen::MatrixXcd U = potential_matrix(0.0, c);
  const Eigen::MatrixXcd expect = scalar_potential(0.0, c) * Eigen::MatrixXcd::Identity(9, 9);
  CHECK((U - expect).norm() < 1e-14);
}

TEST_CASE("spin-1/2 with field along z is diagonal") {
  const auto c = bare(2.0, 0.8, 0.0, 0.6, 0.5);
  const double z = 0.37;
  const Eigen::MatrixXcd U = potential_matrix(z, c);
  const double bz = effective_field(z, c).bz;
  CHECK(std::abs(U(0, 1)) < 1e-15);
  // gyro_sign = -1: the m = +1/2 state has moment against B
  const double uj = scalar_potential(z, c);
  CHECK(U(0, 0).real() == doctest::Approx(uj + 0.5 * bz / 0.5).epsilon(1e-14));
  CHECK(U(1, 1).real() == doctest::Approx(uj - 0.5 * bz / 0.5).epsilon(1e-14));
}

TEST_CASE("potential matrix spectrum equals the adiabatic potentials") {
  const LatticeConfig c;
  SplitMix64 rng(11);
  double worst_herm = 0.0, worst_eig = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double z = 2 * kPi * rng.uniform() - kPi;
    const Eigen::MatrixXcd U = potential_matrix(z, c);
    worst_herm = std::max(worst_herm, (U - U.adjoint()).cwiseAbs().maxCoeff() / U.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(U);
    const auto a = adiabatic_potentials(z, c);
    REQUIRE(a.size() == 9);
    for (int k = 0; k < 9; ++k)
      worst_eig = std::max(worst_eig, std::abs(es.eigenvalues()(k) - a[k]) / std::max(1.0, std::abs(a[k])));
  }
  CHECK(worst_herm <= 1e-14);
  CHECK(worst_eig <= 1e-12);
}

TEST_CASE("adiabatic potentials structure") {
  const LatticeConfig c;
  for (double z : {0.2, 1.0, 2.4}) {
    const auto a = adiabatic_potentials(z, c);
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(a.front() == doctest::Approx(scalar_potential(z, c) - effective_field(z, c).norm()).epsilon(1e-14));
    CHECK(a.front() == doctest::Approx(lowest_surface(z, c)).epsilon(1e-14));
    CHECK(alpha_surface(z, 0.0, c) == doctest::Approx(lowest_surface(z, c)).epsilon(1e-14));
  }
  // zero field point: every surface equals U_J
  const auto cz = bare(3.0, 0.9);
  const auto a = adiabatic_potentials(0.0, cz);
  for (double v : a) CHECK(v == doctest::Approx(scalar_potential(0.0, cz)).epsilon(1e-14));
}

TEST_CASE("potentials are pi-periodic") {
  const LatticeConfig c;
  for (double z : {0.05, 0.8, 2.0}) {
    const auto a = adiabatic_potentials(z, c);
    const auto b = adiabatic_potentials(z + kPi, c);
    for (int k = 0; k < 9; ++k) CHECK(std::abs(a[k] - b[k]) <= 1e-12 * std::max(1.0, std::abs(a[k])));
    CHECK((potential_matrix(z, c) - potential_matrix(z + kPi, c)).norm() < 1e-11);
  }
}

TEST_CASE("shipped lattice is a double well whose barrier sits just below E = -186.8") {
  const auto dw = analyze_double_well(LatticeConfig{});
  CHECK(dw.is_double_well);
  CHECK(dw.z_left_min < kPi / 2);
  CHECK(dw.z_right_min > kPi / 2);
  CHECK(dw.inner_barrier < -186.8);
  CHECK(dw.inner_barrier > -186.8 - 10.0);
  CHECK(dw.v_min < dw.inner_barrier);
  CHECK(dw.omega_left > 0);
}

TEST_CASE("lattice validation") {
  LatticeConfig c;
  CHECK_NOTHROW(c.validate());
  c.theta_L = 4.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = LatticeConfig{};
  c.F = 1.25;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = LatticeConfig{};
  c.U0 = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = LatticeConfig{};
  c.gyro_sign = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("unit conversion uses E_R/h = 2 kHz") {
  CHECK(units::hertz(1.0) == 2000.0);
  // one tunneling period of splitting dE takes 2 pi / dE in hbar/E_R
  CHECK(units::seconds(2 * kPi) == doctest::Approx(1.0 / 2000.0).epsilon(1e-15));
}
