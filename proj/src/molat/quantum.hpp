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
#include <optional>
#include <vector>

#include "molat/classical.hpp"
#include "molat/lattice.hpp"
#include "molat/propagator.hpp"

namespace molat {

// 512 points over four periods, centered on the double well at z = pi/2 so
// the cell [0, pi) sits in the middle.
Grid default_lattice_grid(int n = 512, int periods = 4);

SpinorPropagator lattice_propagator(const LatticeConfig& cfg, const Grid& grid, double dt);

// One Strang step; builds the propagator each call, so loops should hold a
// lattice_propagator instead.
SpinorWavefunction split_step(const SpinorWavefunction& psi, const LatticeConfig& cfg, double dt);

struct BandStructure {
  std::vector<double> q;
  std::vector<std::vector<double>> energies;  // [iq][band], ascending
  std::vector<Eigen::MatrixXcd> vectors;      // [iq] columns = bands, rows = (j, m) with m fastest
  int n_plane_waves = 0;
  int dim = 0;
};

// Plane wave e^{i(q + 2j)z} times spin m. n_plane_waves = 0 picks a size from
// the depth and grows it until the basis check passes. Throws NumericalError
// when the top plane waves carry more than 1e-8 of a requested band.
BandStructure band_structure(const LatticeConfig& cfg, int n_plane_waves, const std::vector<double>& q_list,
                             int n_bands, bool keep_vectors = false);

std::vector<double> brillouin_zone(int n_q);  // n_q points in [-1, 1)

// Bloch vector (column of BandStructure::vectors) sampled on the grid.
SpinorWavefunction bloch_on_grid(const Eigen::VectorXcd& c, double q, int n_plane_waves, double F,
                                 const Grid& grid);

struct LeftLocalized {
  SpinorWavefunction psi;
  double E0, E1, E2;  // q = 0 levels
  double splitting;   // E1 - E0
  double left_population;
};

// (|0> + e^{i chi}|1>)/sqrt 2 of the q = 0 doublet, restricted to the cell
// [0, pi) and renormalized; chi maximizes <F_z>, which puts the packet in the
// left well. Throws NumericalError if the two lowest levels are not a doublet.
LeftLocalized prepare_left_localized(const LatticeConfig& cfg, const Grid& grid = default_lattice_grid());

// <E1(q) - E0(q)> over n_q quasimomenta. A packet confined to one cell mixes
// all q, so this (not the q = 0 gap) sets its tunneling frequency.
double zone_averaged_splitting(const LatticeConfig& cfg, int n_q = 64);

// Population of z in [0, pi/2) modulo pi (the left well of each cell).
double left_well_population(const SpinorWavefunction& w);

struct MagnetizationSeries {
  std::vector<double> t, Fz;
};

MagnetizationSeries magnetization_series(const SpinorWavefunction& psi0, const LatticeConfig& cfg, double dt,
                                         double t_final, int sample_every = 1);

// Least-squares fit y ~ a + b cos(w t) + c sin(w t), w refined from the
// periodogram peak. residual = rms misfit / rms(y - mean).
struct SinusoidFit {
  double omega, offset, amplitude, phase, residual;
};
SinusoidFit fit_sinusoid(const std::vector<double>& t, const std::vector<double>& y, double omega_lo,
                         double omega_hi);

// Projection on the local adiabatic basis. Surface s = 0 is the lowest.
struct AdiabaticDecomposition {
  std::vector<double> population;   // per surface, sums to 1
  std::vector<double> mean_energy;  // Re <P_s psi|H|psi> / n_s
  std::vector<double> barrier;      // inner barrier of each surface
  double total_energy;
};
AdiabaticDecomposition adiabatic_decomposition(const SpinorWavefunction& w, const LatticeConfig& cfg);

// --- Husimi Q ---------------------------------------------------------------

// Q(z0, p0, theta, phi) = (2F+1)/(4 pi) |<z0,p0; theta,phi|psi>|^2 / (2 pi) on
// grid points z0, FFT momenta p0 with |p0| <= p_max, and a Gauss-Legendre (cos
// theta) x uniform phi spin grid. The motional amplitudes A_m(z0, p0) are kept
// and the spin dependence evaluated on demand.
struct PhaseSpaceGrid {
  double zg = 0.0;       // coherent-state width; 0 picks the left-well value
  int z_stride = 2;      // use every z_stride-th grid point as z0
  double p_max = 40.0;
  int n_theta = 0;       // 0: 2F+1
  int n_phi = 0;         // 0: 2(2F+1)
};

struct HusimiQ {
  double F = 0.5, zg = 0.0, dz0 = 0.0, dp0 = 0.0;
  std::vector<double> z0, p0;
  std::vector<double> cos_theta, w_theta, phi;  // spin quadrature
  Eigen::MatrixXcd A;  // rows: iz * p0.size() + ip, cols: m
  double norm = 1.0;   // divides every value so the domain integral is 1

  double value(int iz, int ip, double theta, double phi_) const;
  Eigen::MatrixXd reduced_zp() const;  // spin-marginal Q(z0, p0)
  std::vector<double> reduced_z() const;
  double integral() const;  // over the full 4-d grid with quadrature weights
  double spin_measure() const { return 4.0 * kPi; }
};

HusimiQ husimi_q(const SpinorWavefunction& w, const LatticeConfig& cfg, const PhaseSpaceGrid& g = {});

// (z, p, n) draws by rejection: cell from the (z0, p0) marginal, uniform
// jitter inside the cell, then the spin direction from |<Omega|A>|^2. The
// moment direction is n = gyro_sign * (F direction).
std::vector<ClassicalState> sample_husimi(const HusimiQ& q, int n_samples, std::uint64_t seed, int gyro_sign,
                                          double* acceptance = nullptr);

}  // namespace molat
