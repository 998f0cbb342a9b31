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
#include <limits>
#include <vector>

#include "molat/propagator.hpp"

namespace molat {

// Single-site model H = p^2/2m + m w^2 z^2/2 + b z J_z/J + c J_x/J under
// continuous position measurement of strength k. hbar = 1; the defaults use
// m = w = 1 so lengths are in units of sqrt(2) z_g.
//
// With b = m w^2 dz the spin-M component sees a well centered at
// z_M = -(M/J) dz, so spin up sits at -dz.
struct MeasurementConfig {
  double omega = 1.0;
  double mass = 1.0;
  double J = 0.5;
  // NaN means "derive": delta_z = 15 z_g, b = m w^2 delta_z, k = w / (2 z_g^2)
  double delta_z = std::numeric_limits<double>::quiet_NaN();
  double b = std::numeric_limits<double>::quiet_NaN();
  double c = 0.0;
  double k = std::numeric_limits<double>::quiet_NaN();
  double dt = 0.01;
  std::uint64_t seed = 0;

  double zg() const;  // sqrt(1 / (2 m w))
  // Copy with the NaN fields derived.
  MeasurementConfig resolved() const;
  void validate() const;
};

MeasurementConfig default_measurement(double J);

// Motional coherent state of width z_g at (z0, p0) times the spin coherent
// state along (theta, phi). theta = pi/2, phi = 0 is the x direction.
struct MeasuredInitial {
  double z0 = 0.0, p0 = 0.0;
  double theta = kPi / 2, phi = 0.0;
};

// Periodic grid wide enough for every displaced well along the classical
// orbit: half-width amplitude + 2 dz + 12 z_g, N the smallest power of two
// whose Nyquist momentum covers the orbit plus 12 conditioned widths.
Grid measurement_grid(const MeasurementConfig& cfg, const MeasuredInitial& init, int min_n = 64);

SpinorWavefunction measured_initial_state(const MeasurementConfig& cfg, const MeasuredInitial& init,
                                          const Grid& grid);

// Propagator for the model Hamiltonian. Throws ConfigError when the grid does
// not contain the displaced wells +-dz with a 6 z_g margin.
SpinorPropagator hamiltonian_eq6(const MeasurementConfig& cfg, const Grid& grid);

enum class SseScheme {
  kExponential,    // exact measurement factor for frozen <z> (default)
  kMilstein,       // polynomial strong order 1
  kEulerMaruyama,  // strong order 1/2, kept to show the order gap
};

struct SseIncrement {
  double dW, record;  // record = <z> dt + dW / sqrt(8k)
};

// One step of the linear SSE d psi~ = {-iH dt - k z^2 dt + (4k<z>dt +
// sqrt(2k) dW) z} psi. The position-diagonal parts (potential and the
// measurement factor, which commute) sit between two half kinetic steps, so
// the deterministic splitting error is second order. <z> is taken at the
// midpoint. Throws NumericalError if the unnormalized norm falls below 1e-300.
//
// Long runs use open / advance / close: consecutive half kinetic steps fuse,
// and between advance() calls the state sits half a kinetic step past the
// step boundary. boundary() gives the state at the boundary.
class SseStepper {
 public:
  SseStepper(const MeasurementConfig& cfg, const Grid& grid, SseScheme scheme = SseScheme::kExponential);
  SseIncrement step(SpinorWavefunction& w, double dW);

  void open(SpinorWavefunction& w) const { prop_.kinetic_step(w, 0.5); }
  SseIncrement advance(SpinorWavefunction& w, double dW);
  void close(SpinorWavefunction& w) const { prop_.kinetic_step(w, -0.5); }
  SpinorWavefunction boundary(const SpinorWavefunction& w) const;

  // Zeroes spin components with population below the threshold and stops
  // propagating them. Only valid when c = 0 (components never mix).
  void prune(SpinorWavefunction& w, double threshold);
  const MeasurementConfig& config() const { return cfg_; }
  const SpinorPropagator& propagator() const { return prop_; }

 private:
  SseIncrement measure_and_potential(SpinorWavefunction& w, double dW);
  MeasurementConfig cfg_;
  SpinorPropagator prop_;
  SseScheme scheme_;
  std::vector<char> active_;
};

// Conditioned moments of a spinor in the basis {z, p, J_z}.
struct Moments {
  double z, p, Jz, Jx, Jy;
  Eigen::Matrix3d C;  // symmetrized covariances over {z, p, J_z}
};
Moments moments(const SpinorWavefunction& w);

struct MeasuredTrajectory {
  std::vector<double> t, z, p, Jz, Jx, Vz, Vp, VJz, Czp, CzJz, CpJz, record, dW;
  std::vector<double> final_populations;  // per spin component, m = J..-J
};

struct TrajectoryOptions {
  double t_final = 2.0 * kPi;
  int sample_every = 1;
  SseScheme scheme = SseScheme::kExponential;
  double prune_threshold = 1e-30;  // ignored when c != 0
  int prune_every = 10;
};

// Iterates SseStepper with dW drawn from SplitMix64(cfg.seed). Deterministic
// given the seed.
MeasuredTrajectory run_trajectory(const SpinorWavefunction& psi0, const MeasurementConfig& cfg,
                                  const TrajectoryOptions& opt = {});

// Same, driven by a given Wiener-increment path (one entry per step, each
// ~ N(0, dt)). Used for fixed-path convergence studies.
MeasuredTrajectory run_trajectory(const SpinorWavefunction& psi0, const MeasurementConfig& cfg,
                                  const TrajectoryOptions& opt, const std::vector<double>& dW_path,
                                  SpinorWavefunction* final_state = nullptr);

// n increments of variance dt from SplitMix64(seed), and the path summed in
// blocks of `factor` (the same Brownian motion on a coarser step).
std::vector<double> brownian_increments(std::uint64_t seed, double dt, long n);
std::vector<double> coarsen(const std::vector<double>& dW, int factor);

// Right-hand sides of the moment equations at psi for a given dW:
//   d<z>  = <p>/m dt + sqrt(8k) C_zz dW
//   d<p>  = -m w^2 <z> dt - (b/J) <J_z> dt + sqrt(8k) C_zp dW
//   d<Jz> = sqrt(8k) C_zJz dW
// jz_drift is the deterministic (c/J)<J_y> dt the full SSE adds to d<Jz>,
// which the closure leaves out.
struct MomentIncrements {
  double dz, dp, dJz;
  double jz_drift;
};
MomentIncrements moment_increments(const SpinorWavefunction& w, const MeasurementConfig& cfg, double dW);

// Classical limit: z' = p/m, p' = -m w^2 z - b n_z, n' = Omega x n with
// Omega = (c/J, 0, b z/J). Fourth-order Runge-Kutta with the spin
// renormalized each step; samples every dt.
struct ClassicalMeasuredPoint {
  double t, z, p;
  Vec3 n;
};
std::vector<ClassicalMeasuredPoint> classical_reference(const MeasurementConfig& cfg, double z0, double p0,
                                                        const Vec3& n0, double t_final, int sample_every = 1);

// --- Gaussian closure ------------------------------------------------------

// Covariance flow C' = alpha + beta C + C beta^T + C gamma C over {z, p, J_z}
// from the cumulant truncation of the SSE:
//   alpha = diag(0, 2k, 0)                    measurement back-action on p
//   beta  = [[0, 1/m, 0], [-m w^2, 0, -b/J], [0, 0, 0]]
//   gamma = -8k e_z e_z^T                     information gain from the record
// c does not enter: it couples J_z to J_y, which the basis leaves out.
struct RiccatiMatrices {
  Eigen::Matrix3d alpha, beta, gamma;
};
RiccatiMatrices riccati_matrices(const MeasurementConfig& cfg);

struct CovarianceSeries {
  std::vector<double> t;
  std::vector<Eigen::Matrix3d> C;
};

// RK4 with n_sub substeps per output interval. Throws NumericalError when
// the smallest eigenvalue drops below -1e-10 trace.
CovarianceSeries riccati_evolve(const Eigen::Matrix3d& C0, const MeasurementConfig& cfg, double t_final,
                                int n_out, int n_sub = 200);

// Closed form C(t) = (Phi21 + Phi22 C0)(Phi11 + Phi12 C0)^{-1} with
// Phi = exp(t [[-beta^T, -gamma], [alpha, beta]]).
Eigen::Matrix3d riccati_analytic(const Eigen::Matrix3d& C0, const MeasurementConfig& cfg, double t);

// Steady conditioned variances of the measured oscillator (b = 0 block).
struct OscillatorFixedPoint {
  double Vz, Czp, Vp;
};
OscillatorFixedPoint measured_oscillator_fixed_point(double mass, double omega, double k);

// Initial covariance of MeasuredInitial's product state.
Eigen::Matrix3d initial_covariance(const MeasurementConfig& cfg, const MeasuredInitial& init);

bool is_psd(const Eigen::Matrix3d& C, double rel_tol = 1e-10);

}  // namespace molat
