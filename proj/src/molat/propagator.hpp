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

#include <memory>
#include <vector>

#include "molat/common.hpp"
#include "molat/spin.hpp"

namespace molat {

// N equally spaced periodic points z_j = z0 + j dz.
struct Grid {
  int n = 512;
  double z0 = 0.0;
  double length = 4.0 * kPi;

  double dz() const { return length / n; }
  double z(int j) const { return z0 + j * dz(); }
  // FFT ordering: 0, 1, ..., n/2-1, -n/2, ..., -1 times 2 pi / L
  double p(int j) const;
  double dp() const { return 2.0 * kPi / length; }
  bool power_of_two() const { return n > 0 && (n & (n - 1)) == 0; }
};

// (2F+1)-component field, one column per spin component m = F..-F.
// Norm convention sum |psi|^2 dz = 1.
struct SpinorWavefunction {
  Grid grid;
  double F = 0.5;
  Eigen::MatrixXcd psi;  // n x (2F+1), column-major so each component is contiguous

  SpinorWavefunction() = default;
  SpinorWavefunction(const Grid& g, double spin);
  int dim() const { return static_cast<int>(psi.cols()); }
  double norm() const;
  void normalize();
  std::vector<double> populations() const;  // per m
  double expect_Fz() const;
  double expect_z() const;  // plain (non-periodic) first moment on the grid
  Eigen::VectorXd density() const;  // sum over m of |psi|^2
};

// Thin RAII wrapper around FFTW batched in-place transforms of all columns.
class FftPlan {
 public:
  FftPlan(int n, int howmany);
  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  void forward(cplx* data, int columns) const;   // unnormalized
  void backward(cplx* data, int columns) const;  // includes 1/n
  void forward_column(cplx* data) const;
  void backward_column(cplx* data) const;
  int n() const { return n_; }

 private:
  int n_, howmany_;
  void* fwd_ = nullptr;
  void* bwd_ = nullptr;
  void* fwd1_ = nullptr;
  void* bwd1_ = nullptr;
};

// Potential U(z_j) = s_j I + hx_j S_x + hz_j S_z for spin matrices S of size
// 2F+1, kinetic energy kin_coeff p^2. Strang split: half potential, kinetic,
// half potential. The potential exponential is exact: rotate to the local
// field axis with exp(-i beta S_y), apply phases, rotate back.
class SpinorPropagator {
 public:
  SpinorPropagator(const Grid& grid, double F, std::vector<double> scalar, std::vector<double> hx,
                   std::vector<double> hz, double kin_coeff, double dt);

  void step(SpinorWavefunction& w) const;
  // The other Strang ordering: half kinetic, potential, half kinetic.
  void step_kvk(SpinorWavefunction& w) const;
  void potential_step(SpinorWavefunction& w, double fraction) const;  // fraction of dt
  void kinetic_step(SpinorWavefunction& w, double fraction = 1.0) const;  // fraction may be negative
  // Columns that are identically zero stay so under a diagonal potential; the
  // caller may mark them inactive to skip their FFTs.
  void set_active(std::vector<char> active) { active_ = std::move(active); }
  bool diagonal() const { return diagonal_; }
  double dt() const { return dt_; }
  const Grid& grid() const { return grid_; }

  // H psi (kinetic by FFT plus potential), used for energies.
  Eigen::MatrixXcd apply_hamiltonian(const SpinorWavefunction& w) const;

 private:
  void apply_potential_exp(Eigen::MatrixXcd& psi, double tau) const;
  Grid grid_;
  double F_;
  int dim_;
  std::shared_ptr<const SpinMatrices> S_;
  std::vector<double> scalar_, hx_, hz_;
  double kin_coeff_, dt_;
  bool diagonal_;
  Eigen::VectorXcd kinetic_phase_, kinetic_half_phase_;
  Eigen::MatrixXcd half_phase_;  // diagonal case: n x dim phases for dt/2
  std::vector<Eigen::MatrixXcd> half_unitary_;  // dense case, small dim only
  std::vector<char> active_;
  std::unique_ptr<FftPlan> plan_;
};

}  // namespace molat
