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

#include "molat/propagator.hpp"

#include <cmath>
#include <mutex>

#include <fftw3.h>

namespace molat {

double Grid::p(int j) const { return (j < n / 2 ? j : j - n) * dp(); }

SpinorWavefunction::SpinorWavefunction(const Grid& g, double spin)
    : grid(g), F(spin), psi(Eigen::MatrixXcd::Zero(g.n, static_cast<int>(std::lround(2 * spin)) + 1)) {}

double SpinorWavefunction::norm() const { return std::sqrt(psi.squaredNorm() * grid.dz()); }

void SpinorWavefunction::normalize() {
  const double nn = norm();
  if (!(nn > 0.0) || !std::isfinite(nn)) throw NumericalError("cannot normalize a zero or non-finite spinor");
  psi /= nn;
}

std::vector<double> SpinorWavefunction::populations() const {
  std::vector<double> out(dim());
  for (int i = 0; i < dim(); ++i) out[i] = psi.col(i).squaredNorm() * grid.dz();
  return out;
}

double SpinorWavefunction::expect_Fz() const {
  const auto pop = populations();
  double s = 0.0;
  for (int i = 0; i < dim(); ++i) s += (F - i) * pop[i];
  return s;
}

Eigen::VectorXd SpinorWavefunction::density() const { return psi.rowwise().squaredNorm(); }

double SpinorWavefunction::expect_z() const {
  const Eigen::VectorXd rho = density();
  double s = 0.0;
  for (int j = 0; j < grid.n; ++j) s += grid.z(j) * rho(j);
  return s * grid.dz();
}

namespace {
std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}
}  // namespace

FftPlan::FftPlan(int n, int howmany) : n_(n), howmany_(howmany) {
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto* buf = fftw_alloc_complex(static_cast<std::size_t>(n) * std::max(1, howmany));
  // ESTIMATE keeps the chosen algorithm, and so every output bit, stable run to run
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  int dims[1] = {n};
  fwd_ = fftw_plan_many_dft(1, dims, howmany, buf, nullptr, 1, n, buf, nullptr, 1, n, FFTW_FORWARD, flags);
  bwd_ = fftw_plan_many_dft(1, dims, howmany, buf, nullptr, 1, n, buf, nullptr, 1, n, FFTW_BACKWARD, flags);
  fwd1_ = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, flags);
  bwd1_ = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, flags);
  fftw_free(buf);
}

FftPlan::~FftPlan() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  for (void* p : {fwd_, bwd_, fwd1_, bwd1_})
    if (p) fftw_destroy_plan(static_cast<fftw_plan>(p));
}

void FftPlan::forward(cplx* data, int columns) const {
  auto* d = reinterpret_cast<fftw_complex*>(data);
  if (columns == howmany_) {
    fftw_execute_dft(static_cast<fftw_plan>(fwd_), d, d);
  } else {
    for (int c = 0; c < columns; ++c) fftw_execute_dft(static_cast<fftw_plan>(fwd1_), d + c * n_, d + c * n_);
  }
}

void FftPlan::backward(cplx* data, int columns) const {
  auto* d = reinterpret_cast<fftw_complex*>(data);
  if (columns == howmany_) {
    fftw_execute_dft(static_cast<fftw_plan>(bwd_), d, d);
  } else {
    for (int c = 0; c < columns; ++c) fftw_execute_dft(static_cast<fftw_plan>(bwd1_), d + c * n_, d + c * n_);
  }
  const double inv = 1.0 / n_;
  for (long i = 0; i < static_cast<long>(n_) * columns; ++i) data[i] *= inv;
}

void FftPlan::forward_column(cplx* data) const {
  auto* d = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(fwd1_), d, d);
}

void FftPlan::backward_column(cplx* data) const {
  auto* d = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(bwd1_), d, d);
  const double inv = 1.0 / n_;
  for (int i = 0; i < n_; ++i) data[i] *= inv;
}

SpinorPropagator::SpinorPropagator(const Grid& grid, double F, std::vector<double> scalar,
                                   std::vector<double> hx, std::vector<double> hz, double kin_coeff, double dt)
    : grid_(grid),
      F_(F),
      S_(spin_matrices(F)),
      scalar_(std::move(scalar)),
      hx_(std::move(hx)),
      hz_(std::move(hz)),
      kin_coeff_(kin_coeff),
      dt_(dt) {
  dim_ = S_->dim;
  const int n = grid_.n;
  if (static_cast<int>(scalar_.size()) != n || static_cast<int>(hx_.size()) != n ||
      static_cast<int>(hz_.size()) != n)
    throw ConfigError("SpinorPropagator: potential arrays must match the grid");
  diagonal_ = true;
  for (double v : hx_)
    if (v != 0.0) diagonal_ = false;
  kinetic_phase_.resize(n);
  kinetic_half_phase_.resize(n);
  for (int j = 0; j < n; ++j) {
    kinetic_phase_(j) = std::exp(-kI * (kin_coeff_ * grid_.p(j) * grid_.p(j) * dt_));
    kinetic_half_phase_(j) = std::exp(-kI * (kin_coeff_ * grid_.p(j) * grid_.p(j) * 0.5 * dt_));
  }
  const double tau = 0.5 * dt_;
  if (diagonal_) {
    half_phase_.resize(n, dim_);
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < n; ++j) half_phase_(j, i) = std::exp(-kI * (tau * (scalar_[j] + hz_[j] * S_->m(i))));
  } else if (static_cast<long>(n) * dim_ * dim_ <= (1L << 22)) {
    half_unitary_.resize(n);
    for (int j = 0; j < n; ++j) {
      const double h = std::hypot(hx_[j], hz_[j]);
      const double beta = std::atan2(hx_[j], hz_[j]);
      Eigen::VectorXcd db(dim_), dm(dim_);
      for (int i = 0; i < dim_; ++i) {
        db(i) = std::exp(-kI * (beta * S_->lambda_y(i)));
        dm(i) = std::exp(-kI * (tau * h * S_->m(i)));
      }
      const Eigen::MatrixXcd R = S_->Wy * db.asDiagonal() * S_->Wy.adjoint();
      half_unitary_[j] = std::exp(-kI * (tau * scalar_[j])) * (R * dm.asDiagonal() * R.adjoint());
    }
  }
  plan_ = std::make_unique<FftPlan>(n, dim_);
}

// Dense fallback for large non-diagonal spins: per point, four matvecs.
void SpinorPropagator::apply_potential_exp(Eigen::MatrixXcd& psi, double tau) const {
  const int n = grid_.n;
  if (psi.rows() != n) return;
  Eigen::VectorXcd v(dim_), db(dim_), dm(dim_);
  for (int j = 0; j < n; ++j) {
    const double h = std::hypot(hx_[j], hz_[j]);
    const double beta = std::atan2(hx_[j], hz_[j]);
    for (int i = 0; i < dim_; ++i) {
      db(i) = std::exp(-kI * (beta * S_->lambda_y(i)));
      dm(i) = std::exp(-kI * (tau * h * S_->m(i)));
    }
    v = psi.row(j).transpose();
    v = S_->Wy.adjoint() * v;
    v = db.conjugate().asDiagonal() * v;
    v = S_->Wy * v;
    v = dm.asDiagonal() * v;
    v = S_->Wy.adjoint() * v;
    v = db.asDiagonal() * v;
    v = S_->Wy * v;
    psi.row(j) = std::exp(-kI * (tau * scalar_[j])) * v.transpose();
  }
}

void SpinorPropagator::potential_step(SpinorWavefunction& w, double fraction) const {
  const int n = grid_.n;
  if (fraction == 1.0) {
    potential_step(w, 0.5);
    potential_step(w, 0.5);
    return;
  }
  const bool half = std::abs(fraction - 0.5) < 1e-15;
  if (diagonal_) {
    for (int i = 0; i < dim_; ++i) {
      if (!active_.empty() && !active_[i]) continue;
      auto col = w.psi.col(i);
      if (half) {
        col.array() *= half_phase_.col(i).array();
      } else {
        const double tau = fraction * dt_;
        for (int j = 0; j < n; ++j) col(j) *= std::exp(-kI * (tau * (scalar_[j] + hz_[j] * S_->m(i))));
      }
    }
    return;
  }
  if (half && !half_unitary_.empty()) {
    Eigen::VectorXcd v(dim_);
    for (int j = 0; j < n; ++j) {
      v.noalias() = half_unitary_[j] * w.psi.row(j).transpose();
      w.psi.row(j) = v.transpose();
    }
    return;
  }
  apply_potential_exp(w.psi, fraction * dt_);
}

void SpinorPropagator::kinetic_step(SpinorWavefunction& w, double fraction) const {
  const int n = grid_.n;
  Eigen::VectorXcd other;
  const Eigen::VectorXcd* phase = &kinetic_phase_;
  if (fraction == 0.5) {
    phase = &kinetic_half_phase_;
  } else if (fraction == -0.5) {
    other = kinetic_half_phase_.conjugate();
    phase = &other;
  } else if (fraction != 1.0) {
    other.resize(n);
    for (int j = 0; j < n; ++j) other(j) = std::exp(-kI * (kin_coeff_ * grid_.p(j) * grid_.p(j) * fraction * dt_));
    phase = &other;
  }
  for (int i = 0; i < dim_; ++i) {
    if (!active_.empty() && !active_[i]) continue;
    cplx* col = w.psi.col(i).data();
    plan_->forward_column(col);
    for (int j = 0; j < n; ++j) col[j] *= (*phase)(j);
    plan_->backward_column(col);
  }
}

void SpinorPropagator::step(SpinorWavefunction& w) const {
  potential_step(w, 0.5);
  kinetic_step(w);
  potential_step(w, 0.5);
}

void SpinorPropagator::step_kvk(SpinorWavefunction& w) const {
  kinetic_step(w, 0.5);
  potential_step(w, 1.0);
  kinetic_step(w, 0.5);
}

Eigen::MatrixXcd SpinorPropagator::apply_hamiltonian(const SpinorWavefunction& w) const {
  const int n = grid_.n;
  Eigen::MatrixXcd k = w.psi;
  for (int i = 0; i < dim_; ++i) {
    cplx* col = k.col(i).data();
    plan_->forward_column(col);
    for (int j = 0; j < n; ++j) col[j] *= kin_coeff_ * grid_.p(j) * grid_.p(j);
    plan_->backward_column(col);
  }
  const Eigen::MatrixXcd sx = w.psi * S_->Fx.transpose();
  for (int i = 0; i < dim_; ++i) {
    const double m = S_->m(i);
    for (int j = 0; j < n; ++j) k(j, i) += (scalar_[j] + hz_[j] * m) * w.psi(j, i) + hx_[j] * sx(j, i);
  }
  return k;
}

}  // namespace molat
