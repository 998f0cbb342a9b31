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

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "molat/measurement.hpp"

namespace molat {

OscillatorFixedPoint measured_oscillator_fixed_point(double mass, double omega, double k) {
  if (!(k > 0)) throw ConfigError("fixed point needs k > 0");
  const double mw2 = mass * omega * omega;
  const double y = (-mw2 + std::sqrt(mw2 * mw2 + 16.0 * k * k)) / (8.0 * k);
  const double x = std::sqrt(y / (4.0 * k * mass));
  return {x, y, mass * mw2 * x + 8.0 * k * mass * x * y};
}

RiccatiMatrices riccati_matrices(const MeasurementConfig& cfg_in) {
  const MeasurementConfig cfg = cfg_in.resolved();
  RiccatiMatrices r;
  r.alpha.setZero();
  r.alpha(1, 1) = 2.0 * cfg.k;
  r.beta.setZero();
  r.beta(0, 1) = 1.0 / cfg.mass;
  r.beta(1, 0) = -cfg.mass * cfg.omega * cfg.omega;
  r.beta(1, 2) = -cfg.b / cfg.J;
  r.gamma.setZero();
  r.gamma(0, 0) = -8.0 * cfg.k;
  return r;
}

bool is_psd(const Eigen::Matrix3d& C, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(0.5 * (C + C.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -rel_tol * std::max(C.trace(), 1e-300);
}

CovarianceSeries riccati_evolve(const Eigen::Matrix3d& C0, const MeasurementConfig& cfg, double t_final, int n_out,
                                int n_sub) {
  if (!is_psd(C0)) throw ConfigError("riccati_evolve: initial covariance is not positive semidefinite");
  if (n_out < 1 || n_sub < 1) throw ConfigError("riccati_evolve: need at least one output and substep");
  const RiccatiMatrices m = riccati_matrices(cfg);
  auto rhs = [&](const Eigen::Matrix3d& C) {
    return Eigen::Matrix3d(m.alpha + m.beta * C + C * m.beta.transpose() + C * m.gamma * C);
  };
  CovarianceSeries out;
  Eigen::Matrix3d C = 0.5 * (C0 + C0.transpose());
  out.t.push_back(0.0);
  out.C.push_back(C);
  const double h = t_final / (static_cast<double>(n_out) * n_sub);
  for (int o = 1; o <= n_out; ++o) {
    for (int s = 0; s < n_sub; ++s) {
      const Eigen::Matrix3d k1 = rhs(C), k2 = rhs(C + h / 2 * k1), k3 = rhs(C + h / 2 * k2), k4 = rhs(C + h * k3);
      C += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      C = 0.5 * (C + C.transpose());
    }
    if (!C.allFinite() || !is_psd(C)) throw NumericalError("riccati_evolve: covariance lost positivity");
    out.t.push_back(o * t_final / n_out);
    out.C.push_back(C);
  }
  return out;
}

Eigen::Matrix3d riccati_analytic(const Eigen::Matrix3d& C0, const MeasurementConfig& cfg, double t) {
  const RiccatiMatrices m = riccati_matrices(cfg);
  Eigen::Matrix<double, 6, 6> M;
  M << -m.beta.transpose(), -m.gamma, m.alpha, m.beta;
  const Eigen::Matrix<double, 6, 6> Phi = (M * t).exp();
  const Eigen::Matrix3d X = Phi.topLeftCorner<3, 3>() + Phi.topRightCorner<3, 3>() * C0;
  const Eigen::Matrix3d Y = Phi.bottomLeftCorner<3, 3>() + Phi.bottomRightCorner<3, 3>() * C0;
  const Eigen::Matrix3d C = Y * X.inverse();
  return 0.5 * (C + C.transpose());
}

Eigen::Matrix3d initial_covariance(const MeasurementConfig& cfg_in, const MeasuredInitial& init) {
  const MeasurementConfig cfg = cfg_in.resolved();
  const double zg = cfg.zg();
  Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
  C(0, 0) = zg * zg;
  C(1, 1) = 1.0 / (4.0 * zg * zg);
  const double s = std::sin(init.theta);
  C(2, 2) = 0.5 * cfg.J * s * s;
  return C;
}

}  // namespace molat
