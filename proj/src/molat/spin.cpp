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

#include "molat/spin.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace molat {

bool valid_spin(double F) {
  const double twoF = 2.0 * F;
  return F >= 0.5 && std::abs(twoF - std::round(twoF)) < 1e-12 && twoF < 1e6;
}

namespace {

std::shared_ptr<SpinMatrices> build(double F) {
  auto s = std::make_shared<SpinMatrices>();
  s->F = F;
  s->dim = static_cast<int>(std::lround(2.0 * F)) + 1;
  const int d = s->dim;
  s->Fz = Eigen::MatrixXcd::Zero(d, d);
  Eigen::MatrixXcd Fp = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const double m = s->m(i);
    s->Fz(i, i) = m;
    // F+ |m> = sqrt(F(F+1) - m(m+1)) |m+1>, and |m+1> sits at row i-1
    if (i > 0) Fp(i - 1, i) = std::sqrt(F * (F + 1.0) - m * (m + 1.0));
  }
  const Eigen::MatrixXcd Fm = Fp.adjoint();
  s->Fx = 0.5 * (Fp + Fm);
  s->Fy = -0.5 * kI * (Fp - Fm);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(s->Fy);
  s->Wy = es.eigenvectors();
  s->lambda_y = es.eigenvalues();
  return s;
}

}  // namespace

std::shared_ptr<const SpinMatrices> spin_matrices(double F) {
  if (!valid_spin(F)) throw ConfigError("invalid spin F = " + std::to_string(F) + " (need 2F a positive integer)");
  static std::mutex mu;
  static std::map<long, std::shared_ptr<const SpinMatrices>> cache;
  const long key = std::lround(2.0 * F);
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto s = build(key / 2.0);
  cache.emplace(key, s);
  return s;
}

double log_binomial(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

Eigen::VectorXcd spin_coherent_state(double F, double theta, double phi) {
  const int d = static_cast<int>(std::lround(2.0 * F)) + 1;
  Eigen::VectorXcd v(d);
  const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
  for (int i = 0; i < d; ++i) {
    const double m = F - i;
    const double a = F + m, b = F - m;
    // 0^0 = 1 convention at the poles
    double mag;
    if ((c == 0.0 && a > 0) || (s == 0.0 && b > 0)) {
      mag = 0.0;
    } else {
      const double lc = a > 0 ? a * std::log(std::abs(c)) : 0.0;
      const double ls = b > 0 ? b * std::log(std::abs(s)) : 0.0;
      mag = std::exp(0.5 * log_binomial(2.0 * F, a) + lc + ls);
      if (c < 0 && std::fmod(a, 2.0) == 1.0) mag = -mag;
      if (s < 0 && std::fmod(b, 2.0) == 1.0) mag = -mag;
    }
    v(i) = mag * std::exp(-kI * (m * phi));
  }
  return v;
}

}  // namespace molat
