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

#include "molat/quantum.hpp"
#include "molat/rng.hpp"

namespace molat {

namespace {

// Golub-Welsch nodes and weights of n-point Gauss-Legendre on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    x[i] = es.eigenvalues()(i);
    w[i] = 2.0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
  }
}

double spin_overlap2(const Eigen::VectorXcd& a, double F, double theta, double phi) {
  return std::norm(spin_coherent_state(F, theta, phi).dot(a));
}

}  // namespace

double HusimiQ::value(int iz, int ip, double theta, double phi_) const {
  const Eigen::VectorXcd a = A.row(iz * static_cast<long>(p0.size()) + ip).transpose();
  return (2.0 * F + 1.0) / (4.0 * kPi) * spin_overlap2(a, F, theta, phi_) / (2.0 * kPi) / norm;
}

Eigen::MatrixXd HusimiQ::reduced_zp() const {
  const int nz = static_cast<int>(z0.size()), np = static_cast<int>(p0.size());
  Eigen::MatrixXd out(nz, np);
  for (int iz = 0; iz < nz; ++iz)
    for (int ip = 0; ip < np; ++ip)
      out(iz, ip) = A.row(static_cast<long>(iz) * np + ip).squaredNorm() / (2.0 * kPi) / norm;
  return out;
}

std::vector<double> HusimiQ::reduced_z() const {
  const Eigen::MatrixXd zp = reduced_zp();
  std::vector<double> out(z0.size());
  for (int iz = 0; iz < zp.rows(); ++iz) out[iz] = zp.row(iz).sum() * dp0;
  return out;
}

double HusimiQ::integral() const {
  const int nz = static_cast<int>(z0.size()), np = static_cast<int>(p0.size());
  double s = 0.0;
  const double wphi = 2.0 * kPi / phi.size();
  std::vector<Eigen::VectorXcd> kets;
  for (std::size_t it = 0; it < cos_theta.size(); ++it)
    for (double ph : phi) kets.push_back(spin_coherent_state(F, std::acos(cos_theta[it]), ph));
  for (long r = 0; r < static_cast<long>(nz) * np; ++r) {
    const Eigen::VectorXcd a = A.row(r).transpose();
    std::size_t k = 0;
    double cell = 0.0;
    for (std::size_t it = 0; it < cos_theta.size(); ++it)
      for (std::size_t ip = 0; ip < phi.size(); ++ip, ++k) cell += w_theta[it] * wphi * std::norm(kets[k].dot(a));
    s += cell;
  }
  return s * (2.0 * F + 1.0) / (4.0 * kPi) / (2.0 * kPi) * dz0 * dp0 / norm;
}

HusimiQ husimi_q(const SpinorWavefunction& w, const LatticeConfig& cfg, const PhaseSpaceGrid& g) {
  HusimiQ q;
  q.F = w.F;
  q.zg = g.zg > 0 ? g.zg : analyze_double_well(cfg).zg_left;
  if (!(q.zg > 0)) throw ConfigError("husimi_q: coherent-state width must be positive");
  const Grid& grid = w.grid;
  const int n = grid.n, d = w.dim();
  const int stride = std::max(1, g.z_stride);
  q.dz0 = stride * grid.dz();
  q.dp0 = grid.dp();
  std::vector<int> kidx;
  for (int k = 0; k < n; ++k)
    if (std::abs(grid.p(k)) <= g.p_max) kidx.push_back(k);
  std::sort(kidx.begin(), kidx.end(), [&](int a, int b) { return grid.p(a) < grid.p(b); });
  for (int k : kidx) q.p0.push_back(grid.p(k));
  for (int j = 0; j < n; j += stride) q.z0.push_back(grid.z(j));
  const int nz = static_cast<int>(q.z0.size()), np = static_cast<int>(q.p0.size());
  q.A.resize(static_cast<long>(nz) * np, d);

  const double amp = std::pow(2.0 * kPi * q.zg * q.zg, -0.25);
  FftPlan plan(n, 1);
  Eigen::VectorXcd buf(n);
  for (int iz = 0; iz < nz; ++iz) {
    const double zc = q.z0[iz];
    Eigen::VectorXd gauss(n);
    for (int j = 0; j < n; ++j) {
      double x = std::remainder(grid.z(j) - zc, grid.length);
      gauss(j) = amp * std::exp(-x * x / (4.0 * q.zg * q.zg));
    }
    for (int m = 0; m < d; ++m) {
      buf = gauss.cast<cplx>().cwiseProduct(w.psi.col(m));
      plan.forward_column(buf.data());
      for (int ip = 0; ip < np; ++ip) {
        const int k = kidx[ip];
        q.A(static_cast<long>(iz) * np + ip, m) = grid.dz() * std::exp(-kI * (grid.p(k) * grid.z0)) * buf(k);
      }
    }
  }
  const int nth = g.n_theta > 0 ? g.n_theta : d;
  const int nph = g.n_phi > 0 ? g.n_phi : 2 * d;
  gauss_legendre(nth, q.cos_theta, q.w_theta);
  for (int i = 0; i < nph; ++i) q.phi.push_back(2.0 * kPi * i / nph);
  q.norm = 1.0;
  q.norm = q.integral();
  if (!(q.norm > 0)) throw NumericalError("husimi_q: vanishing distribution");
  return q;
}

std::vector<ClassicalState> sample_husimi(const HusimiQ& q, int n_samples, std::uint64_t seed, int gyro_sign,
                                          double* acceptance) {
  const long ncell = q.A.rows();
  std::vector<double> w(ncell);
  double wmax = 0.0;
  for (long r = 0; r < ncell; ++r) wmax = std::max(wmax, w[r] = q.A.row(r).squaredNorm());
  std::vector<long> support;
  for (long r = 0; r < ncell; ++r)
    if (w[r] > 1e-14 * wmax) support.push_back(r);
  if (support.empty()) throw NumericalError("sample_husimi: empty distribution");
  SplitMix64 rng(seed);
  std::vector<ClassicalState> out;
  out.reserve(n_samples);
  long proposals = 0, accepted = 0;
  const long min_proposals = 100000;
  const int np = static_cast<int>(q.p0.size());
  while (static_cast<int>(out.size()) < n_samples) {
    ++proposals;
    const long r = support[static_cast<long>(rng.uniform() * support.size()) % support.size()];
    if (rng.uniform() * wmax >= w[r]) {
      if (proposals > min_proposals && static_cast<double>(accepted) / proposals < 1e-4)
        throw NumericalError("sample_husimi: acceptance rate below 1e-4");
      continue;
    }
    const Eigen::VectorXcd a = q.A.row(r).transpose();
    double theta, phi;
    for (int tries = 0;; ++tries) {
      if (tries > 10000000) throw NumericalError("sample_husimi: spin rejection stalled");
      const double ct = 2.0 * rng.uniform() - 1.0;
      phi = 2.0 * kPi * rng.uniform();
      theta = std::acos(ct);
      if (rng.uniform() * w[r] < spin_overlap2(a, q.F, theta, phi)) break;
    }
    ++accepted;
    ClassicalState s;
    s.z = q.z0[r / np] + (rng.uniform() - 0.5) * q.dz0;
    s.p = q.p0[r % np] + (rng.uniform() - 0.5) * q.dp0;
    s.n = gyro_sign * Vec3(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
    out.push_back(s);
  }
  if (acceptance) *acceptance = static_cast<double>(accepted) / proposals;
  return out;
}

}  // namespace molat
