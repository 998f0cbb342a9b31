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

// Split-step propagation, band structure, left-localized preparation,
// magnetization and the Husimi representation.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "molat/measurement.hpp"
#include "molat/quantum.hpp"

using namespace molat;

namespace {

// Gaussian of rms width s at (zc, p0), spin component m_index.
SpinorWavefunction gaussian(const Grid& g, double F, double zc, double p0, double s, int m_index = 0) {
  SpinorWavefunction w(g, F);
  for (int j = 0; j < g.n; ++j) {
    const double x = g.z(j) - zc;
    w.psi(j, m_index) = std::exp(-x * x / (4 * s * s) + kI * p0 * g.z(j));
  }
  w.normalize();
  return w;
}

double variance_z(const SpinorWavefunction& w) {
  const Eigen::VectorXd rho = w.density();
  double m = 0, m2 = 0;
  for (int j = 0; j < w.grid.n; ++j) {
    m += rho(j) * w.grid.z(j);
    m2 += rho(j) * w.grid.z(j) * w.grid.z(j);
  }
  m *= w.grid.dz();
  m2 *= w.grid.dz();
  return m2 - m * m;
}

double overlap2(const SpinorWavefunction& a, const SpinorWavefunction& b) {
  cplx s = 0;
  for (int m = 0; m < a.dim(); ++m) s += a.psi.col(m).dot(b.psi.col(m));
  return std::norm(s * a.grid.dz());
}

double energy_expect(const SpinorPropagator& P, const SpinorWavefunction& w) {
  const Eigen::MatrixXcd Hpsi = P.apply_hamiltonian(w);
  cplx s = 0;
  for (int m = 0; m < w.dim(); ++m) s += w.psi.col(m).dot(Hpsi.col(m));
  return (s * w.grid.dz()).real();
}

LatticeConfig free_config(double F = 0.5) {
  LatticeConfig c;
  c.U0 = 1e-300;
  c.Bx = 0.0;
  c.Bz = 0.0;
  c.F = F;
  return c;
}

}  // namespace

TEST_CASE("free packet spreads as sigma^2 + (t sigma_p / m)^2") {
  Grid g;
  g.n = 2048;
  g.length = 400.0;
  g.z0 = -200.0;
  const double s0 = 1.3;
  auto w = gaussian(g, 0.5, 0.0, 0.0, s0);
  const std::vector<double> zero(g.n, 0.0);
  const double t = 5.0, dt = 0.05;
  SpinorPropagator P(g, 0.5, zero, zero, zero, 1.0, dt);  // H = p^2, m = 1/2
  for (int i = 0; i < 100; ++i) P.step(w);
  const double sp = 1.0 / (2 * s0);
  const double expect = s0 * s0 + std::pow(t * sp / units::kMass, 2);
  CHECK(std::abs(variance_z(w) - expect) <= 1e-8 * expect);
  CHECK(std::abs(w.norm() - 1.0) < 1e-12);
}

TEST_CASE("coherent state in a harmonic well keeps its amplitude") {
  Grid g;
  g.n = 512;
  g.length = 60.0;
  g.z0 = -30.0;
  const double omega = 1.0;
  std::vector<double> V(g.n), zero(g.n, 0.0);
  for (int j = 0; j < g.n; ++j) V[j] = 0.5 * units::kMass * omega * omega * g.z(j) * g.z(j);
  const double dt = 1e-3;
  SpinorPropagator P(g, 0.5, V, zero, zero, 1.0, dt);
  const double s = std::sqrt(1.0 / (2 * units::kMass * omega));
  auto w = gaussian(g, 0.5, 5.0, 0.0, s);
  auto amp = [&](const SpinorWavefunction& x) {
    const auto m = moments(x);
    // moments() reports p as -i d/dz; here m = 1/2 so <p>/(m w) = 2 <p>
    return std::hypot(m.z, m.p / (units::kMass * omega));
  };
  const double a0 = amp(w);
  const int per = static_cast<int>(std::lround(2 * kPi / omega / dt));
  double worst = 0;
  for (int i = 0; i < 5 * per; ++i) {
    P.step(w);
    if (i % 50 == 0) worst = std::max(worst, std::abs(amp(w) / a0 - 1));
  }
  CHECK(worst < 1e-6);
  // back near the start after whole periods
  CHECK(moments(w).z == doctest::Approx(5.0).epsilon(1e-3));
}

TEST_CASE("split step is second order") {
  const LatticeConfig c;
  const Grid g = default_lattice_grid(256, 2);
  const auto L = prepare_left_localized(c, g);
  auto run = [&](double dt) {
    auto w = L.psi;
    const auto P = lattice_propagator(c, g, dt);
    for (int i = 0; i < static_cast<int>(std::lround(0.2 / dt)); ++i) P.step(w);
    return w;
  };
  const auto a = run(4e-3), b = run(2e-3), d = run(1e-3);
  const double e1 = (a.psi - b.psi).norm(), e2 = (b.psi - d.psi).norm();
  CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.1));
  // split_step is the same step
  auto one = split_step(L.psi, c, 4e-3);
  auto ref = L.psi;
  lattice_propagator(c, g, 4e-3).step(ref);
  CHECK((one.psi - ref.psi).norm() < 1e-13);
}

TEST_CASE("norm and energy along lattice propagation") {
  const LatticeConfig c;
  const Grid g = default_lattice_grid(256, 2);
  const auto L = prepare_left_localized(c, g);
  {
    auto w = L.psi;
    const auto P = lattice_propagator(c, g, 0.002);
    double per_step = 0;
    double prev = w.norm();
    for (int i = 0; i < 100000; ++i) {
      P.step(w);
      if (i < 200) {
        const double n = w.norm();
        per_step = std::max(per_step, std::abs(n - prev));
        prev = n;
      }
    }
    CHECK(per_step <= 1e-12);
    CHECK(std::abs(w.norm() - 1.0) <= 1e-8);
  }
  // <H> error shrinks by four when dt halves
  auto drift = [&](double dt) {
    auto w = L.psi;
    const auto P = lattice_propagator(c, g, dt);
    const double E0 = energy_expect(P, w);
    double worst = 0;
    for (int i = 0; i < static_cast<int>(std::lround(1.0 / dt)); ++i) {
      P.step(w);
      worst = std::max(worst, std::abs(energy_expect(P, w) - E0));
    }
    return worst;
  };
  const double d1 = drift(4e-3), d2 = drift(2e-3);
  CHECK(d1 / d2 == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("empty lattice bands are folded parabolas") {
  const auto c = free_config(0.5);
  const std::vector<double> qs{-1.0, -0.5, 0.0, 0.3, 0.75};
  const auto bs = band_structure(c, 17, qs, 8);  // plane waves q + 2j, |j| <= 8
  for (std::size_t i = 0; i < qs.size(); ++i) {
    std::vector<double> e;
    for (int j = -8; j <= 8; ++j)
      for (int s = 0; s < 2; ++s) e.push_back(std::pow(qs[i] + 2 * j, 2));
    std::sort(e.begin(), e.end());
    for (int b = 0; b < 8; ++b) CHECK(bs.energies[i][b] == doctest::Approx(e[b]).epsilon(1e-12));
  }
  CHECK(brillouin_zone(4) == std::vector<double>{-1.0, -0.5, 0.0, 0.5});
}

TEST_CASE("deep scalar lattice: narrow lowest band") {
  LatticeConfig c = free_config(0.5);
  c.U0 = 5.0;
  c.theta_L = 1e-9;  // V = 2 U0 cos 2z, depth V0 = 4 U0 = 20 E_R
  const auto bs = band_structure(c, 0, brillouin_zone(16), 4);
  double lo = 1e300, hi = -1e300, top = 1e300;
  for (const auto& e : bs.energies) {
    lo = std::min(lo, e[0]);
    hi = std::max(hi, e[0]);
    top = std::min(top, e[2]);
    CHECK(e[1] - e[0] < 1e-9);  // spin degeneracy without a field
  }
  const double V0 = 4 * c.U0;
  const double J_est = 4 / std::sqrt(kPi) * std::pow(V0, 0.75) * std::exp(-2 * std::sqrt(V0));
  CHECK(hi - lo > 0);
  CHECK(hi - lo < 1.5 * 4 * J_est);
  CHECK(hi - lo < 1e-2 * (top - hi));
}

TEST_CASE("left-localized state") {
  const LatticeConfig c;
  const auto L = prepare_left_localized(c);
  CHECK(L.psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(L.left_population >= 0.95);
  CHECK(L.left_population == doctest::Approx(left_well_population(L.psi)).epsilon(1e-12));
  CHECK(L.psi.expect_Fz() > 0);
  CHECK(L.splitting > 0);
  CHECK(L.E2 - L.E1 > 5 * L.splitting);
  const auto ad = adiabatic_decomposition(L.psi, c);
  CHECK(std::accumulate(ad.population.begin(), ad.population.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(ad.population[0] > 0.9);
  CHECK(ad.population[1] > 0);
  CHECK(ad.population[1] < ad.population[0]);
}

TEST_CASE("Bloch eigenstate is stationary") {
  const LatticeConfig c;
  const Grid g = default_lattice_grid(256, 2);
  const auto bs = band_structure(c, 0, {0.0}, 2, true);
  const auto w0 = bloch_on_grid(bs.vectors[0].col(0), 0.0, bs.n_plane_waves, c.F, g);
  CHECK(w0.norm() == doctest::Approx(1.0).epsilon(1e-10));
  const double T = 2 * kPi / (bs.energies[0][1] - bs.energies[0][0]);
  const auto ms = magnetization_series(w0, c, 0.002, T, 50);
  double spread = 0;
  for (double f : ms.Fz) spread = std::max(spread, std::abs(f - ms.Fz.front()));
  CHECK(spread <= 1e-8);

  auto w = w0;
  const auto P = lattice_propagator(c, g, 0.002);
  for (int i = 0; i < static_cast<int>(std::lround(T / 0.002)); ++i) P.step(w);
  CHECK(overlap2(w, w0) >= 1 - 1e-6);
}

TEST_CASE("magnetization of a stretched state starts at F") {
  const LatticeConfig c;
  const Grid g = default_lattice_grid(256, 2);
  const auto w = gaussian(g, 4.0, 1.0, 0.0, 0.2, 0);  // m = +4
  const auto ms = magnetization_series(w, c, 0.002, 0.01, 1);
  CHECK(ms.Fz.front() == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(ms.t.front() == 0.0);
}

TEST_CASE("sinusoid fit recovers a known signal") {
  std::vector<double> t, y;
  for (int i = 0; i < 800; ++i) {
    t.push_back(0.01 * i);
    y.push_back(0.3 + 1.7 * std::cos(2.3 * t.back() - 0.4));
  }
  const auto f = fit_sinusoid(t, y, 1.0, 4.0);
  // a minimum of the squared residual is located to ~sqrt(eps) in omega
  CHECK(f.omega == doctest::Approx(2.3).epsilon(1e-7));
  CHECK(f.offset == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(f.amplitude == doctest::Approx(1.7).epsilon(1e-6));
  CHECK(f.residual < 1e-6);
}

TEST_CASE("Husimi Q of a product coherent state peaks at its parameters") {
  const LatticeConfig c;
  Grid g;
  g.n = 256;
  g.length = 4 * kPi;
  g.z0 = -2 * kPi;
  const double zg = 0.25;
  const int jz = 136;
  const double z0 = g.z(jz), p0 = g.p(5);
  SpinorWavefunction w(g, 1.0);
  const double th = 1.1, ph = 0.7;
  const Eigen::VectorXcd spin = spin_coherent_state(1.0, th, ph);
  for (int j = 0; j < g.n; ++j) {
    const double x = g.z(j) - z0;
    const cplx f = std::exp(-x * x / (4 * zg * zg) + kI * p0 * g.z(j));
    for (int m = 0; m < 3; ++m) w.psi(j, m) = f * spin(m);
  }
  w.normalize();
  PhaseSpaceGrid pg;
  pg.zg = zg;
  pg.z_stride = 1;
  const auto q = husimi_q(w, c, pg);
  CHECK(q.integral() == doctest::Approx(1.0).epsilon(1e-6));
  const Eigen::MatrixXd zp = q.reduced_zp();
  Eigen::Index r, col;
  zp.maxCoeff(&r, &col);
  CHECK(q.z0[r] == doctest::Approx(z0).epsilon(1e-12));
  CHECK(q.p0[col] == doctest::Approx(p0).epsilon(1e-12));
  const double peak = q.value(static_cast<int>(r), static_cast<int>(col), th, ph);
  for (double dth : {-0.05, 0.05})
    for (double dph : {-0.05, 0.05}) CHECK(q.value(static_cast<int>(r), static_cast<int>(col), th + dth, ph + dph) < peak);
  // reproducing kernel: at the peak |<alpha|psi>|^2 = 1
  CHECK(peak * 2 * kPi * 4 * kPi / 3 * q.norm == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("Husimi of the left-localized state and its samples") {
  const LatticeConfig c;
  const auto L = prepare_left_localized(c);
  const auto q = husimi_q(L.psi, c);
  CHECK(q.integral() == doctest::Approx(1.0).epsilon(1e-6));
  const auto rz = q.reduced_z();
  double left = 0, right = 0, mean = 0, m2 = 0;
  for (std::size_t i = 0; i < rz.size(); ++i) {
    double u = std::fmod(q.z0[i], kPi);
    if (u < 0) u += kPi;
    (u < kPi / 2 ? left : right) += rz[i] * q.dz0;
    mean += rz[i] * q.dz0 * q.z0[i];
    m2 += rz[i] * q.dz0 * q.z0[i] * q.z0[i];
  }
  CHECK(left > 0.9);
  CHECK(left + right == doctest::Approx(1.0).epsilon(1e-6));
  const double sd = std::sqrt(m2 - mean * mean);

  double acc = 0;
  const int n = 4000;
  const auto s = sample_husimi(q, n, 99, c.gyro_sign, &acc);
  REQUIRE(s.size() == n);
  CHECK(acc > 0);
  double zs = 0;
  for (const auto& x : s) {
    CHECK(std::abs(x.n.norm() - 1) < 1e-12);
    zs += x.z;
  }
  zs /= n;
  CHECK(std::abs(zs - mean) < 3 * sd / std::sqrt(n));
  // same seed, same draws
  const auto s2 = sample_husimi(q, 10, 99, c.gyro_sign);
  CHECK(s2[3].z == s[3].z);
}

TEST_CASE("reduced Husimi moves to the right well at half the tunneling period") {
  const LatticeConfig c;
  const auto L = prepare_left_localized(c);
  const double half = kPi / zone_averaged_splitting(c);
  auto w = L.psi;
  const auto P = lattice_propagator(c, w.grid, 0.002);
  for (int i = 0; i < static_cast<int>(std::lround(half / 0.002)); ++i) P.step(w);
  const auto rz = husimi_q(w, c).reduced_z();
  const auto q0 = husimi_q(L.psi, c);
  double left = 0;
  for (std::size_t i = 0; i < rz.size(); ++i) {
    double u = std::fmod(q0.z0[i], kPi);
    if (u < 0) u += kPi;
    if (u < kPi / 2) left += rz[i] * q0.dz0;
  }
  CHECK(left < 0.2);
  CHECK(w.expect_Fz() < 0);
}
