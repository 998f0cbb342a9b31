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

// Classical moment-plus-motion flow, sections, pendulum and adiabatic
// frequencies, Lyapunov exponents.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "molat/classical.hpp"
#include "molat/rng.hpp"

using namespace molat;

namespace {

LatticeConfig integrable(double U0 = 100.0) {
  LatticeConfig c;
  c.U0 = U0;
  c.Bx = 0.0;
  c.Bz = 0.0;
  return c;
}

ClassicalState state(double z, double p, Vec3 n) { return {z, p, n.normalized()}; }

// Mean period from upward zero crossings of p, linearly interpolated.
double measured_period(const std::vector<ClassicalState>& tr, double dt) {
  std::vector<double> up;
  for (std::size_t i = 1; i < tr.size(); ++i)
    if (tr[i - 1].p < 0.0 && tr[i].p >= 0.0) up.push_back((i - 1 + tr[i - 1].p / (tr[i - 1].p - tr[i].p)) * dt);
  REQUIRE(up.size() >= 3);
  return (up.back() - up.front()) / (up.size() - 1);
}

}  // namespace

TEST_CASE("energy at simple states") {
  LatticeConfig off = integrable(3.0);
  off.theta_L = 0.9;
  // z = 0: fictitious field vanishes, only U_J remains
  CHECK(energy(state(0.0, 0.0, {1, 0, 0}), off) == doctest::Approx(scalar_potential(0.0, off)).epsilon(1e-15));
  CHECK(energy(state(0.0, 1.5, {0, 0, 1}), off) == doctest::Approx(scalar_potential(0.0, off) + 2.25).epsilon(1e-15));

  const LatticeConfig c;
  const double z = 0.4;
  const Vec3 b = effective_field(z, c).vec();
  CHECK(energy(state(z, 0.0, b), c) == doctest::Approx(lowest_surface(z, c)).epsilon(1e-14));
}

TEST_CASE("derivatives") {
  const LatticeConfig c;
  const double z = 1.1;
  const Vec3 b = effective_field(z, c).vec();
  CHECK(derivatives(state(z, 0.3, b), c).dn.norm() < 1e-14 * b.norm());

  const auto ci = integrable();
  SplitMix64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto s = state(3 * rng.uniform(), rng.uniform() - 0.5, {rng.uniform() - 0.5, rng.uniform() - 0.5, rng.uniform() - 0.5});
    CHECK(std::abs(derivatives(s, ci).dn.z()) < 1e-14);
  }

  // dp = -dH/dz and dz = dH/dp at random states, central differences
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto s = state(kPi * rng.uniform(), 10 * (rng.uniform() - 0.5),
                         {rng.uniform() - 0.5, rng.uniform() - 0.5, rng.uniform() - 0.5});
    const double h = 1e-5;
    auto a = s, bb = s;
    a.z += h;
    bb.z -= h;
    const double dHdz = (energy(a, c) - energy(bb, c)) / (2 * h);
    a = s;
    bb = s;
    a.p += h;
    bb.p -= h;
    const double dHdp = (energy(a, c) - energy(bb, c)) / (2 * h);
    const auto d = derivatives(s, c);
    worst = std::max({worst, std::abs(d.dp + dHdz) / (1.0 + std::abs(dHdz)), std::abs(d.dz - dHdp) / (1.0 + std::abs(dHdp))});
  }
  CHECK(worst < 1e-7);
}

TEST_CASE("integrable flow keeps n_z and |n|") {
  const auto c = integrable();
  const auto tr = integrate(state(0.7, 2.0, {0.6, 0.0, 0.8}), c, 0.002, 20.0);  // 10^4 steps
  double dnz = 0.0, dnorm = 0.0;
  for (const auto& s : tr) {
    dnz = std::max(dnz, std::abs(s.n.z() - tr.front().n.z()));
    dnorm = std::max(dnorm, std::abs(s.n.norm() - 1.0));
  }
  CHECK(dnz <= 1e-12);
  CHECK(dnorm <= 1e-12);
}

TEST_CASE("small oscillations without field run at the harmonic frequency") {
  LatticeConfig c = integrable(25.0);
  c.theta_L = 1e-9;  // scalar lattice only; bz ~ 1e-8
  // V = 2 U0 cos 2z, minimum at pi/2, V'' = 8 U0, m = 1/2
  const double w0 = std::sqrt(16.0 * c.U0);
  const double dt = 1e-3;
  const auto tr = integrate(state(kPi / 2 + 1e-3, 0.0, {0, 0, 1}), c, dt, 40 * 2 * kPi / w0);
  CHECK(2 * kPi / measured_period(tr, dt) == doctest::Approx(w0).epsilon(1e-3));
}

TEST_CASE("uniform field only: Larmor precession") {
  LatticeConfig c = integrable(1.0);
  c.U0 = 1e-300;  // lattice off
  c.Bx = 3.0;
  c.Bz = 4.0;
  const double rate = 5.0 / c.F;  // |B| / F with |mu| = mu_B
  const double T = 2 * kPi / rate;
  const int n = 1000;
  ClassicalState s = state(0.0, 0.0, {0, 1, 0});
  const ClassicalState s0 = s;
  ClassicalStepper st(c);
  for (int i = 0; i < n; ++i) st.step(s, T / n);
  CHECK((s.n - s0.n).norm() < 1e-9);
  // a quarter turn is not back
  ClassicalState q = s0;
  for (int i = 0; i < n / 4; ++i) st.step(q, T / n);
  CHECK((q.n - s0.n).norm() > 1.0);
}

TEST_CASE("energy conservation over 10^3 harmonic periods") {
  const LatticeConfig c;
  const auto s0 = seed_on_shell(-0.6, 0.0, -186.8, c);
  REQUIRE(s0);
  ClassicalStepper st(c);
  ClassicalState s = *s0;
  const double E0 = energy(s, c);
  const double dt = 0.001;
  const int steps = static_cast<int>(1000 * 2 * kPi / reference_frequency(c) / dt);
  double drift = 0.0;
  for (int i = 0; i < steps; ++i) {
    st.step(s, dt);
    if (i % 50 == 0) drift = std::max(drift, std::abs(energy(s, c) - E0) / std::abs(E0));
  }
  CHECK(drift <= 1e-8);
  CHECK(std::abs(s.n.norm() - 1.0) <= 1e-12);
}

TEST_CASE("time reversal returns to the start") {
  const LatticeConfig c;
  for (auto m : {Integrator::kStrang, Integrator::kYoshida4}) {
    ClassicalStepper st(c, m);
    const ClassicalState s0 = *seed_on_shell(0.38, 0.0, -186.8, c);
    ClassicalState s = s0;
    for (int i = 0; i < 2000; ++i) st.step(s, 0.002);
    for (int i = 0; i < 2000; ++i) st.step(s, -0.002);
    CHECK(std::abs(s.z - s0.z) < 1e-6);
    CHECK(std::abs(s.p - s0.p) < 1e-6);
    CHECK((s.n - s0.n).norm() < 1e-6);
  }
}

TEST_CASE("Yoshida is fourth order, Strang second") {
  const LatticeConfig c;
  const ClassicalState s0 = *seed_on_shell(0.38, 0.0, -186.8, c);
  const double T = 0.5;
  auto endpoint = [&](Integrator m, double dt) { return integrate(s0, c, dt, T, m).back(); };
  auto err = [](const ClassicalState& a, const ClassicalState& b) {
    return std::abs(a.z - b.z) + std::abs(a.p - b.p) / 10 + (a.n - b.n).norm();
  };
  const auto ref = endpoint(Integrator::kYoshida4, 1e-5);
  const double e4a = err(endpoint(Integrator::kYoshida4, 4e-3), ref);
  const double e4b = err(endpoint(Integrator::kYoshida4, 2e-3), ref);
  const double e2a = err(endpoint(Integrator::kStrang, 4e-3), ref);
  const double e2b = err(endpoint(Integrator::kStrang, 2e-3), ref);
  CHECK(std::log2(e4a / e4b) == doctest::Approx(4.0).epsilon(0.1));
  CHECK(std::log2(e2a / e2b) == doctest::Approx(2.0).epsilon(0.1));
  // the adaptive cross-check agrees
  CHECK(err(endpoint(Integrator::kDormandPrince, 1e-4), ref) < 1e-6);
}

TEST_CASE("integrable section points lie on n_z = const curves") {
  const auto c = integrable();
  std::vector<ClassicalState> seeds;
  for (double nz : {-0.5, 0.1, 0.7}) {
    auto s = seed_on_shell(nz, 0.3, 0.0, c);
    REQUIRE(s);
    seeds.push_back(*s);
  }
  SectionOptions opt;
  opt.n_crossings = 40;
  const auto sec = poincare_section(seeds, c, opt);
  for (int k = 0; k < 3; ++k) {
    std::vector<double> v;
    for (const auto& pt : sec.points)
      if (pt.seed_index == k) v.push_back(pt.nz);
    REQUIRE(v.size() == 40);
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    CHECK(var / v.size() <= 1e-20);
    CHECK(*std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end()) <= 1e-10);
  }
}

TEST_CASE("section crossings sit on p = 0 at the shell energy") {
  const LatticeConfig c;
  const auto s = seed_on_shell(0.3, 0.4, -186.8, c);
  REQUIRE(s);
  CHECK(energy(*s, c) == doctest::Approx(-186.8).epsilon(1e-12));
  CHECK(s->p == 0.0);
  CHECK(s->n.z() == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(azimuth(s->n) == doctest::Approx(0.4).epsilon(1e-14));
  SectionOptions opt;
  opt.n_crossings = 30;
  const auto sec = poincare_section({*s}, c, opt);
  CHECK(sec.points.size() == 30);
  for (const auto& pt : sec.points) {
    CHECK(pt.nz >= -1.0);
    CHECK(pt.nz <= 1.0);
    CHECK(pt.phi > -kPi);
    CHECK(pt.phi <= kPi);
  }
  // threads do not change the section
  const auto sec2 = poincare_section({*s, *s}, c, opt, 2);
  for (std::size_t i = 0; i < 30; ++i) CHECK(sec2.points[i].nz == sec.points[i].nz);
  CHECK_FALSE(seed_on_shell(0.0, 0.0, -1000.0, c));
}

TEST_CASE("elliptic K") {
  CHECK(elliptic_K(0.0) == kPi / 2);
  CHECK(std::abs(elliptic_K(0.0) - kPi / 2) <= 1e-14);
  // power series sum_n [(2n)! / (2^{2n} n!^2)]^2 k^{2n}, 60 terms at k = 0.5
  const double k2 = 0.25;
  double term = 1.0, sum = 1.0;
  for (int n = 1; n < 60; ++n) {
    const double r = (2.0 * n - 1) / (2.0 * n);
    term *= r * r * k2;
    sum += term;
  }
  CHECK(std::abs(elliptic_K(0.5) - kPi / 2 * sum) <= 1e-12);
  CHECK(elliptic_K(0.999) > elliptic_K(0.99));
  CHECK_THROWS_AS(elliptic_K(1.0), ConfigError);
  CHECK_THROWS_AS(elliptic_K(1.0 - 1e-13), ConfigError);
  CHECK_THROWS_AS(elliptic_K(-0.1), ConfigError);
}

TEST_CASE("pendulum analysis") {
  const auto c = integrable();
  const auto p0 = pendulum_analysis(0.0, 0.0, c);
  CHECK(p0.C == doctest::Approx(2 * c.U0 * std::cos(c.theta_L)).epsilon(1e-14));
  CHECK(p0.D == 0.0);
  const auto bottom = pendulum_analysis(0.8, -pendulum_analysis(0.8, 0.0, c).C * (1 - 1e-12), c);
  CHECK(bottom.omega1 == doctest::Approx(bottom.omega0).epsilon(1e-9));
  CHECK(bottom.omega0 == doctest::Approx(std::sqrt(4 * bottom.C / units::kMass)).epsilon(1e-14));
  CHECK_THROWS_AS(pendulum_analysis(0.8, 1e4, c), ConfigError);
  CHECK_THROWS_AS(pendulum_analysis(1.5, 0.0, c), ConfigError);
}

TEST_CASE("pendulum frequency matches integration at a few energies") {
  const auto c = integrable();
  const double nz = 0.8;
  const Vec3 n(0.6, 0.0, 0.8);
  const auto ref = pendulum_analysis(nz, 0.0, c);
  for (double k2 : {0.05, 0.4, 0.8}) {
    const double E = ref.C * (2 * k2 - 1);
    const auto pa = pendulum_analysis(nz, E, c);
    const double zmin = 0.5 * (kPi + pa.D);  // C cos(2z - D) = -C
    const double dt = 2e-4;
    const auto tr = integrate(state(zmin, std::sqrt(E + pa.C), n), c, dt, 12 * 2 * kPi / pa.omega1);
    CHECK(2 * kPi / measured_period(tr, dt) == doctest::Approx(pa.omega1).epsilon(5e-3));
  }
}

TEST_CASE("adiabatic analysis") {
  const LatticeConfig c;
  const auto dw = analyze_double_well(c);
  // harmonic limit: just above the minimum of the lowest surface
  const auto low = adiabatic_analysis(0.0, dw.v_min + 1e-4, c);
  CHECK(low.omega1 == doctest::Approx(dw.omega_left).epsilon(1e-2));
  CHECK(low.z_left < low.z_right);

  double prev = 0.0;
  for (double dE : {0.5, 2.0, 4.0, 6.0}) {
    const auto a = adiabatic_analysis(0.0, dw.v_min + dE, c);
    CHECK(a.action > prev);
    prev = a.action;
  }
  CHECK_THROWS_AS(adiabatic_analysis(0.0, dw.v_min - 1.0, c), ConfigError);
}

TEST_CASE("Lyapunov exponent of linear and integrable flows") {
  LatticeConfig u;
  u.U0 = 1e-300;
  u.Bx = 3.0;
  // linear flow: separations grow linearly, so the estimate decays like log(t)/t
  const auto short_run = max_lyapunov(state(0.3, 1.0, {0, 1, 0}), u, 200.0);
  const auto long_run = max_lyapunov(state(0.3, 1.0, {0, 1, 0}), u, 2000.0);
  CHECK(short_run.exponent < 2 * std::log(2 * 200.0) / 200.0);
  CHECK(long_run.exponent < 2 * std::log(2 * 2000.0) / 2000.0);
  CHECK(long_run.exponent < short_run.exponent / 3);

  const auto c = integrable();
  const double w0 = reference_frequency(c);
  const auto li = max_lyapunov(state(0.75 * kPi + 0.2, 0.0, {0.6, 0.0, 0.8}), c, 1000.0);
  CHECK(li.exponent >= 0.0);
  CHECK(li.exponent <= 1e-3 * w0);
  CHECK(li.times.size() == li.history.size());
}
