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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Criteria 3-5 and 8-10 run the shipped scenario files.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "molat/classical.hpp"
#include "molat/experiments.hpp"
#include "molat/measurement.hpp"
#include "molat/quantum.hpp"
#include "molat/rng.hpp"
#include "molat/scenario.hpp"

using namespace molat;

namespace {

Scenario shipped(const char* file) { return parse_config(std::string(MOLAT_SCENARIO_DIR) + "/" + file); }

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Mean period from upward zero crossings of p.
double measured_period(const std::vector<ClassicalState>& tr, double dt) {
  std::vector<double> up;
  for (std::size_t i = 1; i < tr.size(); ++i)
    if (tr[i - 1].p < 0.0 && tr[i].p >= 0.0) up.push_back((i - 1 + tr[i - 1].p / (tr[i - 1].p - tr[i].p)) * dt);
  if (up.size() < 2) return NAN;
  return (up.back() - up.front()) / (up.size() - 1);
}

struct Verdict {
  bool pass;
  std::string detail;
};

// ---------------------------------------------------------------------------------------------

Verdict integrable_conservation() {
  LatticeConfig c;
  c.Bx = 0.0;
  const double w0 = reference_frequency(c);
  const double dt = 5e-4;
  const long steps = std::lround(1000 * 2 * kPi / w0 / dt);
  const ClassicalState s0{0.3, 1.0, Vec3(0.6, 0.0, 0.8)};
  ClassicalStepper st(c);
  ClassicalState s = s0;
  const double E0 = energy(s, c);
  double dn = 0, dE = 0;
  for (long i = 0; i < steps; ++i) {
    st.step(s, dt);
    dn = std::max(dn, std::abs(s.n.z() - s0.n.z()));
    dE = std::max(dE, std::abs(energy(s, c) - E0) / std::abs(E0));
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "%ld steps of %g, max |dn_z| %.2e (<= 1e-12), max relative |dE| %.2e (<= 1e-8)", steps, dt, dn, dE);
  return {dn <= 1e-12 && dE <= 1e-8, buf};
}

Verdict pendulum_law() {
  LatticeConfig c;
  c.Bx = 0.0;
  c.Bz = 0.0;
  const double nz = 0.8;
  const Vec3 n = Vec3(0.6, 0.0, 0.8);
  const auto ref = pendulum_analysis(nz, 0.0, c);
  double worst = 0;
  for (int i = 0; i < 20; ++i) {
    const double k2 = 0.02 + 0.93 * i / 19.0;  // libration range, short of the separatrix
    const double E = ref.C * (2 * k2 - 1);
    const auto pa = pendulum_analysis(nz, E, c);
    const double zmin = 0.5 * (kPi + pa.D);
    const double dt = 2e-4;
    const auto tr = integrate({zmin, std::sqrt(E + pa.C), n}, c, dt, 12 * 2 * kPi / pa.omega1);
    const double w = 2 * kPi / measured_period(tr, dt);
    worst = std::max(worst, std::abs(w / pa.omega1 - 1));
  }
  const double k0 = std::abs(elliptic_K(0.0) - kPi / 2);
  char buf[160];
  std::snprintf(buf, sizeof buf, "20 energies, worst |w1/w_int - 1| %.2e (<= 5e-3), |K(0) - pi/2| %.1e (<= 1e-14)",
                worst, k0);
  return {worst <= 5e-3 && k0 <= 1e-14, buf};
}

Verdict section_landmarks() {
  const Scenario s = shipped("fig1_section.json");
  const auto r = section_scan(s);
  const Island* best = nullptr;
  for (const auto& isl : r.islands)
    if (!best || std::hypot(isl.nz - 0.38, isl.phi) < std::hypot(best->nz - 0.38, best->phi)) best = &isl;
  if (!best) return {false, "no islands detected"};
  const bool located = std::abs(best->nz - 0.38) <= 0.03 && std::abs(best->phi) <= 0.1;
  const double E = s.section.energy;
  const auto seed = seed_on_shell(best->nz, best->phi, E, s.lattice);
  if (!seed) return {false, "island center not on the energy shell"};
  const Vec3 b = effective_field(seed->z, s.lattice).vec().normalized();
  const double alpha = std::acos(std::clamp(seed->n.dot(b), -1.0, 1.0));
  const auto a = adiabatic_analysis(alpha, E, s.lattice, seed->z);
  const double ratio = a.omega2 / a.omega1;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%zu islands, nearest at (n_z %.3f, phi %.3f), w2/w1 = %.3f (4 within 5%%)",
                r.islands.size(), best->nz, best->phi, ratio);
  return {located && std::abs(ratio / 4 - 1) <= 0.05, buf};
}

Verdict quantum_transport(const TransportResult& r) {
  const double rel = std::abs(r.fit.omega / r.splitting_zone - 1);
  char buf[200];
  std::snprintf(buf, sizeof buf, "fit w %.5f vs zone splitting %.5f (rel %.1e <= 2e-2), <F_z> crosses zero: %s",
                r.fit.omega, r.splitting_zone, rel, r.quantum_crosses_zero ? "yes" : "no");
  return {rel <= 0.02 && r.quantum_crosses_zero, buf};
}

Verdict classical_contrast(const TransportResult& r, int n_samples) {
  const double late = r.classical_right.empty() ? 0.0 : r.classical_right.back();
  char buf[200];
  std::snprintf(buf, sizeof buf, "%d samples, classical <F_z> keeps sign: %s, far-well fraction at the end %.3f",
                n_samples, r.classical_keeps_sign ? "yes" : "no", late);
  return {n_samples >= 1000 && r.classical_keeps_sign && late > 0.0 && late < 0.5, buf};
}

Verdict sse_correctness() {
  // (a) k = 0 against plain split-operator steps
  auto c = default_measurement(2.0);
  c.k = 0.0;
  c.dt = 0.005;
  MeasuredInitial init;
  init.z0 = 3.0;
  Grid g = measurement_grid(c, init);
  auto psi0 = measured_initial_state(c, init, g);
  TrajectoryOptions opt;
  opt.sample_every = 1 << 30;
  SpinorWavefunction a;
  run_trajectory(psi0, c, opt, brownian_increments(1, c.dt, 400), &a);
  auto u = psi0;
  const auto P = hamiltonian_eq6(c, g);
  for (int s = 0; s < 400; ++s) P.step_kvk(u);
  const double diff = (a.psi - u.psi).norm() * std::sqrt(g.dz());

  // (b) strong self-convergence on shared paths, reference at dt = 2^-14
  auto m = default_measurement(0.5);
  m.b = 0.0;
  m.delta_z = 0.0;
  MeasuredInitial mi;
  mi.z0 = 2.0;
  g = measurement_grid(m, mi);
  psi0 = measured_initial_state(m, mi, g);
  const int lref = 14, npath = 24;
  std::vector<double> err(5, 0.0);
  TrajectoryOptions o;
  o.sample_every = 1 << 30;
  o.prune_threshold = 0;
  for (int path = 0; path < npath; ++path) {
    const double dtr = std::ldexp(1.0, -lref);
    const auto dw = brownian_increments(1000 + path, dtr, 1L << lref);
    auto cc = m;
    cc.dt = dtr;
    SpinorWavefunction ref;
    run_trajectory(psi0, cc, o, dw, &ref);
    for (int l = 8; l <= 12; ++l) {
      cc.dt = std::ldexp(1.0, -l);
      SpinorWavefunction w;
      run_trajectory(psi0, cc, o, coarsen(dw, 1 << (lref - l)), &w);
      err[l - 8] += (w.psi - ref.psi).squaredNorm() * g.dz();
    }
  }
  std::vector<double> lx, ly;
  for (int l = 8; l <= 12; ++l) {
    lx.push_back(std::log(std::ldexp(1.0, -l)));
    ly.push_back(0.5 * std::log(err[l - 8] / npath));
  }
  const double order = slope(lx, ly);

  // (c) b = c = 0 conditional covariances relax to the Riccati fixed point
  auto f = default_measurement(0.5);
  f.b = 0.0;
  f.delta_z = 0.0;
  f.dt = 0.002;
  f.seed = 7;
  Grid box;
  box.n = 256;
  box.length = 40;
  box.z0 = -20;
  SpinorWavefunction w(box, 0.5);
  for (int j = 0; j < box.n; ++j) w.psi(j, 0) = std::exp(-box.z(j) * box.z(j) / 8.0);  // V_z = 2
  w.normalize();
  TrajectoryOptions fo;
  fo.t_final = 10.0;
  fo.sample_every = 5000;
  const auto tr = run_trajectory(w, f, fo);
  const auto fp = measured_oscillator_fixed_point(f.mass, f.omega, f.k);
  const double ev = std::max({std::abs(tr.Vz.back() / fp.Vz - 1), std::abs(tr.Czp.back() / fp.Czp - 1),
                              std::abs(tr.Vp.back() / fp.Vp - 1)});

  char buf[240];
  std::snprintf(buf, sizeof buf,
                "(a) k=0 diff %.1e (<= 1e-10); (b) strong order %.3f (1 +- 0.15); (c) worst fixed-point error %.2e "
                "(<= 1e-2)",
                diff, order, ev);
  return {diff <= 1e-10 && std::abs(order - 1.0) <= 0.15 && ev <= 0.01, buf};
}

Verdict moment_consistency() {
  auto cfg = default_measurement(2.0);
  const Grid g = measurement_grid(cfg, MeasuredInitial{});
  std::vector<double> lx, ly;
  for (double dt : {4e-3, 2e-3, 1e-3, 5e-4, 2.5e-4}) {
    cfg.dt = dt;
    SseStepper st(cfg, g);
    SplitMix64 rng(5);
    NormalStream nrm{SplitMix64(6)};
    double acc = 0;
    const int n = 300;
    for (int s = 0; s < n; ++s) {
      // random chirped, spin-correlated Gaussians
      const double zc = 6 * (rng.uniform() - 0.5), p0 = 6 * (rng.uniform() - 0.5);
      const double sig = 0.4 + 0.8 * rng.uniform(), chirp = 2 * (rng.uniform() - 0.5);
      const Eigen::VectorXcd sp = spin_coherent_state(cfg.J, kPi / 2, 2 * kPi * rng.uniform());
      const double lam = 2 * (rng.uniform() - 0.5);
      SpinorWavefunction w(g, cfg.J);
      for (int i = 0; i < w.dim(); ++i) {
        const double mz = cfg.J - i;
        for (int j = 0; j < g.n; ++j) {
          const double x = g.z(j) - zc - lam * mz;
          w.psi(j, i) = sp(i) * std::exp(-x * x / (4 * sig * sig) * cplx(1, chirp) + kI * p0 * g.z(j));
        }
      }
      w.normalize();
      const double dW = std::sqrt(dt) * nrm();
      const auto m0 = moments(w);
      const auto pred = moment_increments(w, cfg, dW);
      st.step(w, dW);
      const auto m1 = moments(w);
      const double r[3] = {m1.z - m0.z - pred.dz, m1.p - m0.p - pred.dp, m1.Jz - m0.Jz - pred.dJz};
      acc += r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    }
    lx.push_back(std::log(dt));
    ly.push_back(0.5 * std::log(acc / n));
  }
  const double order = slope(lx, ly);
  char buf[160];
  std::snprintf(buf, sizeof buf, "rms residual at dt=2.5e-4: %.2e, refinement slope %.3f (1.5 +- 0.15)",
                std::exp(ly.back()), order);
  return {std::abs(order - 1.5) <= 0.15, buf};
}

Verdict quantum_classical_transition() {
  const Scenario s = shipped("fig3.json");
  const auto& p = s.measure;
  const auto split = split_test(s.measurement, p.split_seeds, p.split_periods, s.seed, s.threads);
  const auto pts = measured_sweep(s.measurement, p, s.seed, s.threads);
  const int viol = monotonicity_violations(pts);
  std::string means;
  for (const auto& pt : pts) {
    char b[64];
    std::snprintf(b, sizeof b, " J=%g:%.4f+-%.4f", pt.J, pt.mean, pt.se);
    means += b;
  }
  bool at_wells = true;
  for (double z : split.final_z) at_wells = at_wells && std::abs(std::abs(z) - split.delta_z) < 0.2 * split.delta_z;
  char buf[200];
  std::snprintf(buf, sizeof buf, "split %d/%d (%.2f sigma, <= 5), all at +-dz: %s, violations %d (0);", split.left,
                split.right, split.sigma_from_even, at_wells ? "yes" : "no", viol);
  return {std::abs(split.sigma_from_even) <= 5 && split.left + split.right == p.split_seeds && at_wells && viol == 0,
          buf + means};
}

Verdict riccati_closure() {
  const Scenario s = shipped("riccati_check.json");
  const auto& p = s.measure;
  const auto v = riccati_validation(s.measurement, p.riccati_J, p.riccati_trajectories, p.riccati_t_final,
                                    p.riccati_checkpoints, s.seed, s.threads);
  char buf[200];
  std::snprintf(buf, sizeof buf, "J=%g, %d trajectories, %zu checkpoints x 6 entries, worst |z| %.2f (<= 3)", v.J,
                v.trajectories, v.t.size(), v.worst_z);
  return {v.trajectories >= 500 && static_cast<int>(v.t.size()) >= 10 && v.worst_z <= 3.0, buf};
}

Verdict lyapunov_discrimination() {
  const Scenario s = shipped("lyapunov.json");
  const auto r = lyapunov_scan(s);
  const double mean = std::accumulate(r.exponents.begin(), r.exponents.end(), 0.0) / r.exponents.size();
  double dev = 0;
  bool positive = true;
  for (double e : r.exponents) {
    dev = std::max(dev, std::abs(e / mean - 1));
    positive = positive && e > 0;
  }
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "chaotic %.4f w0 over %zu windows (max deviation %.1e <= 0.1), integrable %.1e w0 (<= 1e-3)", mean,
                r.exponents.size(), dev, r.integrable_exponent);
  return {positive && dev <= 0.1 && r.has_integrable && r.integrable_exponent <= 1e-3, buf};
}

}  // namespace

int main(int argc, char** argv) {
  // optional arguments select criteria, e.g. "acceptance 1 3"
  std::vector<bool> want(11, argc == 1);
  for (int i = 1; i < argc; ++i) {
    const int n = std::atoi(argv[i]);
    if (n >= 1 && n <= 10) want[n] = true;
  }
  int failed = 0, ran = 0;
  auto report = [&](int n, const std::function<Verdict()>& f) {
    if (!want[n]) return;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = f();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d: %s  %s  [%.0f s]\n", n, v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !v.pass;
  };

  report(1, integrable_conservation);
  report(2, pendulum_law);
  report(3, section_landmarks);
  if (want[4] || want[5]) {
    const Scenario s = shipped("fig2_transport.json");
    TransportResult r;
    std::string err;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      r = transport_compare(s);
    } catch (const std::exception& e) {
      err = e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(4, [&] {
      if (!err.empty()) return Verdict{false, "exception: " + err};
      Verdict v = quantum_transport(r);
      v.detail += " (shared transport run " + std::to_string(std::lround(secs)) + " s)";
      return v;
    });
    report(5, [&] {
      return err.empty() ? classical_contrast(r, s.transport.n_samples) : Verdict{false, "exception: " + err};
    });
  }
  report(6, sse_correctness);
  report(7, moment_consistency);
  report(8, quantum_classical_transition);
  report(9, riccati_closure);
  report(10, lyapunov_discrimination);
  std::printf("%d of %d criteria failed\n", failed, ran);
  return failed ? 1 : 0;
}
