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

#include "molat/measurement.hpp"

#include <algorithm>
#include <cmath>

#include "molat/rng.hpp"

namespace molat {

double MeasurementConfig::zg() const { return std::sqrt(1.0 / (2.0 * mass * omega)); }

MeasurementConfig MeasurementConfig::resolved() const {
  MeasurementConfig r = *this;
  if (std::isnan(r.delta_z)) r.delta_z = 15.0 * zg();
  if (std::isnan(r.k)) r.k = omega / (2.0 * zg() * zg());
  if (std::isnan(r.b)) r.b = mass * omega * omega * r.delta_z;
  return r;
}

void MeasurementConfig::validate() const {
  if (!(omega > 0) || !std::isfinite(omega)) throw ConfigError("measurement: omega must be positive");
  if (!(mass > 0) || !std::isfinite(mass)) throw ConfigError("measurement: mass must be positive");
  if (!valid_spin(J)) throw ConfigError("measurement: J must be a positive multiple of 1/2");
  if (!(k >= 0) || !std::isfinite(k)) throw ConfigError("measurement: k must be non-negative");
  if (!(dt > 0) || !std::isfinite(dt)) throw ConfigError("measurement: dt must be positive");
  if (!std::isfinite(b) || !std::isfinite(c) || !std::isfinite(delta_z))
    throw ConfigError("measurement: b, c and delta_z must be finite");
}

MeasurementConfig default_measurement(double J) {
  MeasurementConfig cfg;
  cfg.J = J;
  return cfg.resolved();
}

Grid measurement_grid(const MeasurementConfig& cfg_in, const MeasuredInitial& init, int min_n) {
  const MeasurementConfig cfg = cfg_in.resolved();
  const double mw = cfg.mass * cfg.omega;
  const double zg = cfg.zg();
  const double amp = std::hypot(init.z0, init.p0 / mw);
  const double half = amp + 2.0 * std::abs(cfg.delta_z) + 12.0 * zg;
  double sigma_p = 1.0 / (2.0 * zg);
  if (cfg.k > 0) sigma_p = std::max(sigma_p, std::sqrt(measured_oscillator_fixed_point(cfg.mass, cfg.omega, cfg.k).Vp));
  const double p_need = mw * (amp + 2.0 * std::abs(cfg.delta_z)) + 12.0 * sigma_p;
  Grid g;
  g.length = 2.0 * half;
  g.z0 = -half;
  g.n = std::max(min_n, 16);
  while (g.n * kPi / g.length < p_need) g.n *= 2;
  return g;
}

SpinorWavefunction measured_initial_state(const MeasurementConfig& cfg_in, const MeasuredInitial& init,
                                          const Grid& grid) {
  const MeasurementConfig cfg = cfg_in.resolved();
  const double zg = cfg.zg();
  SpinorWavefunction w(grid, cfg.J);
  const Eigen::VectorXcd spin = spin_coherent_state(cfg.J, init.theta, init.phi);
  Eigen::VectorXcd phi(grid.n);
  for (int j = 0; j < grid.n; ++j) {
    const double x = grid.z(j) - init.z0;
    phi(j) = std::exp(-x * x / (4.0 * zg * zg) + kI * (init.p0 * grid.z(j)));
  }
  w.psi = phi * spin.transpose();
  w.normalize();
  return w;
}

SpinorPropagator hamiltonian_eq6(const MeasurementConfig& cfg_in, const Grid& grid) {
  const MeasurementConfig cfg = cfg_in.resolved();
  cfg.validate();
  const double need = std::abs(cfg.delta_z) + 6.0 * cfg.zg();
  if (grid.z0 > -need || grid.z(grid.n - 1) < need)
    throw ConfigError("hamiltonian_eq6: grid does not contain the displaced wells +-delta_z");
  std::vector<double> s(grid.n), hx(grid.n, cfg.c / cfg.J), hz(grid.n);
  const double mw2 = cfg.mass * cfg.omega * cfg.omega;
  for (int j = 0; j < grid.n; ++j) {
    const double z = grid.z(j);
    s[j] = 0.5 * mw2 * z * z;
    hz[j] = cfg.b * z / cfg.J;
  }
  return SpinorPropagator(grid, cfg.J, std::move(s), std::move(hx), std::move(hz), 0.5 / cfg.mass, cfg.dt);
}

SseStepper::SseStepper(const MeasurementConfig& cfg, const Grid& grid, SseScheme scheme)
    : cfg_(cfg.resolved()), prop_(hamiltonian_eq6(cfg_, grid)), scheme_(scheme) {}

SseIncrement SseStepper::measure_and_potential(SpinorWavefunction& w, double dW) {
  const Grid& g = w.grid;
  const double k = cfg_.k, dt = cfg_.dt;
  const double c = w.expect_z();
  if (k > 0) {
    const double s2k = std::sqrt(2.0 * k);
    Eigen::VectorXd f(g.n);
    for (int j = 0; j < g.n; ++j) {
      const double x = g.z(j) - c;
      switch (scheme_) {
        case SseScheme::kExponential:
          f(j) = std::exp(s2k * x * dW - 2.0 * k * x * x * dt);
          break;
        case SseScheme::kMilstein:
          f(j) = 1.0 - k * x * x * dt + s2k * x * dW + k * x * x * (dW * dW - dt);
          break;
        case SseScheme::kEulerMaruyama:
          f(j) = 1.0 - k * x * x * dt + s2k * x * dW;
          break;
      }
    }
    for (int i = 0; i < w.dim(); ++i) {
      if (!active_.empty() && !active_[i]) continue;
      w.psi.col(i).array() *= f.array();
    }
    const double n2 = w.psi.squaredNorm() * g.dz();
    if (!(n2 > 1e-300) || !std::isfinite(n2)) throw NumericalError("sse_step: norm collapsed; reduce dt");
    w.psi /= std::sqrt(n2);
  }
  prop_.potential_step(w, 1.0);
  return {dW, k > 0 ? c * dt + dW / std::sqrt(8.0 * k) : c * dt};
}

SseIncrement SseStepper::step(SpinorWavefunction& w, double dW) {
  prop_.kinetic_step(w, 0.5);
  const SseIncrement inc = measure_and_potential(w, dW);
  prop_.kinetic_step(w, 0.5);
  return inc;
}

SseIncrement SseStepper::advance(SpinorWavefunction& w, double dW) {
  const SseIncrement inc = measure_and_potential(w, dW);
  prop_.kinetic_step(w, 1.0);
  return inc;
}

SpinorWavefunction SseStepper::boundary(const SpinorWavefunction& w) const {
  SpinorWavefunction b = w;
  close(b);
  return b;
}

void SseStepper::prune(SpinorWavefunction& w, double threshold) {
  if (cfg_.c != 0.0 || !(threshold > 0)) return;
  if (active_.empty()) active_.assign(w.dim(), 1);
  const auto pop = w.populations();
  bool changed = false;
  for (int i = 0; i < w.dim(); ++i)
    if (active_[i] && pop[i] < threshold) {
      w.psi.col(i).setZero();
      active_[i] = 0;
      changed = true;
    }
  if (changed) {
    prop_.set_active(active_);
    w.normalize();
  }
}

Moments moments(const SpinorWavefunction& w) {
  const Grid& g = w.grid;
  const int n = g.n;
  const double dz = g.dz();
  const double J = w.F;
  FftPlan plan(n, 1);
  Eigen::VectorXcd buf(n);
  double sz = 0, szz = 0, sp = 0, spp = 0, szp = 0, sJ = 0, sJJ = 0, szJ = 0, spJ = 0;
  for (int i = 0; i < w.dim(); ++i) {
    const auto col = w.psi.col(i);
    const double pop = col.squaredNorm() * dz;
    if (pop == 0.0) continue;
    const double m = J - i;
    double cz = 0, czz = 0;
    for (int j = 0; j < n; ++j) {
      const double r = std::norm(col(j)) * dz;
      cz += g.z(j) * r;
      czz += g.z(j) * g.z(j) * r;
    }
    buf = col;
    plan.forward_column(buf.data());
    double cp = 0, cpp = 0;
    for (int j = 0; j < n; ++j) {
      const double r = std::norm(buf(j)) * dz / n;
      cp += g.p(j) * r;
      cpp += g.p(j) * g.p(j) * r;
      buf(j) *= g.p(j);
    }
    plan.backward_column(buf.data());
    double czp = 0;
    for (int j = 0; j < n; ++j) czp += g.z(j) * std::real(std::conj(col(j)) * buf(j));
    czp *= dz;
    sz += cz;
    szz += czz;
    sp += cp;
    spp += cpp;
    szp += czp;
    sJ += m * pop;
    sJJ += m * m * pop;
    szJ += m * cz;
    spJ += m * cp;
  }
  // <J+> = sum_m sqrt(J(J+1) - m(m+1)) <m+1|m> component overlaps
  cplx jp = 0;
  for (int i = 1; i < w.dim(); ++i) {
    const double m = J - i;
    jp += std::sqrt(J * (J + 1) - m * (m + 1)) * w.psi.col(i - 1).dot(w.psi.col(i));
  }
  jp *= dz;
  Moments out;
  out.z = sz;
  out.p = sp;
  out.Jz = sJ;
  out.Jx = jp.real();
  out.Jy = jp.imag();
  out.C(0, 0) = szz - sz * sz;
  out.C(1, 1) = spp - sp * sp;
  out.C(2, 2) = sJJ - sJ * sJ;
  out.C(0, 1) = out.C(1, 0) = szp - sz * sp;
  out.C(0, 2) = out.C(2, 0) = szJ - sz * sJ;
  out.C(1, 2) = out.C(2, 1) = spJ - sp * sJ;
  return out;
}

namespace {

template <class Noise>
MeasuredTrajectory evolve(const SpinorWavefunction& psi0, const MeasurementConfig& cfg, const TrajectoryOptions& opt,
                          long steps, Noise&& noise_of, SpinorWavefunction* final_state) {
  SseStepper stepper(cfg, psi0.grid, opt.scheme);
  SpinorWavefunction w = psi0;
  w.normalize();
  const int every = std::max(1, opt.sample_every);
  MeasuredTrajectory tr;
  double rec = 0.0, noise = 0.0;
  auto sample = [&](long s) {
    const Moments mo = moments(stepper.boundary(w));
    tr.t.push_back(s * cfg.dt);
    tr.z.push_back(mo.z);
    tr.p.push_back(mo.p);
    tr.Jz.push_back(mo.Jz);
    tr.Jx.push_back(mo.Jx);
    tr.Vz.push_back(mo.C(0, 0));
    tr.Vp.push_back(mo.C(1, 1));
    tr.VJz.push_back(mo.C(2, 2));
    tr.Czp.push_back(mo.C(0, 1));
    tr.CzJz.push_back(mo.C(0, 2));
    tr.CpJz.push_back(mo.C(1, 2));
    tr.record.push_back(rec);
    tr.dW.push_back(noise);
    rec = noise = 0.0;
  };
  const bool prune = cfg.c == 0.0 && opt.prune_threshold > 0;
  if (prune) stepper.prune(w, opt.prune_threshold);
  stepper.open(w);
  sample(0);
  for (long s = 1; s <= steps; ++s) {
    const SseIncrement inc = stepper.advance(w, noise_of(s - 1));
    rec += inc.record;
    noise += inc.dW;
    if (prune && opt.prune_every > 0 && s % opt.prune_every == 0) stepper.prune(w, opt.prune_threshold);
    if (s % every == 0 || s == steps) sample(s);
  }
  stepper.close(w);
  tr.final_populations = w.populations();
  if (final_state) *final_state = std::move(w);
  return tr;
}

}  // namespace

MeasuredTrajectory run_trajectory(const SpinorWavefunction& psi0, const MeasurementConfig& cfg_in,
                                  const TrajectoryOptions& opt) {
  const MeasurementConfig cfg = cfg_in.resolved();
  NormalStream normal{SplitMix64(cfg.seed)};
  const double sdt = std::sqrt(cfg.dt);
  return evolve(psi0, cfg, opt, std::lround(opt.t_final / cfg.dt), [&](long) { return sdt * normal(); }, nullptr);
}

MeasuredTrajectory run_trajectory(const SpinorWavefunction& psi0, const MeasurementConfig& cfg_in,
                                  const TrajectoryOptions& opt, const std::vector<double>& dW_path,
                                  SpinorWavefunction* final_state) {
  const MeasurementConfig cfg = cfg_in.resolved();
  return evolve(psi0, cfg, opt, static_cast<long>(dW_path.size()), [&](long s) { return dW_path[s]; }, final_state);
}

std::vector<double> brownian_increments(std::uint64_t seed, double dt, long n) {
  NormalStream normal{SplitMix64(seed)};
  std::vector<double> out(n);
  const double sdt = std::sqrt(dt);
  for (auto& x : out) x = sdt * normal();
  return out;
}

std::vector<double> coarsen(const std::vector<double>& dW, int factor) {
  if (factor < 1 || dW.size() % factor != 0) throw ConfigError("coarsen: path length must be a multiple of the factor");
  std::vector<double> out(dW.size() / factor, 0.0);
  for (std::size_t i = 0; i < dW.size(); ++i) out[i / factor] += dW[i];
  return out;
}

MomentIncrements moment_increments(const SpinorWavefunction& w, const MeasurementConfig& cfg_in, double dW) {
  const MeasurementConfig cfg = cfg_in.resolved();
  const Moments mo = moments(w);
  const double s8k = std::sqrt(8.0 * cfg.k), dt = cfg.dt;
  MomentIncrements r;
  r.dz = mo.p / cfg.mass * dt + s8k * mo.C(0, 0) * dW;
  r.dp = (-cfg.mass * cfg.omega * cfg.omega * mo.z - cfg.b / cfg.J * mo.Jz) * dt + s8k * mo.C(0, 1) * dW;
  r.dJz = s8k * mo.C(0, 2) * dW;
  r.jz_drift = cfg.c / cfg.J * mo.Jy * dt;
  return r;
}

std::vector<ClassicalMeasuredPoint> classical_reference(const MeasurementConfig& cfg_in, double z0, double p0,
                                                        const Vec3& n0, double t_final, int sample_every) {
  const MeasurementConfig cfg = cfg_in.resolved();
  struct S {
    double z, p;
    Vec3 n;
  };
  const double mw2 = cfg.mass * cfg.omega * cfg.omega;
  auto f = [&](const S& s) {
    const Vec3 om(cfg.c / cfg.J, 0.0, cfg.b * s.z / cfg.J);
    return S{s.p / cfg.mass, -mw2 * s.z - cfg.b * s.n.z(), om.cross(s.n)};
  };
  auto axpy = [](const S& a, double h, const S& d) { return S{a.z + h * d.z, a.p + h * d.p, a.n + h * d.n}; };
  S s{z0, p0, n0.normalized()};
  const double dt = cfg.dt;
  const long steps = std::lround(t_final / dt);
  const int every = std::max(1, sample_every);
  std::vector<ClassicalMeasuredPoint> out;
  out.push_back({0.0, s.z, s.p, s.n});
  for (long i = 1; i <= steps; ++i) {
    const S k1 = f(s), k2 = f(axpy(s, dt / 2, k1)), k3 = f(axpy(s, dt / 2, k2)), k4 = f(axpy(s, dt, k3));
    s.z += dt / 6 * (k1.z + 2 * k2.z + 2 * k3.z + k4.z);
    s.p += dt / 6 * (k1.p + 2 * k2.p + 2 * k3.p + k4.p);
    s.n += dt / 6 * (k1.n + 2 * k2.n + 2 * k3.n + k4.n);
    s.n.normalize();
    if (i % every == 0 || i == steps) out.push_back({i * dt, s.z, s.p, s.n});
  }
  return out;
}

}  // namespace molat
