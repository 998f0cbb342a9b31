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

#include "molat/quantum.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/minima.hpp>

namespace molat {

Grid default_lattice_grid(int n, int periods) {
  Grid g;
  g.n = n;
  g.length = periods * kPi;
  g.z0 = 0.5 * kPi - 0.5 * g.length;
  return g;
}

SpinorPropagator lattice_propagator(const LatticeConfig& cfg, const Grid& grid, double dt) {
  std::vector<double> s(grid.n), hx(grid.n), hz(grid.n);
  const double c = -cfg.gyro_sign / cfg.F;
  for (int j = 0; j < grid.n; ++j) {
    const double z = grid.z(j);
    const FieldVector b = effective_field(z, cfg);
    s[j] = scalar_potential(z, cfg);
    hx[j] = c * b.bx;
    hz[j] = c * b.bz;
  }
  return SpinorPropagator(grid, cfg.F, std::move(s), std::move(hx), std::move(hz), 1.0, dt);
}

SpinorWavefunction split_step(const SpinorWavefunction& psi, const LatticeConfig& cfg, double dt) {
  if (!(dt > 0.0)) throw ConfigError("split_step: dt must be positive");
  const SpinorPropagator prop = lattice_propagator(cfg, psi.grid, dt);
  SpinorWavefunction out = psi;
  prop.step(out);
  return out;
}

std::vector<double> brillouin_zone(int n_q) {
  std::vector<double> q(n_q);
  for (int i = 0; i < n_q; ++i) q[i] = -1.0 + 2.0 * i / n_q;
  return q;
}

namespace {

struct BandSolve {
  std::vector<double> e;
  Eigen::MatrixXcd v;
  double edge_weight;
};

BandSolve solve_q(const LatticeConfig& cfg, int jmax, double q, int n_bands, bool vectors) {
  const auto S = spin_matrices(cfg.F);
  const int d = S->dim, npw = 2 * jmax + 1, n = npw * d;
  const double c = -cfg.gyro_sign / cfg.F;
  const Eigen::MatrixXcd zeeman = c * (cfg.Bx * S->Fx + cfg.Bz * S->Fz);
  // <j+1|H|j>: e^{2iz} parts of U_J and of the fictitious field
  const Eigen::MatrixXcd X = cfg.U0 * std::cos(cfg.theta_L) * Eigen::MatrixXcd::Identity(d, d) +
                             (c * -cfg.U0 * std::sin(cfg.theta_L) / (2.0 * kI)) * S->Fz;
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(n, n);
  for (int a = 0; a < npw; ++a) {
    const double k = q + 2.0 * (a - jmax);
    H.block(a * d, a * d, d, d) = zeeman;
    H.block(a * d, a * d, d, d).diagonal().array() += k * k;
    if (a + 1 < npw) {
      H.block((a + 1) * d, a * d, d, d) = X;
      H.block(a * d, (a + 1) * d, d, d) = X.adjoint();
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
  BandSolve r;
  r.e.assign(es.eigenvalues().data(), es.eigenvalues().data() + n_bands);
  r.edge_weight = 0.0;
  for (int b = 0; b < n_bands; ++b) {
    const auto col = es.eigenvectors().col(b);
    const double w = col.head(d).squaredNorm() + col.tail(d).squaredNorm();
    r.edge_weight = std::max(r.edge_weight, w);
  }
  if (vectors) r.v = es.eigenvectors().leftCols(n_bands);
  return r;
}

}  // namespace

BandStructure band_structure(const LatticeConfig& cfg, int n_plane_waves, const std::vector<double>& q_list,
                             int n_bands, bool keep_vectors) {
  if (n_plane_waves != 0 && (n_plane_waves < 1 || n_plane_waves % 2 == 0))
    throw ConfigError("band_structure: n_plane_waves must be odd");
  const auto S = spin_matrices(cfg.F);
  if (n_bands < 1) throw ConfigError("band_structure: need at least one band");
  const bool automatic = n_plane_waves == 0;
  int jmax = automatic
                 ? std::max(6, static_cast<int>(std::ceil(
                                   0.5 * std::sqrt(2.0 * cfg.U0 + std::hypot(cfg.Bx, cfg.Bz) + 4.0 * n_bands))) + 6)
                 : (n_plane_waves - 1) / 2;
  for (;;) {
    if ((2 * jmax + 1) * S->dim < n_bands) throw ConfigError("band_structure: basis smaller than band count");
    BandStructure bs;
    bs.n_plane_waves = 2 * jmax + 1;
    bs.dim = S->dim;
    bool ok = true;
    for (double q : q_list) {
      BandSolve r = solve_q(cfg, jmax, q, n_bands, keep_vectors);
      if (r.edge_weight > 1e-8) {
        ok = false;
        break;
      }
      bs.q.push_back(q);
      bs.energies.push_back(std::move(r.e));
      if (keep_vectors) bs.vectors.push_back(std::move(r.v));
    }
    if (ok) return bs;
    if (!automatic) throw NumericalError("band_structure: basis too small (edge plane waves carry > 1e-8)");
    jmax += 4;
    if (jmax > 200) throw NumericalError("band_structure: basis did not converge");
  }
}

SpinorWavefunction bloch_on_grid(const Eigen::VectorXcd& c, double q, int n_plane_waves, double F,
                                 const Grid& grid) {
  SpinorWavefunction w(grid, F);
  const int d = w.dim(), jmax = (n_plane_waves - 1) / 2;
  const double inv = 1.0 / std::sqrt(grid.length);
  for (int a = 0; a < n_plane_waves; ++a) {
    const double k = q + 2.0 * (a - jmax);
    for (int j = 0; j < grid.n; ++j) {
      const cplx e = std::exp(kI * (k * grid.z(j))) * inv;
      for (int i = 0; i < d; ++i) w.psi(j, i) += c(a * d + i) * e;
    }
  }
  return w;
}

double left_well_population(const SpinorWavefunction& w) {
  const Eigen::VectorXd rho = w.density();
  double s = 0.0;
  for (int j = 0; j < w.grid.n; ++j) {
    double r = std::fmod(w.grid.z(j), kPi);
    if (r < 0) r += kPi;
    if (r < 0.5 * kPi) s += rho(j);
  }
  return s * w.grid.dz();
}

LeftLocalized prepare_left_localized(const LatticeConfig& cfg, const Grid& grid) {
  if (!analyze_double_well(cfg).is_double_well)
    throw ConfigError("prepare_left_localized: lowest adiabatic surface is not a double well");
  const BandStructure bs = band_structure(cfg, 0, {0.0}, 3, true);
  const auto& e = bs.energies[0];
  if (!(e[1] - e[0] < e[2] - e[1]))
    throw NumericalError("prepare_left_localized: two lowest levels are not a tunneling doublet");
  const SpinorWavefunction b0 = bloch_on_grid(bs.vectors[0].col(0), 0.0, bs.n_plane_waves, cfg.F, grid);
  const SpinorWavefunction b1 = bloch_on_grid(bs.vectors[0].col(1), 0.0, bs.n_plane_waves, cfg.F, grid);
  const auto S = spin_matrices(cfg.F);
  cplx cross = 0.0;
  for (int i = 0; i < b0.dim(); ++i) cross += S->m(i) * b0.psi.col(i).dot(b1.psi.col(i));
  const cplx phase = std::abs(cross) > 0 ? std::conj(cross) / std::abs(cross) : cplx(1.0);
  LeftLocalized out{SpinorWavefunction(grid, cfg.F), e[0], e[1], e[2], e[1] - e[0], 0.0};
  out.psi.psi = b0.psi + phase * b1.psi;
  for (int j = 0; j < grid.n; ++j) {
    const double z = grid.z(j);
    if (z < 0.0 || z >= kPi) out.psi.psi.row(j).setZero();
  }
  out.psi.normalize();
  out.left_population = left_well_population(out.psi);
  return out;
}

double zone_averaged_splitting(const LatticeConfig& cfg, int n_q) {
  if (n_q < 1) throw ConfigError("zone_averaged_splitting: n_q must be positive");
  const BandStructure bs = band_structure(cfg, 0, brillouin_zone(n_q), 2);
  double sum = 0.0;
  for (const auto& e : bs.energies) sum += e[1] - e[0];
  return sum / n_q;
}

MagnetizationSeries magnetization_series(const SpinorWavefunction& psi0, const LatticeConfig& cfg, double dt,
                                         double t_final, int sample_every) {
  if (!(dt > 0.0)) throw ConfigError("magnetization_series: dt must be positive");
  const SpinorPropagator prop = lattice_propagator(cfg, psi0.grid, dt);
  SpinorWavefunction w = psi0;
  MagnetizationSeries ms;
  const long n = std::lround(t_final / dt);
  ms.t.push_back(0.0);
  ms.Fz.push_back(w.expect_Fz());
  for (long i = 1; i <= n; ++i) {
    prop.step(w);
    if (i % sample_every == 0) {
      ms.t.push_back(i * dt);
      ms.Fz.push_back(w.expect_Fz());
      if (!std::isfinite(ms.Fz.back())) throw NumericalError("magnetization_series: non-finite state");
    }
  }
  return ms;
}

namespace {

// Residual sum of squares of the best (1, cos wt, sin wt) fit.
double fit_at(const std::vector<double>& t, const std::vector<double>& y, double w, Eigen::Vector3d* coef) {
  Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const Eigen::Vector3d f(1.0, std::cos(w * t[i]), std::sin(w * t[i]));
    A += f * f.transpose();
    b += f * y[i];
  }
  const Eigen::Vector3d c = A.ldlt().solve(b);
  double ss = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = y[i] - c(0) - c(1) * std::cos(w * t[i]) - c(2) * std::sin(w * t[i]);
    ss += r * r;
  }
  if (coef) *coef = c;
  return ss;
}

}  // namespace

SinusoidFit fit_sinusoid(const std::vector<double>& t, const std::vector<double>& y, double omega_lo,
                         double omega_hi) {
  const int n_scan = 4000;
  double best_w = omega_lo, best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n_scan; ++i) {
    const double w = omega_lo + (omega_hi - omega_lo) * i / n_scan;
    const double ss = fit_at(t, y, w, nullptr);
    if (ss < best) {
      best = ss;
      best_w = w;
    }
  }
  const double h = (omega_hi - omega_lo) / n_scan;
  auto [w, ss] = boost::math::tools::brent_find_minima([&](double x) { return fit_at(t, y, x, nullptr); },
                                                       std::max(omega_lo, best_w - h), std::min(omega_hi, best_w + h),
                                                       50);
  Eigen::Vector3d c;
  fit_at(t, y, w, &c);
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= y.size();
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  SinusoidFit f;
  f.omega = w;
  f.offset = c(0);
  f.amplitude = std::hypot(c(1), c(2));
  f.phase = std::atan2(-c(2), c(1));
  f.residual = var > 0 ? std::sqrt(ss / var) : 0.0;
  return f;
}

AdiabaticDecomposition adiabatic_decomposition(const SpinorWavefunction& w, const LatticeConfig& cfg) {
  const int d = w.dim(), n = w.grid.n;
  const SpinorPropagator prop = lattice_propagator(cfg, w.grid, 1.0);
  const Eigen::MatrixXcd Hpsi = prop.apply_hamiltonian(w);
  AdiabaticDecomposition r;
  r.population.assign(d, 0.0);
  r.mean_energy.assign(d, 0.0);
  std::vector<double> proj_energy(d, 0.0);
  for (int j = 0; j < n; ++j) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(potential_matrix(w.grid.z(j), cfg));
    const Eigen::VectorXcd psi = w.psi.row(j).transpose();
    const Eigen::VectorXcd hp = Hpsi.row(j).transpose();
    for (int s = 0; s < d; ++s) {
      const auto v = es.eigenvectors().col(s);
      const cplx a = v.dot(psi);
      r.population[s] += std::norm(a);
      // <P_s psi | H psi> = conj(a) <v_s|H psi>
      proj_energy[s] += (std::conj(a) * v.dot(hp)).real();
    }
  }
  const double dz = w.grid.dz();
  double tot = 0.0;
  for (int s = 0; s < d; ++s) {
    r.population[s] *= dz;
    proj_energy[s] *= dz;
    tot += proj_energy[s];
    r.mean_energy[s] = r.population[s] > 0 ? proj_energy[s] / r.population[s] : 0.0;
  }
  r.total_energy = tot;
  r.barrier.resize(d);
  for (int s = 0; s < d; ++s) {
    auto V = [&](double z) { return -adiabatic_potentials(z, cfg)[s]; };
    r.barrier[s] = -boost::math::tools::brent_find_minima(V, 0.25 * kPi, 0.75 * kPi, 50).second;
  }
  return r;
}

}  // namespace molat
