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

#include "molat/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "molat/manifest.hpp"
#include "molat/parallel.hpp"
#include "molat/rng.hpp"

namespace molat {

using nlohmann::json;

// --- section scan -----------------------------------------------------------

std::vector<ClassicalState> section_seeds(double E, const LatticeConfig& cfg, int n_nz, int n_phi) {
  std::vector<ClassicalState> seeds;
  for (int i = 0; i < n_nz; ++i) {
    const double nz = n_nz == 1 ? 0.0 : -0.98 + 1.96 * i / (n_nz - 1);
    for (int j = 0; j < n_phi; ++j) {
      if (auto s = seed_on_shell(nz, 2.0 * kPi * j / n_phi, E, cfg)) seeds.push_back(*s);
    }
  }
  return seeds;
}

namespace {

constexpr int kNzBins = 40;  // width 0.05 on [-1, 1]
constexpr int kPhiBins = 64;  // width pi/32 on [-pi, pi)

double wrap_phi(double phi) { return phi - 2.0 * kPi * std::floor((phi + kPi) / (2.0 * kPi)); }

int phi_distance(int a, int b) {
  const int d = std::abs(a - b) % kPhiBins;
  return std::min(d, kPhiBins - d);
}

}  // namespace

std::vector<Island> detect_islands(const PoincareSection& sec) {
  if (sec.points.empty()) return {};
  std::vector<int> H(kNzBins * kPhiBins, 0), bin_a(sec.points.size()), bin_b(sec.points.size());
  for (std::size_t i = 0; i < sec.points.size(); ++i) {
    const auto& p = sec.points[i];
    bin_a[i] = std::clamp(static_cast<int>((p.nz + 1.0) / 0.05), 0, kNzBins - 1);
    bin_b[i] = std::clamp(static_cast<int>((wrap_phi(p.phi) + kPi) / (kPi / 32)), 0, kPhiBins - 1);
    ++H[bin_a[i] * kPhiBins + bin_b[i]];
  }
  int occupied = 0;
  long total = 0;
  for (int v : H)
    if (v > 0) ++occupied, total += v;
  const double threshold = std::max(8.0, 4.0 * total / occupied);

  struct Peak {
    int a, b, count;
  };
  std::vector<Peak> peaks;
  for (int a = 0; a < kNzBins; ++a) {
    for (int b = 0; b < kPhiBins; ++b) {
      const int v = H[a * kPhiBins + b];
      if (v < threshold) continue;
      bool is_max = true;
      for (int da = -1; da <= 1 && is_max; ++da) {
        for (int db = -1; db <= 1; ++db) {
          const int a2 = a + da;
          if ((da == 0 && db == 0) || a2 < 0 || a2 >= kNzBins) continue;
          if (H[a2 * kPhiBins + (b + db + kPhiBins) % kPhiBins] > v) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) peaks.push_back({a, b, v});
    }
  }
  // Larger peaks first; ties (an island split by a bin edge) keep the first.
  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& x, const Peak& y) { return x.count > y.count; });
  std::vector<Peak> kept;
  for (const auto& p : peaks) {
    const bool near = std::any_of(kept.begin(), kept.end(), [&](const Peak& k) {
      return std::abs(k.a - p.a) <= 2 && phi_distance(k.b, p.b) <= 2;
    });
    if (!near) kept.push_back(p);
  }

  std::vector<Island> out;
  for (const auto& k : kept) {
    double snz = 0.0, sc = 0.0, ss = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < sec.points.size(); ++i) {
      if (std::abs(bin_a[i] - k.a) > 1 || phi_distance(bin_b[i], k.b) > 1) continue;
      snz += sec.points[i].nz;
      sc += std::cos(sec.points[i].phi);
      ss += std::sin(sec.points[i].phi);
      ++n;
    }
    out.push_back({snz / n, std::atan2(ss, sc), k.count});
  }
  std::sort(out.begin(), out.end(), [](const Island& x, const Island& y) { return x.nz < y.nz; });
  return out;
}

SectionResult section_scan(const Scenario& s) {
  const auto& q = s.section;
  SectionOptions opt;
  opt.n_crossings = q.n_crossings;
  opt.dt = q.dt;
  auto run = [&](double E) {
    const auto seeds = section_seeds(E, s.lattice, q.n_nz, q.n_phi);
    if (seeds.empty()) throw ConfigError("section: no seed reaches the energy shell at E = " + format_double(E));
    return poincare_section(seeds, s.lattice, opt, s.threads);
  };
  SectionResult r;
  r.section = run(q.energy);
  r.islands = detect_islands(r.section);
  for (double E : q.energy_sweep) {
    r.sweep_energy.push_back(E);
    r.sweep_islands.push_back(static_cast<int>(detect_islands(run(E)).size()));
  }
  return r;
}

// --- transport -------------------------------------------------------------------

TunnelingReport tunneling_diagnostic(const SpinorWavefunction& w, const LatticeConfig& cfg) {
  const AdiabaticDecomposition d = adiabatic_decomposition(w, cfg);
  TunnelingReport r{d.population, d.mean_energy, d.barrier, 0.0, false, false};
  for (double p : d.population) r.population_sum += p;
  r.lowest_above_barrier = d.mean_energy.size() > 0 && d.mean_energy[0] > d.barrier[0];
  r.second_forbidden = d.mean_energy.size() > 1 && d.mean_energy[1] < d.barrier[1];
  return r;
}

TransportResult transport_compare(const Scenario& s) {
  const auto& q = s.transport;
  const LatticeConfig& cfg = s.lattice;
  TransportResult r;
  const Grid grid = default_lattice_grid(q.grid_n, q.periods);
  LeftLocalized L = prepare_left_localized(cfg, grid);
  r.splitting_q0 = L.splitting;
  r.splitting_zone = zone_averaged_splitting(cfg);
  r.left_population = L.left_population;
  r.period = 2.0 * kPi / r.splitting_zone;
  const double t_final = q.t_final > 0 ? q.t_final : 2.0 * r.period;
  const long steps = std::lround(t_final / q.dt);
  const int every = q.sample_every;

  // Quantum: Strang steps with Husimi snapshots at evenly spaced steps.
  const SpinorPropagator prop = lattice_propagator(cfg, grid, q.dt);
  std::vector<long> snap_steps;
  for (int k = 0; k <= q.n_snapshots; ++k)
    snap_steps.push_back(q.n_snapshots == 0 ? 0 : std::lround(static_cast<double>(steps) * k / q.n_snapshots));
  SpinorWavefunction w = L.psi;
  std::size_t next_snap = 0;
  HusimiQ q0;
  for (long i = 0; i <= steps; ++i) {
    if (i > 0) prop.step(w);
    if (i % every == 0 || i == steps) {
      r.t.push_back(i * q.dt);
      r.Fz_quantum.push_back(w.expect_Fz());
      if (!std::isfinite(r.Fz_quantum.back())) throw NumericalError("transport: non-finite quantum state");
    }
    while (next_snap < snap_steps.size() && snap_steps[next_snap] == i) {
      HusimiQ hq = husimi_q(w, cfg);
      if (i == 0) q0 = hq;
      r.snapshot_t.push_back(i * q.dt);
      r.q_z = hq.z0;
      r.q_snapshots.push_back(hq.reduced_z());
      r.surfaces.push_back(adiabatic_decomposition(w, cfg));
      ++next_snap;
    }
  }
  if (q0.z0.empty()) q0 = husimi_q(L.psi, cfg);
  r.final_state = w;
  r.fit = fit_sinusoid(r.t, r.Fz_quantum, 0.5 * r.splitting_zone, 1.5 * r.splitting_zone);
  const double fz0 = r.Fz_quantum.front();
  r.quantum_crosses_zero = std::any_of(r.Fz_quantum.begin(), r.Fz_quantum.end(),
                                       [&](double v) { return v * fz0 < 0.0; });

  // Classical: Husimi-sampled ensemble under the same Hamiltonian. Samples
  // are integrated in fixed blocks whose partial sums are added in block
  // order, so the result does not depend on the thread count.
  const std::size_t n_t = r.t.size();
  r.Fz_classical.assign(n_t, 0.0);
  r.classical_right.assign(n_t, 0.0);
  if (q.n_samples > 0) {
    const auto samples = sample_husimi(q0, q.n_samples, s.seed, cfg.gyro_sign, &r.husimi_acceptance);
    const ClassicalStepper stepper(cfg);
    constexpr std::size_t kBlock = 64;
    const std::size_t n_blocks = (samples.size() + kBlock - 1) / kBlock;
    std::vector<std::vector<double>> fz(n_blocks, std::vector<double>(n_t, 0.0)), right = fz;
    parallel_for(n_blocks, s.threads, [&](std::size_t b) {
      for (std::size_t k = b * kBlock; k < std::min(samples.size(), (b + 1) * kBlock); ++k) {
        ClassicalState c = samples[k];
        std::size_t slot = 0;
        for (long i = 0; i <= steps; ++i) {
          if (i > 0) stepper.step(c, q.dt);
          if (i % every == 0 || i == steps) {
            fz[b][slot] += cfg.gyro_sign * c.n.z();
            const double cell = c.z - kPi * std::floor(c.z / kPi);
            if (cell >= kPi / 2) right[b][slot] += 1.0;
            ++slot;
          }
        }
        if (!std::isfinite(c.z)) throw NumericalError("transport: non-finite classical sample");
      }
    });
    // Husimi averages of the unit direction carry a factor F/(F+1).
    const double scale = (cfg.F + 1.0) / samples.size();
    for (std::size_t b = 0; b < n_blocks; ++b) {
      for (std::size_t i = 0; i < n_t; ++i) {
        r.Fz_classical[i] += fz[b][i];
        r.classical_right[i] += right[b][i];
      }
    }
    for (std::size_t i = 0; i < n_t; ++i) {
      r.Fz_classical[i] *= scale;
      r.classical_right[i] /= samples.size();
    }
    const double c0 = r.Fz_classical.front();
    r.classical_keeps_sign = true;
    for (std::size_t i = 0; i < n_t && r.t[i] <= r.period + 1e-12; ++i)
      if (!(r.Fz_classical[i] * c0 > 0.0)) r.classical_keeps_sign = false;
  }
  return r;
}

// --- measured sweep -------------------------------------------------------------------

double classicality_metric(const MeasuredTrajectory& q, const std::vector<ClassicalMeasuredPoint>& cl,
                           double amplitude) {
  const std::size_t n = std::min(q.t.size(), cl.size());
  if (n == 0 || !(amplitude > 0)) throw ConfigError("classicality_metric: empty series or zero amplitude");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(q.t[i] - cl[i].t) > 1e-9 * std::max(1.0, q.t[i]))
      throw ConfigError("classicality_metric: sample times differ");
    sum += std::abs(q.z[i] - cl[i].z);
  }
  return sum / n / amplitude;
}

std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index) {
  return SplitMix64::stream(master, index)();
}

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / v.size();
}

double standard_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / (v.size() - 1) / v.size());
}

}  // namespace

std::vector<SweepPoint> measured_sweep(const MeasurementConfig& base_in, const MeasureParams& p, std::uint64_t seed,
                                       int threads) {
  const MeasurementConfig base = base_in.resolved();
  const double amp = std::sqrt(2.0 * p.action / (base.mass * base.omega));
  const double t_final = p.periods * 2.0 * kPi / base.omega;
  MeasuredInitial init;
  init.z0 = amp;

  std::vector<SweepPoint> pts(p.J_list.size());
  struct Task {
    std::size_t j;
    int i;
  };
  std::vector<Task> tasks;
  for (std::size_t j = 0; j < p.J_list.size(); ++j) {
    MeasurementConfig cfg = base;
    cfg.J = p.J_list[j];
    pts[j].J = cfg.J;
    pts[j].metric.assign(p.n_seeds, 0.0);
    pts[j].classical = classical_reference(cfg, amp, 0.0, Vec3::UnitX(), t_final, p.sample_every);
    for (int i = 0; i < p.n_seeds; ++i) tasks.push_back({j, i});
  }
  std::vector<std::vector<double>> pops(tasks.size());
  // Most expensive (largest J) first so a pool drains evenly.
  std::stable_sort(tasks.begin(), tasks.end(), [&](const Task& a, const Task& b) { return pts[a.j].J > pts[b.j].J; });
  parallel_for(tasks.size(), threads, [&](std::size_t k) {
    const Task& t = tasks[k];
    MeasurementConfig cfg = base;
    cfg.J = pts[t.j].J;
    cfg.seed = trajectory_seed(seed, static_cast<std::uint64_t>(t.i));
    const Grid grid = measurement_grid(cfg, init);
    TrajectoryOptions opt;
    opt.t_final = t_final;
    opt.sample_every = p.sample_every;
    MeasuredTrajectory tr = run_trajectory(measured_initial_state(cfg, init, grid), cfg, opt);
    pts[t.j].metric[t.i] = classicality_metric(tr, pts[t.j].classical, amp);
    pops[k] = tr.final_populations;
    if (t.i == 0) pts[t.j].example = std::move(tr);
  });
  for (auto& pt : pts) {
    pt.mean = mean_of(pt.metric);
    pt.se = standard_error(pt.metric);
  }
  // Populations averaged in seed order.
  for (std::size_t j = 0; j < pts.size(); ++j) {
    for (int i = 0; i < p.n_seeds; ++i) {
      for (std::size_t k = 0; k < tasks.size(); ++k) {
        if (tasks[k].j != j || tasks[k].i != i) continue;
        auto& acc = pts[j].mean_populations;
        if (acc.empty()) acc.assign(pops[k].size(), 0.0);
        for (std::size_t m = 0; m < acc.size(); ++m) acc[m] += pops[k][m] / p.n_seeds;
      }
    }
  }
  return pts;
}

int monotonicity_violations(const std::vector<SweepPoint>& pts) {
  int v = 0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    if (pts[i + 1].mean - pts[i].mean > std::hypot(pts[i].se, pts[i + 1].se)) ++v;
  return v;
}

SplitResult split_test(const MeasurementConfig& base_in, int n_seeds, double periods, std::uint64_t seed,
                       int threads) {
  MeasurementConfig base = base_in.resolved();
  base.J = 0.5;
  SplitResult r;
  r.delta_z = base.delta_z;
  r.final_z.assign(n_seeds, 0.0);
  const MeasuredInitial init;  // packet at the origin, spin along x
  const Grid grid = measurement_grid(base, init);
  const SpinorWavefunction psi0 = measured_initial_state(base, init, grid);
  const double period = 2.0 * kPi / base.omega;
  const double t_final = std::max(periods, 1.0) * period;
  parallel_for(n_seeds, threads, [&](std::size_t i) {
    MeasurementConfig cfg = base;
    // Offset index space so these paths differ from the sweep's.
    cfg.seed = trajectory_seed(seed, 0x5000000000ULL + i);
    TrajectoryOptions opt;
    opt.t_final = t_final;
    const MeasuredTrajectory tr = run_trajectory(psi0, cfg, opt);
    double s = 0.0;
    int n = 0;
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
      if (tr.t[k] > t_final - period + 1e-9) {
        s += tr.z[k];
        ++n;
      }
    }
    r.final_z[i] = s / n;
  });
  for (double z : r.final_z) (z < 0 ? r.left : r.right)++;
  r.sigma_from_even = (r.left - 0.5 * n_seeds) / std::sqrt(0.25 * n_seeds);
  return r;
}

RiccatiValidation riccati_validation(const MeasurementConfig& base_in, double J, int trajectories, double t_final,
                                     int checkpoints, std::uint64_t seed, int threads) {
  MeasurementConfig cfg = base_in.resolved();
  cfg.J = J;
  RiccatiValidation v;
  v.J = J;
  v.trajectories = trajectories;
  if (trajectories < 2) throw ConfigError("riccati_validation: need at least 2 trajectories");
  const MeasuredInitial init;
  // The packet stays near the origin; the grid only has to hold the wells.
  Grid grid;
  grid.length = 2.0 * (std::abs(cfg.delta_z) + 8.0 * cfg.zg());
  grid.z0 = -0.5 * grid.length;
  grid.n = 64;
  // Spin-M components oscillate with momentum amplitude m w dz |M|/J; the
  // x-polarized state has |M| within about 6 sqrt(J/2).
  const double m_frac = std::min(1.0, 6.0 * std::sqrt(0.5 * J) / J);
  const double vp = std::max(0.25 / (cfg.zg() * cfg.zg()), measured_oscillator_fixed_point(cfg.mass, cfg.omega, cfg.k).Vp);
  const double p_need = cfg.mass * cfg.omega * std::abs(cfg.delta_z) * m_frac + 12.0 * std::sqrt(vp);
  while (grid.n * kPi / grid.length < p_need) grid.n *= 2;
  const SpinorWavefunction psi0 = measured_initial_state(cfg, init, grid);

  const long fine_steps = std::lround(t_final / (cfg.dt / 2));
  if (fine_steps % (2 * checkpoints) != 0)
    throw ConfigError("riccati_validation: t_final / dt must be a multiple of the checkpoint count");
  const CovarianceSeries ser = riccati_evolve(initial_covariance(cfg, init), cfg, t_final, checkpoints, 400);

  // vals[h][traj][checkpoint][entry]
  using Row = std::array<double, 6>;
  std::vector<std::vector<Row>> vals[2];
  for (auto& x : vals) x.assign(trajectories, std::vector<Row>(checkpoints + 1));
  parallel_for(trajectories, threads, [&](std::size_t i) {
    const auto fine = brownian_increments(trajectory_seed(seed, 0x7000000000ULL + i), cfg.dt / 2, fine_steps);
    for (int h = 0; h < 2; ++h) {
      MeasurementConfig c = cfg;
      c.dt = h == 0 ? cfg.dt : cfg.dt / 2;
      const auto path = h == 0 ? coarsen(fine, 2) : fine;
      TrajectoryOptions opt;
      opt.t_final = t_final;
      opt.sample_every = static_cast<int>(path.size() / checkpoints);
      const MeasuredTrajectory tr = run_trajectory(psi0, c, opt, path);
      for (int k = 0; k <= checkpoints; ++k)
        vals[h][i][k] = {tr.Vz[k], tr.Czp[k], tr.CzJz[k], tr.Vp[k], tr.CpJz[k], tr.VJz[k]};
    }
  });
  static constexpr int ia[6] = {0, 0, 0, 1, 1, 2}, ib[6] = {0, 1, 2, 1, 2, 2};
  for (int k = 1; k <= checkpoints; ++k) {
    Row R{}, M{}, S{}, B{}, Z{};
    for (int e = 0; e < 6; ++e) {
      std::vector<double> coarse(trajectories), fine(trajectories);
      for (int i = 0; i < trajectories; ++i) {
        coarse[i] = vals[0][i][k][e];
        fine[i] = vals[1][i][k][e];
      }
      R[e] = ser.C[k](ia[e], ib[e]);
      M[e] = mean_of(fine);
      S[e] = standard_error(fine);
      B[e] = std::abs(mean_of(coarse) - M[e]) / 3.0;
      const double sigma = std::hypot(S[e], B[e]);
      Z[e] = sigma > 0 ? (M[e] - R[e]) / sigma : (M[e] == R[e] ? 0.0 : INFINITY);
      v.worst_z = std::max(v.worst_z, std::abs(Z[e]));
    }
    v.t.push_back(ser.t[k]);
    v.riccati.push_back(R);
    v.mean.push_back(M);
    v.se.push_back(S);
    v.dt_bias.push_back(B);
    v.zscore.push_back(Z);
  }
  return v;
}

// --- Lyapunov -----------------------------------------------------------------------------

LyapunovReport lyapunov_scan(const Scenario& s) {
  const auto& q = s.lyapunov;
  LyapunovReport r;
  r.omega0 = reference_frequency(s.lattice);
  const auto seed = seed_on_shell(q.nz, q.phi, q.energy, s.lattice);
  if (!seed) throw ConfigError("lyapunov: the seed direction misses the energy shell");
  r.seed = *seed;
  r.windows = q.windows;
  r.exponents.assign(q.windows.size(), 0.0);
  r.runs.resize(q.windows.size());
  parallel_for(q.windows.size(), s.threads, [&](std::size_t i) {
    LyapunovOptions opt;
    opt.dt = q.dt;
    opt.renorm_interval = q.windows[i] * 2.0 * kPi / r.omega0;
    r.runs[i] = max_lyapunov(r.seed, s.lattice, q.t_final, opt);
    r.exponents[i] = r.runs[i].exponent / r.omega0;
  });
  const auto [lo, hi] = std::minmax_element(r.exponents.begin(), r.exponents.end());
  r.spread = (*hi - *lo) / std::abs(mean_of(r.exponents));
  if (q.integrable_check) {
    // Bx = 0: n_z is conserved and the motion is integrable.
    LatticeConfig flat = s.lattice;
    flat.Bx = 0.0;
    flat.Bz = 0.0;
    ClassicalState c;
    c.z = 0.75 * kPi + 0.2;
    c.p = 0.0;
    c.n = Vec3(0.6, 0.0, 0.8);
    LyapunovOptions opt;
    opt.dt = q.dt;
    opt.renorm_interval = 2.0 * kPi / r.omega0;
    r.integrable_exponent = max_lyapunov(c, flat, q.t_final, opt).exponent / r.omega0;
    r.has_integrable = true;
  }
  return r;
}

// --- bands ------------------------------------------------------------------------------------

Table bands_table(const LatticeConfig& cfg, const BandsParams& p) {
  const auto qs = brillouin_zone(p.n_q);
  const BandStructure bs = band_structure(cfg, p.n_plane_waves, qs, p.n_bands);
  Table t;
  t.add("q", bs.q);
  for (int b = 0; b < p.n_bands; ++b) {
    std::vector<double> col;
    for (const auto& e : bs.energies) col.push_back(e[b]);
    t.add("E" + std::to_string(b), std::move(col));
  }
  return t;
}

// --- orchestration ------------------------------------------------------------------------------

namespace {

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json section_outputs(const Scenario& s, RunOutput& out) {
  const SectionResult r = section_scan(s);
  std::vector<double> seed, nz, phi;
  for (const auto& p : r.section.points) {
    seed.push_back(p.seed_index);
    nz.push_back(p.nz);
    phi.push_back(p.phi);
  }
  Table t;
  t.add("seed", seed).add("nz", nz).add("phi", phi);
  out.write("section.csv", t.to_csv());
  Table it;
  std::vector<double> inz, iphi, icount;
  for (const auto& i : r.islands) {
    inz.push_back(i.nz);
    iphi.push_back(i.phi);
    icount.push_back(i.count);
  }
  it.add("nz", inz).add("phi", iphi).add("peak_count", icount);
  out.write("islands.csv", it.to_csv());
  PlotSpec ps{"Surface of section, E = " + format_double(r.section.energy), "phi (rad)", "n_z", {}};
  ps.series.push_back({"", phi, nz, true});
  out.write("section.svg", render_svg(ps));
  json sum{{"energy", r.section.energy}, {"points", r.section.points.size()}, {"islands", json::array()}};
  for (const auto& i : r.islands) sum["islands"].push_back({{"nz", i.nz}, {"phi", i.phi}, {"peak_count", i.count}});
  if (!r.sweep_energy.empty()) {
    Table sw;
    std::vector<double> cnt(r.sweep_islands.begin(), r.sweep_islands.end());
    sw.add("energy", r.sweep_energy).add("islands", cnt);
    out.write("island_sweep.csv", sw.to_csv());
    sum["sweep"] = {{"energy", r.sweep_energy}, {"islands", r.sweep_islands}};
  }
  return sum;
}

json transport_outputs(const Scenario& s, RunOutput& out) {
  const TransportResult r = transport_compare(s);
  Table t;
  t.add("t", r.t).add("Fz_quantum", r.Fz_quantum).add("Fz_classical", r.Fz_classical)
      .add("classical_right_fraction", r.classical_right);
  out.write("transport.csv", t.to_csv());
  Table qz;
  qz.add("z", r.q_z);
  for (std::size_t k = 0; k < r.q_snapshots.size(); ++k) qz.add("Q_t" + std::to_string(k), r.q_snapshots[k]);
  out.write("husimi_z.csv", qz.to_csv());
  Table st;
  st.add("t", r.snapshot_t);
  out.write("husimi_times.csv", st.to_csv());
  // Per-surface populations and energies at each snapshot time.
  Table sf;
  std::vector<double> ts, surf, pop, en, bar;
  for (std::size_t k = 0; k < r.surfaces.size(); ++k) {
    for (std::size_t m = 0; m < r.surfaces[k].population.size(); ++m) {
      ts.push_back(r.snapshot_t[k]);
      surf.push_back(m);
      pop.push_back(r.surfaces[k].population[m]);
      en.push_back(r.surfaces[k].mean_energy[m]);
      bar.push_back(r.surfaces[k].barrier[m]);
    }
  }
  sf.add("t", ts).add("surface", surf).add("population", pop).add("mean_energy", en).add("barrier", bar);
  out.write("tunneling.csv", sf.to_csv());
  out.write("final_state.bin", wavefunction_snapshot(r.final_state, r.t.back()));
  PlotSpec ps{"Mean magnetization", "t (hbar/E_R)", "<F_z>", {}};
  ps.series.push_back({"quantum", r.t, r.Fz_quantum});
  ps.series.push_back({"classical Husimi ensemble", r.t, r.Fz_classical, false, true});
  out.write("transport.svg", render_svg(ps));

  const TunnelingReport tr = tunneling_diagnostic(r.final_state, s.lattice);
  const AdiabaticDecomposition& d0 = r.surfaces.empty() ? adiabatic_decomposition(r.final_state, s.lattice)
                                                        : r.surfaces.front();
  json sum{{"splitting_q0", r.splitting_q0},
           {"splitting_zone_average", r.splitting_zone},
           {"tunneling_period", r.period},
           {"left_population", r.left_population},
           {"fit_omega", r.fit.omega},
           {"fit_residual", r.fit.residual},
           {"fit_relative_error", r.fit.omega / r.splitting_zone - 1.0},
           {"quantum_crosses_zero", r.quantum_crosses_zero},
           {"classical_keeps_sign_one_period", r.classical_keeps_sign},
           {"classical_right_fraction_final", r.classical_right.back()},
           {"husimi_acceptance", r.husimi_acceptance}};
  double psum = 0.0;
  for (double p : d0.population) psum += p;
  sum["initial_surfaces"] = {{"population", d0.population},
                             {"mean_energy", d0.mean_energy},
                             {"barrier", d0.barrier},
                             {"population_sum", psum},
                             {"lowest_above_barrier", d0.mean_energy[0] > d0.barrier[0]},
                             {"second_forbidden", d0.mean_energy.size() > 1 && d0.mean_energy[1] < d0.barrier[1]}};
  sum["final_surfaces"] = {{"population", tr.population},
                           {"mean_energy", tr.mean_energy},
                           {"barrier", tr.barrier},
                           {"population_sum", tr.population_sum}};
  return sum;
}

json measure_outputs(const Scenario& s, RunOutput& out) {
  const auto& p = s.measure;
  const auto pts = measured_sweep(s.measurement, p, s.seed, s.threads);
  std::vector<double> Js, means, ses;
  Table per_seed;
  std::vector<double> col_J, col_i, col_m;
  for (const auto& pt : pts) {
    Js.push_back(pt.J);
    means.push_back(pt.mean);
    ses.push_back(pt.se);
    for (std::size_t i = 0; i < pt.metric.size(); ++i) {
      col_J.push_back(pt.J);
      col_i.push_back(i);
      col_m.push_back(pt.metric[i]);
    }
    const auto& tr = pt.example;
    std::vector<double> zcl;
    for (std::size_t k = 0; k < tr.t.size(); ++k) zcl.push_back(pt.classical[k].z);
    Table t;
    t.add("t", tr.t).add("z_mean", tr.z).add("p_mean", tr.p).add("Jz_mean", tr.Jz).add("Vz", tr.Vz)
        .add("Vp", tr.Vp).add("VJz", tr.VJz).add("record_increment", tr.record).add("dW", tr.dW)
        .add("z_classical", zcl);
    const std::string tag = "J" + format_double(pt.J);
    out.write("trajectory_" + tag + ".csv", t.to_csv());
    std::vector<double> up, dn;
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
      up.push_back(tr.z[k] + std::sqrt(std::max(0.0, tr.Vz[k])));
      dn.push_back(tr.z[k] - std::sqrt(std::max(0.0, tr.Vz[k])));
    }
    PlotSpec ps{"Measured trajectory, J = " + format_double(pt.J), "t (1/omega)", "z", {}};
    ps.series.push_back({"<z> quantum", tr.t, tr.z});
    ps.series.push_back({"classical", tr.t, zcl, false, true});
    ps.series.push_back({"<z> +- sqrt(Vz)", tr.t, up});
    ps.series.push_back({"", tr.t, dn});
    out.write("trajectory_" + tag + ".svg", render_svg(ps));
    Table h;
    std::vector<double> m;
    for (std::size_t i = 0; i < pt.mean_populations.size(); ++i) m.push_back(pt.J - static_cast<double>(i));
    h.add("m", m).add("population", pt.mean_populations);
    out.write("mz_histogram_" + tag + ".csv", h.to_csv());
  }
  per_seed.add("J", col_J).add("seed_index", col_i).add("metric", col_m);
  out.write("classicality_per_seed.csv", per_seed.to_csv());
  Table c;
  c.add("J", Js).add("metric_mean", means).add("metric_se", ses);
  out.write("classicality.csv", c.to_csv());
  PlotSpec ps{"Classicality metric", "J", "<|<z> - z_cl|> / A", {}};
  ps.series.push_back({"mean over seeds", Js, means, true});
  out.write("classicality.svg", render_svg(ps));

  const int viol = monotonicity_violations(pts);
  json sum{{"J", Js}, {"metric_mean", means}, {"metric_se", ses}, {"adjacent_violations", viol}};
  // The population histogram of the largest spin.
  const auto big = std::max_element(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.J < b.J; });
  if (big != pts.end() && !big->mean_populations.empty()) {
    const auto peak = std::max_element(big->mean_populations.begin(), big->mean_populations.end());
    sum["largest_J_peak_m"] = big->J - static_cast<double>(peak - big->mean_populations.begin());
  }
  if (p.split_seeds > 0) {
    const SplitResult sp = split_test(s.measurement, p.split_seeds, std::max(2.0, p.split_periods), s.seed, s.threads);
    Table t;
    std::vector<double> idx;
    for (std::size_t i = 0; i < sp.final_z.size(); ++i) idx.push_back(i);
    t.add("seed_index", idx).add("final_mean_z", sp.final_z);
    out.write("split_J0.5.csv", t.to_csv());
    sum["split"] = {{"left", sp.left}, {"right", sp.right}, {"sigma_from_even", sp.sigma_from_even},
                    {"delta_z", sp.delta_z}};
  }
  if (p.riccati_trajectories > 0) {
    const RiccatiValidation v = riccati_validation(s.measurement, p.riccati_J, p.riccati_trajectories,
                                                   p.riccati_t_final, p.riccati_checkpoints, s.seed, s.threads);
    Table t;
    t.add("t", v.t);
    for (int e = 0; e < 6; ++e) {
      std::vector<double> R, M, S, B, Z;
      for (std::size_t k = 0; k < v.t.size(); ++k) {
        R.push_back(v.riccati[k][e]);
        M.push_back(v.mean[k][e]);
        S.push_back(v.se[k][e]);
        B.push_back(v.dt_bias[k][e]);
        Z.push_back(v.zscore[k][e]);
      }
      const std::string n = RiccatiValidation::kNames[e];
      t.add(n + "_riccati", R).add(n + "_ensemble", M).add(n + "_se", S).add(n + "_dt_bias", B).add(n + "_z", Z);
    }
    out.write("riccati_validation.csv", t.to_csv());
    sum["riccati"] = {{"J", v.J}, {"trajectories", v.trajectories}, {"worst_abs_z", v.worst_z}};
  }
  return sum;
}

json bands_outputs(const Scenario& s, RunOutput& out) {
  const Table t = bands_table(s.lattice, s.bands);
  out.write("bands.csv", t.to_csv());
  PlotSpec ps{"Band structure", "q (k)", "E (E_R)", {}};
  for (std::size_t b = 1; b < t.columns.size(); ++b) ps.series.push_back({t.header[b], t.columns[0], t.columns[b]});
  out.write("bands.svg", render_svg(ps));
  return {{"n_q", s.bands.n_q}, {"n_bands", s.bands.n_bands}};
}

json lyapunov_outputs(const Scenario& s, RunOutput& out) {
  const LyapunovReport r = lyapunov_scan(s);
  Table t;
  PlotSpec ps{"Finite-time largest Lyapunov exponent", "t (hbar/E_R)", "lambda / omega0", {}};
  for (std::size_t i = 0; i < r.runs.size(); ++i) {
    std::vector<double> h;
    for (double x : r.runs[i].history) h.push_back(x / r.omega0);
    Table ti;
    ti.add("t", r.runs[i].times).add("lambda_over_omega0", h);
    out.write("lyapunov_window" + std::to_string(i) + ".csv", ti.to_csv());
    ps.series.push_back({"window " + format_double(r.windows[i]), r.runs[i].times, h});
  }
  t.add("window", r.windows).add("lambda_over_omega0", r.exponents);
  out.write("lyapunov.csv", t.to_csv());
  out.write("lyapunov.svg", render_svg(ps));
  json sum{{"omega0", r.omega0},
           {"seed", {{"z", r.seed.z}, {"p", r.seed.p}, {"n", {r.seed.n.x(), r.seed.n.y(), r.seed.n.z()}}}},
           {"windows", r.windows},
           {"exponents_over_omega0", r.exponents},
           {"relative_spread", r.spread}};
  if (r.has_integrable) sum["integrable_exponent_over_omega0"] = r.integrable_exponent;
  return sum;
}

}  // namespace

std::filesystem::path run_scenario(const Scenario& s, const std::string& scenario_path, const std::string& out_root) {
  RunManifest m;
  m.started = utc_timestamp();
  m.scenario_path = scenario_path;
  m.config = s.to_json();
  m.seed = s.seed;
  const auto dir = run_directory(s, out_root);
  RunOutput out(dir);
  json sum;
  switch (s.kind) {
    case ScenarioKind::kSection: sum = section_outputs(s, out); break;
    case ScenarioKind::kTransport: sum = transport_outputs(s, out); break;
    case ScenarioKind::kMeasure: sum = measure_outputs(s, out); break;
    case ScenarioKind::kBands: sum = bands_outputs(s, out); break;
    case ScenarioKind::kLyapunov: sum = lyapunov_outputs(s, out); break;
  }
  sum["kind"] = to_string(s.kind);
  out.write("summary.json", dump(sum));
  m.files = out.files();
  m.finished = utc_timestamp();
  write_manifest(dir, m);
  return dir;
}

}  // namespace molat
