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

#include "molat/classical.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "molat/parallel.hpp"

namespace molat {

double energy(const ClassicalState& s, const LatticeConfig& cfg) {
  return s.p * s.p + scalar_potential(s.z, cfg) - s.n.dot(effective_field(s.z, cfg).vec());
}

StateDerivative derivatives(const ClassicalState& s, const LatticeConfig& cfg) {
  const Vec3 b = effective_field(s.z, cfg).vec();
  StateDerivative d;
  d.dz = 2.0 * s.p;
  d.dp = -scalar_potential_dz(s.z, cfg) + s.n.z() * effective_field_dz(s.z, cfg);
  d.dn = (cfg.gyro_sign / cfg.F) * s.n.cross(b);
  return d;
}

namespace {

bool finite(const ClassicalState& s) {
  return std::isfinite(s.z) && std::isfinite(s.p) && s.n.allFinite();
}

// Yoshida's fourth-order triple-jump weights.
const double kW1 = 1.0 / (2.0 - std::cbrt(2.0));
const double kW0 = 1.0 - 2.0 * kW1;

}  // namespace

ClassicalStepper::ClassicalStepper(const LatticeConfig& cfg, Integrator method)
    : cfg_(cfg), method_(method), precession_coeff_(cfg.gyro_sign / cfg.F) {}

void ClassicalStepper::step(ClassicalState& s, double dt) const {
  switch (method_) {
    case Integrator::kStrang:
      strang(s, dt);
      break;
    case Integrator::kYoshida4:
      strang(s, kW1 * dt);
      strang(s, kW0 * dt);
      strang(s, kW1 * dt);
      break;
    case Integrator::kDormandPrince:
      dormand_prince(s, dt);
      break;
  }
}

// drift(dt/2), exact potential flow over dt, drift(dt/2). With z frozen the
// moment rotates rigidly about B(z) and the kick integrates n_z in closed form.
void ClassicalStepper::strang(ClassicalState& s, double dt) const {
  s.z += s.p * dt;
  const Vec3 b = effective_field(s.z, cfg_).vec();
  const double bn = b.norm();
  Vec3 n_int;
  if (bn > 0.0) {
    const Vec3 e = b / bn;
    const double w = -precession_coeff_ * bn;
    const double x = w * dt;
    const Vec3 par = e.dot(s.n) * e;
    const Vec3 perp = s.n - par;
    const Vec3 c = e.cross(s.n);
    const double cx = std::cos(x), sx = std::sin(x);
    double sinc, versc;  // sin(x)/x and (1 - cos x)/x
    if (std::abs(x) < 1e-4) {
      sinc = 1.0 - x * x / 6.0;
      versc = 0.5 * x - x * x * x / 24.0;
    } else {
      sinc = sx / x;
      versc = (1.0 - cx) / x;
    }
    n_int = dt * (par + sinc * perp + versc * c);
    s.n = par + cx * perp + sx * c;
  } else {
    n_int = dt * s.n;
  }
  s.p += -scalar_potential_dz(s.z, cfg_) * dt + effective_field_dz(s.z, cfg_) * n_int.z();
  s.z += s.p * dt;
}

namespace {

using Vec5 = Eigen::Matrix<double, 5, 1>;

Vec5 pack(const ClassicalState& s) { return (Vec5() << s.z, s.p, s.n.x(), s.n.y(), s.n.z()).finished(); }

ClassicalState unpack(const Vec5& y) {
  ClassicalState s;
  s.z = y(0);
  s.p = y(1);
  s.n = Vec3(y(2), y(3), y(4));
  return s;
}

Vec5 rhs(const Vec5& y, const LatticeConfig& cfg) {
  const StateDerivative d = derivatives(unpack(y), cfg);
  return (Vec5() << d.dz, d.dp, d.dn.x(), d.dn.y(), d.dn.z()).finished();
}

}  // namespace

// Dormand-Prince 5(4) with step control; covers exactly dt.
void ClassicalStepper::dormand_prince(ClassicalState& s, double dt) const {
  static const double a21 = 1.0 / 5, a31 = 3.0 / 40, a32 = 9.0 / 40, a41 = 44.0 / 45, a42 = -56.0 / 15,
                      a43 = 32.0 / 9, a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                      a54 = -212.0 / 729, a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                      a64 = 49.0 / 176, a65 = -5103.0 / 18656, b1 = 35.0 / 384, b3 = 500.0 / 1113,
                      b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84, e1 = 71.0 / 57600,
                      e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                      e7 = -1.0 / 40;
  const double rtol = 1e-11, atol = 1e-13;
  Vec5 y = pack(s);
  double t = 0.0, h = dt;
  const double dir = dt >= 0 ? 1.0 : -1.0;
  int guard = 0;
  while (dir * (dt - t) > 0) {
    if (++guard > 1000000) throw NumericalError("Dormand-Prince step size underflow");
    if (dir * (t + h - dt) > 0) h = dt - t;
    const Vec5 k1 = rhs(y, cfg_);
    const Vec5 k2 = rhs(y + h * a21 * k1, cfg_);
    const Vec5 k3 = rhs(y + h * (a31 * k1 + a32 * k2), cfg_);
    const Vec5 k4 = rhs(y + h * (a41 * k1 + a42 * k2 + a43 * k3), cfg_);
    const Vec5 k5 = rhs(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), cfg_);
    const Vec5 k6 = rhs(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), cfg_);
    const Vec5 y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vec5 k7 = rhs(y5, cfg_);
    const Vec5 err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double en = 0.0;
    for (int i = 0; i < 5; ++i) {
      const double sc = atol + rtol * std::max(std::abs(y(i)), std::abs(y5(i)));
      en = std::max(en, std::abs(err(i)) / sc);
    }
    if (!std::isfinite(en)) throw NumericalError("non-finite state in Dormand-Prince step");
    if (en <= 1.0) {
      t += h;
      y = y5;
    }
    const double fac = en > 0 ? 0.9 * std::pow(en, -0.2) : 5.0;
    h *= std::clamp(fac, 0.2, 5.0);
  }
  s = unpack(y);
}

std::vector<ClassicalState> integrate(const ClassicalState& s0, const LatticeConfig& cfg, double dt,
                                      double t_final, Integrator method) {
  if (!(dt > 0.0)) throw ConfigError("integrate: dt must be positive");
  const ClassicalStepper stepper(cfg, method);
  const auto n = static_cast<std::size_t>(std::llround(t_final / dt));
  std::vector<ClassicalState> out;
  out.reserve(n + 1);
  ClassicalState s = s0;
  out.push_back(s);
  for (std::size_t i = 0; i < n; ++i) {
    stepper.step(s, dt);
    if (!finite(s)) throw NumericalError("non-finite classical state at step " + std::to_string(i + 1));
    out.push_back(s);
  }
  return out;
}

double azimuth(const Vec3& n) { return std::atan2(n.y(), n.x()); }

namespace {

// Henon: with p as the independent variable, d(state)/dp = f / (dp/dt).
ClassicalState henon_to_p0(const ClassicalState& s0, const LatticeConfig& cfg) {
  auto f = [&](const ClassicalState& s) {
    const StateDerivative d = derivatives(s, cfg);
    const double inv = 1.0 / d.dp;
    return std::pair<double, Vec3>{d.dz * inv, d.dn * inv};  // dz/dp, dn/dp
  };
  const int sub = 4;
  const double h = -s0.p / sub;
  ClassicalState s = s0;
  for (int i = 0; i < sub; ++i) {
    auto shift = [&](const ClassicalState& base, const std::pair<double, Vec3>& k, double c) {
      ClassicalState r = base;
      r.z += c * k.first;
      r.p += c;
      r.n += c * k.second;
      return r;
    };
    const auto k1 = f(s);
    const auto k2 = f(shift(s, k1, 0.5 * h));
    const auto k3 = f(shift(s, k2, 0.5 * h));
    const auto k4 = f(shift(s, k3, h));
    s.z += h / 6.0 * (k1.first + 2 * k2.first + 2 * k3.first + k4.first);
    s.n += h / 6.0 * (k1.second + 2 * k2.second + 2 * k3.second + k4.second);
    s.p += h;
  }
  s.p = 0.0;
  s.n.normalize();
  return s;
}

}  // namespace

PoincareSection poincare_section(const std::vector<ClassicalState>& seeds, const LatticeConfig& cfg,
                                 const SectionOptions& opt, int threads) {
  PoincareSection sec;
  if (seeds.empty()) return sec;
  sec.energy = energy(seeds.front(), cfg);
  for (const auto& s : seeds) {
    if (std::abs(energy(s, cfg) - sec.energy) > 1e-10 * std::max(1.0, std::abs(sec.energy)))
      throw ConfigError("poincare_section: seeds do not share one energy");
  }
  const double max_time =
      opt.max_time > 0 ? opt.max_time : opt.n_crossings * 40.0 * 2.0 * kPi / reference_frequency(cfg);
  const ClassicalStepper stepper(cfg, opt.method);
  std::vector<std::vector<SectionPoint>> per_seed(seeds.size());
  parallel_for(seeds.size(), threads, [&](std::size_t i) {
    ClassicalState s = seeds[i];
    auto& pts = per_seed[i];
    pts.reserve(opt.n_crossings);
    double t = 0.0;
    while (static_cast<int>(pts.size()) < opt.n_crossings && t < max_time) {
      const ClassicalState prev = s;
      stepper.step(s, opt.dt);
      t += opt.dt;
      if (!finite(s)) throw NumericalError("non-finite state in section seed " + std::to_string(i));
      if (prev.p < 0.0 && s.p >= 0.0) {
        const ClassicalState c = henon_to_p0(prev, cfg);
        pts.push_back({c.n.z(), azimuth(c.n), static_cast<int>(i)});
      }
    }
  });
  for (auto& v : per_seed) sec.points.insert(sec.points.end(), v.begin(), v.end());
  return sec;
}

std::optional<ClassicalState> seed_on_shell(double nz, double phi, double E, const LatticeConfig& cfg) {
  if (std::abs(nz) > 1.0) return std::nullopt;
  const double r = std::sqrt(std::max(0.0, 1.0 - nz * nz));
  const Vec3 n(r * std::cos(phi), r * std::sin(phi), nz);
  auto g = [&](double z) { return E - scalar_potential(z, cfg) + n.dot(effective_field(z, cfg).vec()); };
  const int m = 4000;
  double za = 0.0, ga = g(za);
  for (int i = 1; i <= m; ++i) {
    const double zb = kPi * i / m, gb = g(zb);
    if (ga < 0.0 && gb >= 0.0) {
      boost::uintmax_t iters = 200;
      auto [lo, hi] = boost::math::tools::toms748_solve(g, za, zb, ga, gb,
                                                        boost::math::tools::eps_tolerance<double>(52), iters);
      ClassicalState s;
      s.z = gb == 0.0 ? zb : 0.5 * (lo + hi);
      s.p = 0.0;
      s.n = n;
      return s;
    }
    za = zb;
    ga = gb;
  }
  return std::nullopt;
}

double elliptic_K(double kappa) {
  if (!(kappa >= 0.0) || kappa > 1.0 - 1e-12) throw ConfigError("elliptic_K: need 0 <= kappa < 1 - 1e-12");
  double a = 1.0, g = std::sqrt((1.0 - kappa) * (1.0 + kappa));
  for (int i = 0; i < 64 && std::abs(a - g) > 1e-16 * a; ++i) {
    const double an = 0.5 * (a + g);
    g = std::sqrt(a * g);
    a = an;
  }
  return 0.5 * kPi / a;
}

PendulumActionAngle pendulum_analysis(double nz, double E, const LatticeConfig& cfg) {
  if (std::abs(nz) > 1.0) throw ConfigError("pendulum_analysis: |n_z| must not exceed 1");
  const double st = std::sin(cfg.theta_L), ct = std::cos(cfg.theta_L);
  PendulumActionAngle r{};
  r.C = cfg.U0 * std::sqrt(4.0 * ct * ct + nz * nz * st * st);
  r.D = std::atan(nz * std::tan(cfg.theta_L) / 2.0);
  const double k2 = 0.5 * (1.0 + E / std::abs(r.C));
  if (!(k2 >= 0.0 && k2 < 1.0)) throw ConfigError("pendulum_analysis: energy outside the libration range");
  r.kappa = std::sqrt(k2);
  r.K = elliptic_K(r.kappa);
  r.omega0 = std::sqrt(4.0 * std::abs(r.C) / units::kMass);
  r.omega1 = 0.5 * kPi * r.omega0 / r.K;
  const double dC = cfg.U0 * cfg.U0 * nz * st * st / r.C;
  r.omega2 = dC * (cfg.gyro_sign / cfg.F) * E / r.C;
  return r;
}

AdiabaticFrequencies adiabatic_analysis(double alpha, double E, const LatticeConfig& cfg,
                                        std::optional<double> z_hint) {
  if (!(alpha >= 0.0 && alpha <= kPi)) throw ConfigError("adiabatic_analysis: alpha must lie in [0, pi]");
  auto V = [&](double z) { return alpha_surface(z, alpha, cfg); };
  double z0;
  if (z_hint) {
    // Slide downhill to the bottom of the well holding the orbit; the hint
    // itself may be a turning point where E - V rounds to zero.
    const double h = 1e-3;
    const double dir = V(*z_hint + h) < V(*z_hint - h) ? 1.0 : -1.0;
    double z = *z_hint;
    for (int i = 0; i < static_cast<int>(kPi / h) && V(z + dir * h) < V(z); ++i) z += dir * h;
    z0 = boost::math::tools::brent_find_minima(V, z - h, z + h, 52).first;
    if (!(E > V(z0))) z0 = *z_hint;
  } else {
    z0 = boost::math::tools::brent_find_minima(V, 0.0, 0.5 * kPi, 52).first;
  }
  if (!(E > V(z0))) throw ConfigError("adiabatic_analysis: energy below the surface at the orbit point");
  auto g = [&](double z) { return E - V(z); };
  auto turning = [&](double dir) {
    const double h = 1e-3;
    double za = z0;
    for (int i = 1; i <= static_cast<int>(kPi / h) + 1; ++i) {
      const double zb = z0 + dir * h * i;
      if (g(zb) <= 0.0) {
        boost::uintmax_t it = 200;
        auto [lo, hi] = boost::math::tools::toms748_solve(g, std::min(za, zb), std::max(za, zb),
                                                          boost::math::tools::eps_tolerance<double>(52), it);
        return 0.5 * (lo + hi);
      }
      za = zb;
    }
    throw ConfigError("adiabatic_analysis: no closed orbit at this energy");
  };
  AdiabaticFrequencies r{};
  r.z_left = turning(-1.0);
  r.z_right = turning(1.0);
  const double zc = 0.5 * (r.z_left + r.z_right), hw = 0.5 * (r.z_right - r.z_left);
  const double dl = std::abs((V(r.z_left + 1e-7) - V(r.z_left - 1e-7)) / 2e-7);
  const double dr = std::abs((V(r.z_right + 1e-7) - V(r.z_right - 1e-7)) / 2e-7);
  // sqrt(E - V). Within 1e-6 hw of a turning point rounding swamps E - V, so
  // use the linear model there with the distance taken from u directly.
  auto root = [&](double z, double u) {
    const double s = std::sin(u), c2 = std::cos(u) * std::cos(u);
    const double to_left = hw * c2 / (1.0 - s), to_right = hw * c2 / (1.0 + s);
    if (std::min(to_left, to_right) < 1e-6 * hw) return std::sqrt(to_left < to_right ? dl * to_left : dr * to_right);
    return std::sqrt(std::max(g(z), 1e-300));
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  auto quad = [&](auto&& f) {
    return GK::integrate(
        [&](double u) {
          const double z = zc + hw * std::sin(u);
          return f(z, u) * hw * std::cos(u);
        },
        -0.5 * kPi, 0.5 * kPi, 15, 1e-13);
  };
  const double T = quad([&](double z, double u) { return 1.0 / root(z, u); });
  const double area = quad([&](double z, double u) { return root(z, u); });
  const double prec = quad([&](double z, double u) { return effective_field(z, cfg).norm() / cfg.F / root(z, u); });
  // dz/dt = 2p, so a full period is int dz / sqrt(E - V); dJ/dE = T / 2pi
  r.period = T;
  r.action = area / kPi;
  r.omega1 = 2.0 * kPi / T;
  r.omega2 = prec / T;
  return r;
}

double reference_frequency(const LatticeConfig& cfg) {
  if (cfg.U0 > 0.0) {
    const DoubleWell w = analyze_double_well(cfg);
    if (w.omega_left > 1e-9) return w.omega_left;
  }
  const double b = std::hypot(cfg.Bx, cfg.Bz) / cfg.F;
  return b > 0 ? b : 1.0;
}

LyapunovResult max_lyapunov(const ClassicalState& s0, const LatticeConfig& cfg, double t_final,
                            const LyapunovOptions& opt) {
  LyapunovResult res{};
  // The window is rounded to whole steps rather than the step stretched to
  // the window, so every window sees the same reference trajectory.
  const double want = opt.renorm_interval > 0 ? opt.renorm_interval : 2.0 * kPi / reference_frequency(cfg);
  const int steps_per = std::max(1, static_cast<int>(std::lround(want / opt.dt)));
  const double dt = opt.dt;
  res.renorm_interval = steps_per * dt;
  const ClassicalStepper stepper(cfg, opt.method);

  const Vec3 w = opt.offset_direction.normalized();
  ClassicalState ref = s0, sh = s0;
  sh.z += opt.offset * w(0);
  sh.p += opt.offset * w(1);
  if (w(2) != 0.0) {
    Vec3 axis = s0.n.cross(Vec3::UnitZ());
    if (axis.norm() < 1e-8) axis = s0.n.cross(Vec3::UnitX());
    axis.normalize();
    sh.n = Eigen::AngleAxisd(opt.offset * w(2), axis) * s0.n;
  }
  auto dist = [](const ClassicalState& a, const ClassicalState& b) {
    return std::sqrt((a.z - b.z) * (a.z - b.z) + (a.p - b.p) * (a.p - b.p) + (a.n - b.n).squaredNorm());
  };
  const double d0 = dist(ref, sh);
  const int n_int = std::max(1, static_cast<int>(std::floor(t_final / res.renorm_interval + 1e-9)));
  double sum = 0.0;
  for (int k = 1; k <= n_int; ++k) {
    for (int i = 0; i < steps_per; ++i) {
      stepper.step(ref, dt);
      stepper.step(sh, dt);
    }
    if (!finite(ref) || !finite(sh)) throw NumericalError("non-finite dynamics in max_lyapunov");
    const double d = dist(ref, sh);
    if (!(d > 0.0)) throw NumericalError("max_lyapunov: shadow collapsed onto the reference");
    sum += std::log(d / d0);
    const double f = d0 / d;
    sh.z = ref.z + (sh.z - ref.z) * f;
    sh.p = ref.p + (sh.p - ref.p) * f;
    sh.n = (ref.n + (sh.n - ref.n) * f).normalized();
    const double t = k * res.renorm_interval;
    res.times.push_back(t);
    res.history.push_back(sum / t);
  }
  res.exponent = res.history.back();
  return res;
}

}  // namespace molat
