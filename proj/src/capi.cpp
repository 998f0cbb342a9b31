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

#include "molat.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "molat/classical.hpp"
#include "molat/experiments.hpp"
#include "molat/manifest.hpp"
#include "molat/measurement.hpp"
#include "molat/quantum.hpp"
#include "molat/rng.hpp"
#include "molat/scenario.hpp"

struct molat_scenario {
  nlohmann::json json;
  molat::Scenario scenario;
};

struct molat_trajectory {
  molat::MeasuredTrajectory tr;
};

namespace {

thread_local std::string g_error;

molat_status fail(molat_status s, const std::string& msg) {
  g_error = msg;
  return s;
}

// Maps the core's exception types onto status codes.
template <class F>
molat_status guarded(F&& f) {
  try {
    return f();
  } catch (const molat::ConfigError& e) {
    return fail(MOLAT_ERR_CONFIG, e.what());
  } catch (const molat::NumericalError& e) {
    return fail(MOLAT_ERR_NUMERICAL, e.what());
  } catch (const molat::IoError& e) {
    return fail(MOLAT_ERR_IO, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(MOLAT_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MOLAT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MOLAT_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(MOLAT_ERR_INTERNAL, "unknown exception");
  }
}

molat_status put_string(const std::string& s, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (!buf || cap < s.size() + 1) return fail(MOLAT_ERR_ARGUMENT, "buffer too small: need " + std::to_string(s.size() + 1));
  std::memcpy(buf, s.c_str(), s.size() + 1);
  return MOLAT_OK;
}

molat::LatticeConfig to_cpp(const molat_lattice& c) {
  molat::LatticeConfig l;
  l.U0 = c.U0;
  l.theta_L = c.theta_L;
  l.Bx = c.Bx;
  l.Bz = c.Bz;
  l.F = c.F;
  l.gyro_sign = c.gyro_sign;
  l.validate();
  return l;
}

molat_status make_scenario(nlohmann::json j, molat_scenario** out) {
  if (!out) return fail(MOLAT_ERR_ARGUMENT, "null output handle");
  *out = nullptr;
  molat::Scenario s = molat::scenario_from_json(j);
  *out = new molat_scenario{std::move(j), std::move(s)};
  return MOLAT_OK;
}

}  // namespace

extern "C" {

const char* molat_version(void) { return "1.0.0"; }
const char* molat_build_id(void) { return molat::build_id(); }
const char* molat_rng_name(void) { return molat::SplitMix64::kName; }
const char* molat_last_error(void) { return g_error.c_str(); }

molat_lattice molat_lattice_default(void) {
  const molat::LatticeConfig d;
  return {d.U0, d.theta_L, d.Bx, d.Bz, d.F, d.gyro_sign};
}

molat_status molat_lattice_validate(const molat_lattice* cfg) {
  if (!cfg) return fail(MOLAT_ERR_ARGUMENT, "null lattice");
  return guarded([&] {
    to_cpp(*cfg);
    return MOLAT_OK;
  });
}

molat_status molat_adiabatic_potentials(const molat_lattice* cfg, double z, double* out, size_t n) {
  if (!cfg || !out) return fail(MOLAT_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    const auto v = molat::adiabatic_potentials(z, to_cpp(*cfg));
    if (n < v.size()) return fail(MOLAT_ERR_ARGUMENT, "output holds fewer than 2F+1 values");
    std::copy(v.begin(), v.end(), out);
    return MOLAT_OK;
  });
}

molat_status molat_band_structure(const molat_lattice* cfg, int n_q, int n_bands, double* out, size_t n) {
  if (!cfg || !out) return fail(MOLAT_ERR_ARGUMENT, "null argument");
  if (n_q < 1 || n_bands < 1) return fail(MOLAT_ERR_ARGUMENT, "n_q and n_bands must be positive");
  if (n < static_cast<size_t>(n_q) * n_bands) return fail(MOLAT_ERR_ARGUMENT, "output smaller than n_q * n_bands");
  return guarded([&] {
    const auto bs = molat::band_structure(to_cpp(*cfg), 0, molat::brillouin_zone(n_q), n_bands);
    for (int i = 0; i < n_q; ++i)
      for (int b = 0; b < n_bands; ++b) out[i * n_bands + b] = bs.energies[i][b];
    return MOLAT_OK;
  });
}

molat_status molat_elliptic_k(double kappa, double* out) {
  if (!out) return fail(MOLAT_ERR_ARGUMENT, "null output");
  return guarded([&] {
    *out = molat::elliptic_K(kappa);
    return MOLAT_OK;
  });
}

molat_status molat_scenario_load(const char* path, molat_scenario** out) {
  if (!path) return fail(MOLAT_ERR_ARGUMENT, "null path");
  return guarded([&] {
    std::string text;
    try {
      text = molat::read_file(path);
    } catch (const molat::IoError& e) {
      return fail(MOLAT_ERR_CONFIG, std::string("cannot read scenario: ") + e.what());
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      return fail(MOLAT_ERR_CONFIG, std::string(path) + ": invalid JSON: " + e.what());
    }
    return make_scenario(std::move(j), out);
  });
}

molat_status molat_scenario_parse(const char* json_text, molat_scenario** out) {
  if (!json_text) return fail(MOLAT_ERR_ARGUMENT, "null JSON text");
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
      return fail(MOLAT_ERR_CONFIG, std::string("invalid JSON: ") + e.what());
    }
    return make_scenario(std::move(j), out);
  });
}

molat_status molat_scenario_default(const char* kind, molat_scenario** out) {
  if (!kind) return fail(MOLAT_ERR_ARGUMENT, "null kind");
  return guarded([&] {
    nlohmann::json j{{"schema_version", molat::kSchemaVersion}, {"name", kind}, {"kind", kind}};
    if (std::strcmp(kind, "measure") != 0) j["lattice"] = {{"F", molat::LatticeConfig{}.F}};
    return make_scenario(std::move(j), out);
  });
}

void molat_scenario_free(molat_scenario* s) { delete s; }

molat_status molat_scenario_set(molat_scenario* s, const char* path, const char* value) {
  if (!s || !path || !value) return fail(MOLAT_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    nlohmann::json j = s->json;
    molat::apply_override(j, path, value);
    molat::Scenario sc = molat::scenario_from_json(j);
    s->json = std::move(j);
    s->scenario = std::move(sc);
    return MOLAT_OK;
  });
}

molat_status molat_scenario_set_seed(molat_scenario* s, uint64_t seed) {
  if (!s) return fail(MOLAT_ERR_ARGUMENT, "null scenario");
  s->json["seed"] = seed;
  s->scenario.seed = seed;
  return MOLAT_OK;
}

molat_status molat_scenario_set_threads(molat_scenario* s, int threads) {
  if (!s) return fail(MOLAT_ERR_ARGUMENT, "null scenario");
  if (threads < 1) return fail(MOLAT_ERR_ARGUMENT, "threads must be at least 1");
  s->json["threads"] = threads;
  s->scenario.threads = threads;
  return MOLAT_OK;
}

molat_status molat_scenario_json(const molat_scenario* s, char* buf, size_t cap, size_t* needed) {
  if (!s) return fail(MOLAT_ERR_ARGUMENT, "null scenario");
  return guarded([&] { return put_string(s->scenario.to_json().dump(2), buf, cap, needed); });
}

molat_status molat_scenario_run(const molat_scenario* s, const char* scenario_path, const char* out_root, char* buf,
                                size_t cap, size_t* needed) {
  if (!s) return fail(MOLAT_ERR_ARGUMENT, "null scenario");
  return guarded([&] {
    const auto dir = molat::run_scenario(s->scenario, scenario_path ? scenario_path : "", out_root ? out_root : "");
    return put_string(dir.string(), buf, cap, needed);
  });
}

molat_status molat_verify_manifest(const char* dir, int* n_bad) {
  if (!dir || !n_bad) return fail(MOLAT_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    *n_bad = static_cast<int>(molat::verify_manifest(dir).size());
    return MOLAT_OK;
  });
}

molat_measurement molat_measurement_default(double J) {
  const molat::MeasurementConfig d;
  return {J, d.omega, d.mass, NAN, NAN, d.c, NAN, d.dt, 0};
}

molat_status molat_trajectory_run(const molat_measurement* cfg, double z0, double p0, double t_final,
                                  int sample_every, molat_trajectory** out) {
  if (!cfg || !out) return fail(MOLAT_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  if (!(t_final > 0) || sample_every < 1) return fail(MOLAT_ERR_ARGUMENT, "need t_final > 0 and sample_every >= 1");
  return guarded([&] {
    molat::MeasurementConfig c;
    c.J = cfg->J;
    c.omega = cfg->omega;
    c.mass = cfg->mass;
    c.delta_z = cfg->delta_z;
    c.b = cfg->b;
    c.c = cfg->c;
    c.k = cfg->k;
    c.dt = cfg->dt;
    c.seed = cfg->seed;
    c = c.resolved();
    c.validate();
    molat::MeasuredInitial init;
    init.z0 = z0;
    init.p0 = p0;
    const molat::Grid g = molat::measurement_grid(c, init);
    molat::TrajectoryOptions opt;
    opt.t_final = t_final;
    opt.sample_every = sample_every;
    auto* h = new molat_trajectory{molat::run_trajectory(molat::measured_initial_state(c, init, g), c, opt)};
    *out = h;
    return MOLAT_OK;
  });
}

void molat_trajectory_free(molat_trajectory* tr) { delete tr; }

size_t molat_trajectory_length(const molat_trajectory* tr) { return tr ? tr->tr.t.size() : 0; }

molat_status molat_trajectory_series(const molat_trajectory* tr, const char* name, double* out, size_t n) {
  if (!tr || !name || !out) return fail(MOLAT_ERR_ARGUMENT, "null argument");
  const auto& t = tr->tr;
  const std::pair<const char*, const std::vector<double>*> table[] = {
      {"t", &t.t},     {"z", &t.z},     {"p", &t.p},     {"Jz", &t.Jz},     {"Jx", &t.Jx},
      {"Vz", &t.Vz},   {"Vp", &t.Vp},   {"VJz", &t.VJz}, {"Czp", &t.Czp},   {"CzJz", &t.CzJz},
      {"CpJz", &t.CpJz}, {"record", &t.record}, {"dW", &t.dW}};
  for (const auto& [key, v] : table) {
    if (std::strcmp(key, name) != 0) continue;
    if (n < v->size()) return fail(MOLAT_ERR_ARGUMENT, "output shorter than the trajectory");
    std::copy(v->begin(), v->end(), out);
    return MOLAT_OK;
  }
  return fail(MOLAT_ERR_ARGUMENT, std::string("unknown series '") + name + "'");
}

}  // extern "C"
