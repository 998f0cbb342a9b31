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

#include "molat/scenario.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

#include "molat/io.hpp"

namespace molat {

using nlohmann::json;

const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kSection: return "section";
    case ScenarioKind::kTransport: return "transport";
    case ScenarioKind::kMeasure: return "measure";
    case ScenarioKind::kBands: return "bands";
    case ScenarioKind::kLyapunov: return "lyapunov";
  }
  return "?";
}

namespace {

ScenarioKind kind_from_string(const std::string& s, const std::string& path) {
  for (auto k : {ScenarioKind::kSection, ScenarioKind::kTransport, ScenarioKind::kMeasure, ScenarioKind::kBands,
                 ScenarioKind::kLyapunov})
    if (s == to_string(k)) return k;
  throw ConfigError(path + ": unknown kind '" + s + "' (section, transport, measure, bands, lyapunov)");
}

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown fields.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, double def) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_number()) throw ConfigError(name(key) + ": expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) throw ConfigError(name(key) + ": must be finite");
    return x;
  }
  double required_number(const std::string& key) {
    if (!has(key)) throw ConfigError(name(key) + ": required field missing");
    return number(key, 0.0);
  }
  long integer(const std::string& key, long def, long lo, long hi) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_number_integer()) throw ConfigError(name(key) + ": expected an integer");
    const long x = v->get<long>();
    if (x < lo || x > hi)
      throw ConfigError(name(key) + ": must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
  }
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t def) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_number_unsigned()) throw ConfigError(name(key) + ": expected a non-negative integer");
    return v->get<std::uint64_t>();
  }
  bool boolean(const std::string& key, bool def) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_boolean()) throw ConfigError(name(key) + ": expected true or false");
    return v->get<bool>();
  }
  std::string string(const std::string& key, const std::string& def) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_string()) throw ConfigError(name(key) + ": expected a string");
    return v->get<std::string>();
  }
  std::vector<double> numbers(const std::string& key, std::vector<double> def) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_array()) throw ConfigError(name(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) throw ConfigError(name(key) + "[" + std::to_string(i) + "]: expected a number");
      out.push_back((*v)[i].get<double>());
    }
    return out;
  }
  const json* object(const std::string& key) {
    const json* v = get(key);
    if (v && !v->is_object()) throw ConfigError(name(key) + ": expected an object");
    return v;
  }
  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(name(it.key()) + ": unknown field");
  }

 private:
  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string where() const { return path_.empty() ? "scenario: " : path_ + ": "; }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void positive(double v, const std::string& what) {
  if (!(v > 0.0)) throw ConfigError(what + ": must be positive");
}

LatticeConfig read_lattice(const json& j) {
  Fields f(j, "lattice");
  LatticeConfig c;
  c.F = f.required_number("F");
  c.U0 = f.number("U0", c.U0);
  if (f.has("theta_L") && f.has("theta_L_deg"))
    throw ConfigError("lattice.theta_L_deg: give theta_L or theta_L_deg, not both");
  c.theta_L = f.number("theta_L", c.theta_L);
  if (f.has("theta_L_deg")) c.theta_L = f.number("theta_L_deg", 0.0) * kPi / 180.0;
  c.Bx = f.number("Bx", c.Bx);
  c.Bz = f.number("Bz", c.Bz);
  c.gyro_sign = static_cast<int>(f.integer("gyro_sign", c.gyro_sign, -1, 1));
  f.finish();
  c.validate();
  return c;
}

MeasurementConfig read_measurement(const json* j) {
  MeasurementConfig c;
  if (j) {
    Fields f(*j, "measurement");
    c.omega = f.number("omega", c.omega);
    c.mass = f.number("mass", c.mass);
    c.delta_z = f.number("delta_z", c.delta_z);
    c.b = f.number("b", c.b);
    c.c = f.number("c", c.c);
    c.k = f.number("k", c.k);
    c.dt = f.number("dt", c.dt);
    f.finish();
    positive(c.omega, "measurement.omega");
    positive(c.mass, "measurement.mass");
    positive(c.dt, "measurement.dt");
  }
  const MeasurementConfig r = c.resolved();
  // b fixes the well positions z_M = -(M/J) delta_z; both given must agree.
  const double b_expected = r.mass * r.omega * r.omega * r.delta_z;
  if (std::abs(r.b - b_expected) > 1e-9 * std::max(1.0, std::abs(b_expected)))
    throw ConfigError("measurement.b: " + format_double(r.b) + " disagrees with m w^2 delta_z = " +
                      format_double(b_expected));
  if (!(r.k >= 0.0)) throw ConfigError("measurement.k: must be non-negative");
  return r;
}

std::vector<double> read_spins(Fields& f, const std::string& key, std::vector<double> def) {
  auto v = f.numbers(key, std::move(def));
  if (v.empty()) throw ConfigError(f.name(key) + ": must not be empty");
  for (double J : v)
    if (!valid_spin(J)) throw ConfigError(f.name(key) + ": " + format_double(J) + " is not a positive multiple of 1/2");
  return v;
}

}  // namespace

Scenario scenario_from_json(const json& j) {
  Fields top(j, "");
  Scenario s;
  if (!top.has("schema_version")) throw ConfigError("schema_version: required field missing");
  s.schema_version = static_cast<int>(top.integer("schema_version", 0, 0, 1000));
  if (s.schema_version != kSchemaVersion)
    throw ConfigError("schema_version: unsupported version " + std::to_string(s.schema_version) + " (expected " +
                      std::to_string(kSchemaVersion) + ")");
  if (!top.has("name")) throw ConfigError("name: required field missing");
  s.name = top.string("name", "");
  if (s.name.empty() || s.name.find_first_of("/\\ ") != std::string::npos)
    throw ConfigError("name: must be non-empty without slashes or spaces");
  if (!top.has("kind")) throw ConfigError("kind: required field missing");
  s.kind = kind_from_string(top.string("kind", ""), "kind");
  s.seed = top.unsigned_integer("seed", 0);
  s.threads = static_cast<int>(top.integer("threads", 1, 1, 4096));
  s.out_dir = top.string("out_dir", "");

  // Everything but the measured model lives on the lattice.
  const json* lat = top.object("lattice");
  if (lat)
    s.lattice = read_lattice(*lat);
  else if (s.kind != ScenarioKind::kMeasure)
    throw ConfigError("lattice: required for kind '" + std::string(to_string(s.kind)) + "'");
  s.measurement = read_measurement(top.object("measurement"));

  if (const json* p = top.object("section")) {
    Fields f(*p, "section");
    auto& q = s.section;
    q.energy = f.number("energy", q.energy);
    q.energy_sweep = f.numbers("energy_sweep", q.energy_sweep);
    q.n_nz = static_cast<int>(f.integer("n_nz", q.n_nz, 1, 100000));
    q.n_phi = static_cast<int>(f.integer("n_phi", q.n_phi, 1, 100000));
    q.n_crossings = static_cast<int>(f.integer("n_crossings", q.n_crossings, 1, 100000000));
    q.dt = f.number("dt", q.dt);
    positive(q.dt, "section.dt");
    f.finish();
  }
  if (const json* p = top.object("transport")) {
    Fields f(*p, "transport");
    auto& q = s.transport;
    q.grid_n = static_cast<int>(f.integer("grid_n", q.grid_n, 16, 1 << 22));
    if (q.grid_n & (q.grid_n - 1)) throw ConfigError("transport.grid_n: must be a power of two");
    q.periods = static_cast<int>(f.integer("periods", q.periods, 1, 1024));
    q.dt = f.number("dt", q.dt);
    positive(q.dt, "transport.dt");
    q.t_final = f.number("t_final", q.t_final);
    if (q.t_final < 0) throw ConfigError("transport.t_final: must be non-negative");
    q.sample_every = static_cast<int>(f.integer("sample_every", q.sample_every, 1, 1 << 30));
    q.n_samples = static_cast<int>(f.integer("n_samples", q.n_samples, 0, 100000000));
    q.n_snapshots = static_cast<int>(f.integer("n_snapshots", q.n_snapshots, 0, 10000));
    f.finish();
  }
  if (const json* p = top.object("measure")) {
    Fields f(*p, "measure");
    auto& q = s.measure;
    q.J_list = read_spins(f, "J_list", q.J_list);
    q.n_seeds = static_cast<int>(f.integer("n_seeds", q.n_seeds, 1, 1000000));
    q.action = f.number("action", q.action);
    if (q.action < 0) throw ConfigError("measure.action: must be non-negative");
    q.periods = f.number("periods", q.periods);
    positive(q.periods, "measure.periods");
    q.sample_every = static_cast<int>(f.integer("sample_every", q.sample_every, 1, 1 << 30));
    q.split_seeds = static_cast<int>(f.integer("split_seeds", q.split_seeds, 0, 1000000));
    q.split_periods = f.number("split_periods", q.split_periods);
    positive(q.split_periods, "measure.split_periods");
    q.riccati_J = f.number("riccati_J", q.riccati_J);
    if (!valid_spin(q.riccati_J)) throw ConfigError("measure.riccati_J: must be a positive multiple of 1/2");
    q.riccati_trajectories = static_cast<int>(f.integer("riccati_trajectories", q.riccati_trajectories, 0, 10000000));
    q.riccati_t_final = f.number("riccati_t_final", q.riccati_t_final);
    positive(q.riccati_t_final, "measure.riccati_t_final");
    q.riccati_checkpoints = static_cast<int>(f.integer("riccati_checkpoints", q.riccati_checkpoints, 1, 100000));
    f.finish();
  }
  if (const json* p = top.object("bands")) {
    Fields f(*p, "bands");
    auto& q = s.bands;
    q.n_q = static_cast<int>(f.integer("n_q", q.n_q, 1, 100000));
    q.n_bands = static_cast<int>(f.integer("n_bands", q.n_bands, 1, 10000));
    q.n_plane_waves = static_cast<int>(f.integer("n_plane_waves", q.n_plane_waves, 0, 100000));
    f.finish();
  }
  if (const json* p = top.object("lyapunov")) {
    Fields f(*p, "lyapunov");
    auto& q = s.lyapunov;
    q.energy = f.number("energy", q.energy);
    q.nz = f.number("nz", q.nz);
    if (std::abs(q.nz) > 1.0) throw ConfigError("lyapunov.nz: must lie in [-1, 1]");
    q.phi = f.number("phi", q.phi);
    q.t_final = f.number("t_final", q.t_final);
    positive(q.t_final, "lyapunov.t_final");
    q.dt = f.number("dt", q.dt);
    positive(q.dt, "lyapunov.dt");
    q.windows = f.numbers("windows", q.windows);
    if (q.windows.empty()) throw ConfigError("lyapunov.windows: must not be empty");
    for (double w : q.windows) positive(w, "lyapunov.windows");
    q.integrable_check = f.boolean("integrable_check", q.integrable_check);
    f.finish();
  }
  top.finish();
  return s;
}

Scenario parse_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(std::string("cannot read scenario: ") + e.what());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return scenario_from_json(j);
}

json Scenario::to_json() const {
  json j;
  j["schema_version"] = schema_version;
  j["name"] = name;
  j["kind"] = to_string(kind);
  j["seed"] = seed;
  j["threads"] = threads;
  j["out_dir"] = out_dir;
  j["lattice"] = {{"F", lattice.F},   {"U0", lattice.U0}, {"theta_L", lattice.theta_L},
                  {"Bx", lattice.Bx}, {"Bz", lattice.Bz}, {"gyro_sign", lattice.gyro_sign}};
  const MeasurementConfig m = measurement.resolved();
  j["measurement"] = {{"omega", m.omega}, {"mass", m.mass}, {"delta_z", m.delta_z}, {"b", m.b},
                      {"c", m.c},         {"k", m.k},       {"dt", m.dt}};
  j["section"] = {{"energy", section.energy}, {"energy_sweep", section.energy_sweep},
                  {"n_nz", section.n_nz},     {"n_phi", section.n_phi},
                  {"n_crossings", section.n_crossings}, {"dt", section.dt}};
  j["transport"] = {{"grid_n", transport.grid_n},   {"periods", transport.periods},
                    {"dt", transport.dt},           {"t_final", transport.t_final},
                    {"sample_every", transport.sample_every}, {"n_samples", transport.n_samples},
                    {"n_snapshots", transport.n_snapshots}};
  j["measure"] = {{"J_list", measure.J_list},
                  {"n_seeds", measure.n_seeds},
                  {"action", measure.action},
                  {"periods", measure.periods},
                  {"sample_every", measure.sample_every},
                  {"split_seeds", measure.split_seeds},
                  {"split_periods", measure.split_periods},
                  {"riccati_J", measure.riccati_J},
                  {"riccati_trajectories", measure.riccati_trajectories},
                  {"riccati_t_final", measure.riccati_t_final},
                  {"riccati_checkpoints", measure.riccati_checkpoints}};
  j["bands"] = {{"n_q", bands.n_q}, {"n_bands", bands.n_bands}, {"n_plane_waves", bands.n_plane_waves}};
  j["lyapunov"] = {{"energy", lyapunov.energy}, {"nz", lyapunov.nz},           {"phi", lyapunov.phi},
                   {"t_final", lyapunov.t_final}, {"dt", lyapunov.dt},         {"windows", lyapunov.windows},
                   {"integrable_check", lyapunov.integrable_check}};
  return j;
}

std::string Scenario::config_hash() const {
  json j = to_json();
  j.erase("seed");
  j.erase("threads");
  j.erase("out_dir");
  return sha256_hex(j.dump()).substr(0, 12);
}

void apply_override(json& j, const std::string& path, const std::string& value) {
  json* node = &j;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw ConfigError("override '" + path + "': empty path component");
    if (dot == std::string::npos) {
      json v;
      try {
        v = json::parse(value);
      } catch (const json::parse_error&) {
        v = value;  // bare word: treat as a string
      }
      (*node)[key] = v;
      return;
    }
    json& next = (*node)[key];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) throw ConfigError("override '" + path + "': " + key + " is not an object");
    node = &next;
    start = dot + 1;
  }
}

std::filesystem::path output_root(const std::string& explicit_root) {
  if (!explicit_root.empty()) return explicit_root;
  if (const char* env = std::getenv("MOLAT_OUT_ROOT"); env && *env) return env;
  return "molat-runs";
}

std::filesystem::path run_directory(const Scenario& s, const std::string& explicit_root) {
  const std::string root = explicit_root.empty() ? s.out_dir : explicit_root;
  return output_root(root) / (s.name + "-s" + std::to_string(s.seed) + "-" + s.config_hash());
}

}  // namespace molat
