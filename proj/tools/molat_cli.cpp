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

// molat command-line front end. Everything goes through the C API.
//
// Exit codes: 0 success, 1 configuration / usage / file errors, 2 numerical
// (or internal) failure.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "molat.h"

namespace {

int exit_code(molat_status s) {
  switch (s) {
    case MOLAT_OK: return 0;
    case MOLAT_ERR_NUMERICAL:
    case MOLAT_ERR_INTERNAL: return 2;
    default: return 1;
  }
}

int report(molat_status s) {
  std::cerr << "molat: " << molat_last_error() << "\n";
  return exit_code(s);
}

// Flag -> scenario path, with the flag's raw text kept for JSON parsing.
struct Override {
  std::string flag, path, help;
  std::optional<std::string> value;
};

std::vector<Override> lattice_flags() {
  return {{"--U0", "lattice.U0", "lattice depth (E_R)", {}},
          {"--thetaL", "lattice.theta_L", "polarization angle (rad)", {}},
          {"--Bx", "lattice.Bx", "transverse Zeeman energy (E_R)", {}},
          {"--Bz", "lattice.Bz", "longitudinal Zeeman energy (E_R)", {}},
          {"--F", "lattice.F", "spin quantum number", {}},
          {"--gyro-sign", "lattice.gyro_sign", "+1 or -1", {}}};
}

std::map<std::string, std::vector<Override>> kind_flags() {
  return {
      {"section",
       {{"--energy", "section.energy", "section energy (E_R)", {}},
        {"--crossings", "section.n_crossings", "crossings per seed", {}},
        {"--nz-seeds", "section.n_nz", "seed count along n_z", {}},
        {"--sweep", "section.energy_sweep", "comma-separated extra energies", {}}}},
      {"transport",
       {{"--dt", "transport.dt", "time step", {}},
        {"--t-final", "transport.t_final", "duration (0: two tunneling periods)", {}},
        {"--samples", "transport.n_samples", "classical ensemble size", {}}}},
      {"measure",
       {{"--J", "measure.J_list", "comma-separated spin sizes", {}},
        {"--seeds", "measure.n_seeds", "trajectories per J", {}},
        {"--periods", "measure.periods", "oscillator periods", {}},
        {"--split-seeds", "measure.split_seeds", "J=1/2 collapse trajectories", {}},
        {"--riccati-trajectories", "measure.riccati_trajectories", "closure check ensemble (0: skip)", {}},
        {"--k", "measurement.k", "measurement strength", {}},
        {"--c", "measurement.c", "transverse spin energy", {}},
        {"--mdt", "measurement.dt", "SSE time step", {}}}},
      {"bands",
       {{"--nq", "bands.n_q", "quasimomenta", {}},
        {"--nbands", "bands.n_bands", "bands", {}}}},
      {"lyapunov",
       {{"--energy", "lyapunov.energy", "seed energy (E_R)", {}},
        {"--nz", "lyapunov.nz", "seed n_z", {}},
        {"--phi", "lyapunov.phi", "seed azimuth", {}},
        {"--t-final", "lyapunov.t_final", "duration", {}}}},
  };
}

// "0.5,2,10" -> "[0.5,2,10]" for list-valued fields.
std::string as_json_value(const std::string& path, const std::string& v) {
  if ((path == "measure.J_list" || path == "section.energy_sweep") && !v.empty() && v.front() != '[')
    return "[" + v + "]";
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"molat: spin-motion dynamics in magneto-optical lattices"};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<int> threads;
  app.add_option("--seed", seed, "master RNG seed");
  app.add_option("--out-dir", out_dir, "root for run directories (default $MOLAT_OUT_ROOT or ./molat-runs)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  std::string scenario_path;
  CLI::App* run = app.add_subcommand("run", "run a scenario file");
  run->add_option("scenario", scenario_path, "scenario JSON")->required();

  struct Sub {
    CLI::App* app;
    std::string config;
    std::vector<std::string> sets;
    std::vector<Override> flags;
  };
  std::map<std::string, Sub> subs;
  const std::map<std::string, std::string> blurb{{"section", "surface of section and island detection"},
                                                 {"transport", "quantum vs classical magnetization transport"},
                                                 {"measure", "measured trajectories across spin sizes"},
                                                 {"bands", "band structure over the Brillouin zone"},
                                                 {"lyapunov", "largest Lyapunov exponent"}};
  for (auto& [kind, extra] : kind_flags()) {
    Sub& s = subs[kind];
    s.app = app.add_subcommand(kind, blurb.at(kind));
    s.app->add_option("--config", s.config, "start from this scenario file");
    s.app->add_option("--set", s.sets, "override: dotted.path=value");
    s.flags = kind == "measure" ? std::vector<Override>{} : lattice_flags();
    s.flags.insert(s.flags.end(), extra.begin(), extra.end());
  }
  for (auto& [kind, s] : subs)
    for (auto& o : s.flags) s.app->add_option(o.flag, o.value, o.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "molat: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  molat_scenario* sc = nullptr;
  molat_status st = MOLAT_OK;
  std::string source;
  if (run->parsed()) {
    source = scenario_path;
    st = molat_scenario_load(scenario_path.c_str(), &sc);
  } else {
    for (auto& [kind, s] : subs) {
      if (!s.app->parsed()) continue;
      source = s.config;
      st = s.config.empty() ? molat_scenario_default(kind.c_str(), &sc) : molat_scenario_load(s.config.c_str(), &sc);
      if (st != MOLAT_OK) break;
      if (!s.config.empty()) {
        // A file of another kind is re-pointed at this subcommand.
        st = molat_scenario_set(sc, "kind", kind.c_str());
      }
      for (auto& o : s.flags) {
        if (st != MOLAT_OK || !o.value) continue;
        st = molat_scenario_set(sc, o.path.c_str(), as_json_value(o.path, *o.value).c_str());
      }
      for (const auto& kv : s.sets) {
        if (st != MOLAT_OK) break;
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
          std::cerr << "molat: --set expects path=value, got '" << kv << "'\n";
          molat_scenario_free(sc);
          return 1;
        }
        st = molat_scenario_set(sc, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
      }
    }
  }
  if (st != MOLAT_OK) {
    molat_scenario_free(sc);
    return report(st);
  }
  if (seed) molat_scenario_set_seed(sc, *seed);
  if (threads) molat_scenario_set_threads(sc, *threads);

  // One call: a probe with a null buffer would run the scenario twice.
  std::vector<char> dir(8192);
  size_t need = 0;
  st = molat_scenario_run(sc, source.c_str(), out_dir.c_str(), dir.data(), dir.size(), &need);
  molat_scenario_free(sc);
  if (st != MOLAT_OK) return report(st);

  const std::string run_dir(dir.data());
  std::ifstream summary(run_dir + "/summary.json");
  std::cout << summary.rdbuf() << "output: " << run_dir << "\n";
  return 0;
}
