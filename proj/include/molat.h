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

#ifndef MOLAT_H_
#define MOLAT_H_

#include <stddef.h>
#include <stdint.h>

#if defined(MOLAT_BUILDING_LIBRARY)
#define MOLAT_API __attribute__((visibility("default")))
#else
#define MOLAT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every call returns a status. On failure molat_last_error() describes the
   cause; the message is per thread and stays valid until the next failing
   call on that thread. */
typedef enum {
  MOLAT_OK = 0,
  MOLAT_ERR_CONFIG = 1,    /* invalid scenario or physics parameters */
  MOLAT_ERR_NUMERICAL = 2, /* integration or eigensolver failure */
  MOLAT_ERR_IO = 3,        /* file system */
  MOLAT_ERR_ARGUMENT = 4,  /* null handle, short buffer, bad name */
  MOLAT_ERR_INTERNAL = 5
} molat_status;

MOLAT_API const char* molat_version(void);
MOLAT_API const char* molat_build_id(void);
MOLAT_API const char* molat_rng_name(void);
MOLAT_API const char* molat_last_error(void);

/* Strings are returned through (buf, cap, needed): needed receives the
   length including the terminator; a short buffer gives MOLAT_ERR_ARGUMENT
   and is left untouched, so callers may probe with cap = 0. */

/* --- lattice model ------------------------------------------------------ */

typedef struct {
  double U0;       /* E_R */
  double theta_L;  /* rad, in (0, pi) */
  double Bx, Bz;   /* Zeeman energies mu_B B in E_R */
  double F;
  int gyro_sign;   /* -1: moment antiparallel to F */
} molat_lattice;

/* The shipped parameter set. */
MOLAT_API molat_lattice molat_lattice_default(void);
MOLAT_API molat_status molat_lattice_validate(const molat_lattice* cfg);

/* 2F+1 ascending adiabatic energies at z (units 1/k). */
MOLAT_API molat_status molat_adiabatic_potentials(const molat_lattice* cfg, double z, double* out, size_t n);

/* Row-major [n_q][n_bands] energies at q_j = -1 + 2j/n_q. */
MOLAT_API molat_status molat_band_structure(const molat_lattice* cfg, int n_q, int n_bands, double* out,
                                            size_t n);

MOLAT_API molat_status molat_elliptic_k(double kappa, double* out);

/* --- scenarios ------------------------------------------------------------ */

typedef struct molat_scenario molat_scenario;

MOLAT_API molat_status molat_scenario_load(const char* path, molat_scenario** out);
MOLAT_API molat_status molat_scenario_parse(const char* json_text, molat_scenario** out);
/* Defaults for kind "section", "transport", "measure", "bands" or "lyapunov". */
MOLAT_API molat_status molat_scenario_default(const char* kind, molat_scenario** out);
MOLAT_API void molat_scenario_free(molat_scenario* s);

/* Dotted JSON path, e.g. ("lattice.U0", "50"). The value is parsed as JSON
   (bare words become strings) and the scenario is revalidated; on failure
   the scenario is unchanged. */
MOLAT_API molat_status molat_scenario_set(molat_scenario* s, const char* path, const char* value);
MOLAT_API molat_status molat_scenario_set_seed(molat_scenario* s, uint64_t seed);
MOLAT_API molat_status molat_scenario_set_threads(molat_scenario* s, int threads);

MOLAT_API molat_status molat_scenario_json(const molat_scenario* s, char* buf, size_t cap, size_t* needed);

/* Runs the scenario and writes its outputs plus manifest.json under
   out_root (NULL or "": scenario out_dir, then $MOLAT_OUT_ROOT). The run
   directory is returned through buf. */
MOLAT_API molat_status molat_scenario_run(const molat_scenario* s, const char* scenario_path, const char* out_root,
                                          char* buf, size_t cap, size_t* needed);

/* Number of inventory entries in dir/manifest.json whose hash no longer
   matches; 0 means the run verifies. */
MOLAT_API molat_status molat_verify_manifest(const char* dir, int* n_bad);

/* --- measured trajectories -------------------------------------------------- */

typedef struct {
  double J;
  double omega, mass;
  double delta_z; /* NaN: 15 z_g */
  double b;       /* NaN: m omega^2 delta_z */
  double c;
  double k;       /* NaN: omega / (2 z_g^2) */
  double dt;
  uint64_t seed;
} molat_measurement;

MOLAT_API molat_measurement molat_measurement_default(double J);

typedef struct molat_trajectory molat_trajectory;

/* Coherent packet at (z0, p0), spin coherent along x, evolved to t_final
   with samples every sample_every steps. */
MOLAT_API molat_status molat_trajectory_run(const molat_measurement* cfg, double z0, double p0, double t_final,
                                            int sample_every, molat_trajectory** out);
MOLAT_API void molat_trajectory_free(molat_trajectory* tr);
MOLAT_API size_t molat_trajectory_length(const molat_trajectory* tr);
/* name: t, z, p, Jz, Jx, Vz, Vp, VJz, Czp, CzJz, CpJz, record, dW */
MOLAT_API molat_status molat_trajectory_series(const molat_trajectory* tr, const char* name, double* out, size_t n);

#ifdef __cplusplus
}
#endif

#endif /* MOLAT_H_ */
