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

#pragma once

#include <memory>

#include "molat/common.hpp"

namespace molat {

// Angular momentum matrices in the |F, m> basis ordered m = F, F-1, ..., -F.
struct SpinMatrices {
  double F = 0.0;
  int dim = 0;
  Eigen::MatrixXcd Fx, Fy, Fz;
  // F_y = Wy diag(lambda_y) Wy^dagger, used to build rotations about y.
  Eigen::MatrixXcd Wy;
  Eigen::VectorXd lambda_y;

  double m(int i) const { return F - i; }
};

// Throws ConfigError unless 2F is a positive integer. Cached per F.
std::shared_ptr<const SpinMatrices> spin_matrices(double F);

bool valid_spin(double F);

// Components <m|theta,phi> of the spin coherent state pointing along
// (theta, phi); <F> = F (sin t cos p, sin t sin p, cos t).
Eigen::VectorXcd spin_coherent_state(double F, double theta, double phi);

// log of the binomial coefficient C(n, k) for real n (2F may be large).
double log_binomial(double n, double k);

}  // namespace molat
