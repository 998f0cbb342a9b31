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

#include <cstdint>
#include <limits>
#include <random>

namespace molat {

// SplitMix64 (Steele, Lea, Flood 2014): the state is a counter advanced by a
// fixed odd gamma and each output is a bijective mix of it. Streams for task i
// come from mixing (master seed, i), so ensembles are independent of the
// worker schedule.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  static constexpr const char* kName = "splitmix64";

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(state_ += kGamma); }

  // Independent child stream for task `index`.
  static SplitMix64 stream(std::uint64_t master, std::uint64_t index) {
    return SplitMix64(mix(master ^ mix(index * kGamma + 0x632be59bd9b4e019ULL)));
  }

  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  std::uint64_t state_;
};

// Standard normal deviates from a SplitMix64 stream (libstdc++ polar method).
class NormalStream {
 public:
  explicit NormalStream(SplitMix64 g) : g_(g) {}
  double operator()() { return dist_(g_); }
  SplitMix64& engine() { return g_; }

 private:
  SplitMix64 g_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace molat
