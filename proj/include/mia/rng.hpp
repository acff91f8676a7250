// Copyright 2026 The miabench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace mia {

// Seeded Gaussian sampler. std::normal_distribution is not bit-stable
// across standard library implementations, so noise that must replay
// identically is drawn with an explicit Box-Muller transform over
// mt19937_64 output.
class GaussianSampler {
 public:
  explicit GaussianSampler(uint64_t seed) : engine_(seed) {}

  // One standard normal draw. Consumes exactly two engine outputs.
  double operator()() {
    double u1 = next_unit_open();
    double u2 = next_unit();
    double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  double sample(double mean, double stddev) { return mean + stddev * (*this)(); }

  // Uniform in [0, 1).
  double next_unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

 private:
  // Uniform in (0, 1]; keeps log(u1) finite.
  double next_unit_open() {
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  }

  std::mt19937_64 engine_;
};

}  // namespace mia
