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

#include <cstddef>
#include <string_view>
#include <vector>

namespace mia::kernels {

enum class Backend { kScalar, kAvx2 };

// Backend in effect for this process. Resolved once: the MIA_KERNEL
// environment variable ("scalar" or "avx2") wins, otherwise the widest
// instruction set the CPU supports. Forcing avx2 on a CPU without it
// throws ConfigError.
Backend active_backend();
std::string_view backend_name();

// Dot product of two length-n vectors. Vector backends may reassociate
// the sum, so results agree with scalar only to rounding error.
double dot_f64(const double* a, const double* b, std::size_t n);

double sum_f64(const double* x, std::size_t n);

// In-place mix with the uniform distribution: x[i] = (1-lambda)*x[i] +
// lambda/n. Both backends evaluate mul-then-add per element, so the
// result is bit-identical across them.
void blend_uniform_f64(double* x, std::size_t n, double lambda);

// Per-backend entry points, bypassing dispatch. Used by the equivalence
// tests and benchmarks; throw ConfigError when the backend is not usable
// on this machine.
bool backend_available(Backend b);
double dot_f64_with(Backend b, const double* a, const double* x, std::size_t n);
double sum_f64_with(Backend b, const double* x, std::size_t n);
void blend_uniform_f64_with(Backend b, double* x, std::size_t n, double lambda);

inline double dot_f64(const std::vector<double>& a, const std::vector<double>& b) {
  return dot_f64(a.data(), b.data(), a.size());
}

inline double sum_f64(const std::vector<double>& x) {
  return sum_f64(x.data(), x.size());
}

inline double mean_f64(const std::vector<double>& x) {
  return x.empty() ? 0.0 : sum_f64(x.data(), x.size()) / static_cast<double>(x.size());
}

}  // namespace mia::kernels
