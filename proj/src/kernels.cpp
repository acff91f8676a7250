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

#include "mia/kernels.hpp"

#include <cstdlib>
#include <string>

#include "mia/common.hpp"

namespace mia::kernels {

namespace detail {

double dot_f64_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_f64_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

void blend_uniform_f64_scalar(double* x, std::size_t n, double lambda) {
  const double keep = 1.0 - lambda;
  const double add = lambda / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] * keep + add;
}

#if MIA_HAVE_AVX2
double dot_f64_avx2(const double* a, const double* b, std::size_t n);
double sum_f64_avx2(const double* x, std::size_t n);
void blend_uniform_f64_avx2(double* x, std::size_t n, double lambda);
bool cpu_has_avx2();
#endif

}  // namespace detail

namespace {

using DotFn = double (*)(const double*, const double*, std::size_t);
using SumFn = double (*)(const double*, std::size_t);
using BlendFn = void (*)(double*, std::size_t, double);

struct Dispatch {
  Backend backend;
  DotFn dot;
  SumFn sum;
  BlendFn blend;
};

Dispatch resolve() {
  Dispatch scalar{Backend::kScalar, detail::dot_f64_scalar, detail::sum_f64_scalar,
                  detail::blend_uniform_f64_scalar};
#if MIA_HAVE_AVX2
  Dispatch avx2{Backend::kAvx2, detail::dot_f64_avx2, detail::sum_f64_avx2,
                detail::blend_uniform_f64_avx2};
#endif
  const char* env = std::getenv("MIA_KERNEL");
  if (env != nullptr && *env != '\0') {
    std::string want{env};
    if (want == "scalar") return scalar;
    if (want == "avx2") {
#if MIA_HAVE_AVX2
      if (detail::cpu_has_avx2()) return avx2;
      throw ConfigError("MIA_KERNEL=avx2 requested but the CPU lacks AVX2");
#else
      throw ConfigError("MIA_KERNEL=avx2 requested but this build has no AVX2 backend");
#endif
    }
    throw ConfigError("unknown MIA_KERNEL value '" + want + "' (expected scalar or avx2)");
  }
#if MIA_HAVE_AVX2
  if (detail::cpu_has_avx2()) return avx2;
#endif
  return scalar;
}

const Dispatch& table() {
  static const Dispatch d = resolve();
  return d;
}

}  // namespace

namespace {

Dispatch for_backend(Backend b) {
  if (b == Backend::kScalar) {
    return {Backend::kScalar, detail::dot_f64_scalar, detail::sum_f64_scalar,
            detail::blend_uniform_f64_scalar};
  }
#if MIA_HAVE_AVX2
  if (detail::cpu_has_avx2()) {
    return {Backend::kAvx2, detail::dot_f64_avx2, detail::sum_f64_avx2,
            detail::blend_uniform_f64_avx2};
  }
#endif
  throw ConfigError("avx2 kernel backend not available on this machine");
}

}  // namespace

bool backend_available(Backend b) {
  if (b == Backend::kScalar) return true;
#if MIA_HAVE_AVX2
  return detail::cpu_has_avx2();
#else
  return false;
#endif
}

double dot_f64_with(Backend b, const double* a, const double* x, std::size_t n) {
  return for_backend(b).dot(a, x, n);
}

double sum_f64_with(Backend b, const double* x, std::size_t n) {
  return for_backend(b).sum(x, n);
}

void blend_uniform_f64_with(Backend b, double* x, std::size_t n, double lambda) {
  for_backend(b).blend(x, n, lambda);
}

Backend active_backend() { return table().backend; }

std::string_view backend_name() {
  return table().backend == Backend::kAvx2 ? "avx2" : "scalar";
}

double dot_f64(const double* a, const double* b, std::size_t n) {
  return table().dot(a, b, n);
}

double sum_f64(const double* x, std::size_t n) { return table().sum(x, n); }

void blend_uniform_f64(double* x, std::size_t n, double lambda) {
  table().blend(x, n, lambda);
}

}  // namespace mia::kernels
