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

#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

namespace {

using mia::kernels::Backend;

std::vector<double> random_vec(std::size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

// Sizes chosen to hit the empty, sub-lane, one-lane, unrolled, and tail
// paths of the vector backends.
const std::size_t kSizes[] = {0, 1, 3, 4, 5, 7, 8, 9, 15, 16, 31, 64, 255, 256, 1000};

}  // namespace

TEST_CASE("dispatched kernels match the scalar reference") {
  const bool has_avx2 = mia::kernels::backend_available(Backend::kAvx2);
  for (std::size_t n : kSizes) {
    auto a = random_vec(n, 101 + n);
    auto b = random_vec(n, 202 + n);

    const double dot_ref = mia::kernels::dot_f64_with(Backend::kScalar, a.data(), b.data(), n);
    const double sum_ref = mia::kernels::sum_f64_with(Backend::kScalar, a.data(), n);

    CHECK(mia::kernels::dot_f64(a.data(), b.data(), n) ==
          doctest::Approx(dot_ref).epsilon(1e-12));
    CHECK(mia::kernels::sum_f64(a.data(), n) == doctest::Approx(sum_ref).epsilon(1e-12));

    if (has_avx2) {
      const double dot_v = mia::kernels::dot_f64_with(Backend::kAvx2, a.data(), b.data(), n);
      const double sum_v = mia::kernels::sum_f64_with(Backend::kAvx2, a.data(), n);
      const double dot_tol = 1e-13 * (1.0 + std::abs(dot_ref)) * static_cast<double>(n + 1);
      const double sum_tol = 1e-13 * (1.0 + std::abs(sum_ref)) * static_cast<double>(n + 1);
      CHECK(std::abs(dot_v - dot_ref) <= dot_tol);
      CHECK(std::abs(sum_v - sum_ref) <= sum_tol);
    }
  }
}

TEST_CASE("blend_uniform is bit-identical across backends") {
  if (!mia::kernels::backend_available(Backend::kAvx2)) return;
  for (std::size_t n : kSizes) {
    if (n == 0) continue;
    for (double lambda : {0.0, 0.1, 0.5, 0.999}) {
      auto p = random_vec(n, 303 + n);
      for (auto& x : p) x = std::abs(x);
      auto q = p;
      mia::kernels::blend_uniform_f64_with(Backend::kScalar, p.data(), n, lambda);
      mia::kernels::blend_uniform_f64_with(Backend::kAvx2, q.data(), n, lambda);
      for (std::size_t i = 0; i < n; ++i) CHECK(p[i] == q[i]);
    }
  }
}

TEST_CASE("blend_uniform with lambda 0 keeps the input unchanged") {
  auto p = random_vec(17, 404);
  auto orig = p;
  mia::kernels::blend_uniform_f64(p.data(), p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == orig[i]);
}

TEST_CASE("backend selection reports a known name") {
  auto name = mia::kernels::backend_name();
  CHECK((name == "scalar" || name == "avx2"));
  if (name == "avx2") CHECK(mia::kernels::backend_available(Backend::kAvx2));
}

TEST_CASE("dot of empty vectors is zero") {
  CHECK(mia::kernels::dot_f64(nullptr, nullptr, 0) == 0.0);
  CHECK(mia::kernels::sum_f64(nullptr, 0) == 0.0);
}
