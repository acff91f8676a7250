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

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mia/kernels.hpp"

namespace mia {

// A generation endpoint seen as a black box: everything the harness knows
// about a model is its address and how hard it may hit it.
struct Endpoint {
  std::string base_address;
  std::string model;
  std::optional<std::string> auth_token;
  std::chrono::milliseconds timeout{std::chrono::milliseconds(30000)};
  int max_parallel = 4;
};

// A text with per-token negative log-likelihoods in nats, optionally with
// the mean/stddev of log-probability under the model's full next-token
// distribution at each position. The substrate of every attack score.
struct TokenScoredText {
  std::string text;
  std::vector<std::string> tokens;
  std::vector<double> nll;
  std::optional<std::vector<double>> moments_mu;
  std::optional<std::vector<double>> moments_sigma;
  // True when moments were reconstructed from top-k mass rather than the
  // full distribution.
  bool moments_approximate = false;

  bool has_moments() const { return moments_mu.has_value() && moments_sigma.has_value(); }
  double sum_nll() const { return kernels::sum_f64(nll); }
  double mean_nll() const { return kernels::mean_f64(nll); }
};

// Output of one generation call. An empty generation is a value, not an
// error, so batch pipelines keep moving; its mean loss is 0 by convention.
struct GeneratedAnswer {
  std::string text;
  TokenScoredText scored;
  double mean_loss = 0.0;
  bool is_empty = false;
};

struct GenerationConfig {
  int max_tokens = 16;
  double temperature = 0.0;
  uint64_t seed = 0;
};

// Uniform interface over anything that can generate with token logprobs
// and echo-score a given text. Implementations must be safe to call from
// multiple threads.
class ModelClient {
 public:
  virtual ~ModelClient() = default;

  // Per-token NLL of `text` conditioned on `prefix`; empty prefix means
  // unconditional. Throws InputError when text has no tokens,
  // CapabilityError when the endpoint cannot echo-score.
  virtual TokenScoredText score_tokens(const std::string& text,
                                       const std::string& prefix = "") = 0;

  virtual GeneratedAnswer generate(const std::string& prompt,
                                   const GenerationConfig& config) = 0;

  virtual std::string model_name() const = 0;
};

inline GeneratedAnswer make_generated_answer(TokenScoredText scored) {
  GeneratedAnswer a;
  a.text = scored.text;
  a.is_empty = scored.tokens.empty();
  a.mean_loss = a.is_empty ? 0.0 : scored.mean_nll();
  a.scored = std::move(scored);
  return a;
}

}  // namespace mia
