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
#include <memory>
#include <semaphore>
#include <string>

#include "mia/model.hpp"
#include "mia/retrieval.hpp"

namespace mia {

// Completion-endpoint client. Requests carry {model, prompt, max_tokens,
// temperature, seed, logprobs: true, echo}; responses carry the text plus
// parallel token / token-logprob arrays, optionally exact per-position
// moments or top-k logprob maps. Conditioning on a prefix is done by
// scoring the space-joined whole and subtracting a prefix-only scoring,
// which is exact for prefix-stable tokenizations.
//
// Transport failures and 5xx responses are retried; after kMaxAttempts
// the call raises TransportError carrying the attempt count. Typed 4xx
// errors map to InputError (empty_input), CapabilityError (unsupported),
// or ProtocolError (anything else). Endpoints that return only top-k
// logprobs get moments reconstructed with the residual mass treated as
// one pseudo-token, and the result is flagged approximate.
class HttpModelClient : public ModelClient {
 public:
  static constexpr int kMaxAttempts = 3;

  explicit HttpModelClient(Endpoint endpoint);

  TokenScoredText score_tokens(const std::string& text,
                               const std::string& prefix = "") override;
  GeneratedAnswer generate(const std::string& prompt, const GenerationConfig& config) override;
  std::string model_name() const override;

 private:
  TokenScoredText score_once(const std::string& prompt);

  Endpoint endpoint_;
  std::unique_ptr<std::counting_semaphore<>> slots_;
};

// Remote embedding provider over POST /v1/embeddings. The configured
// dimension is a contract: a response of any other size is a protocol
// error.
class HttpEmbedder : public retrieval::Embedder {
 public:
  HttpEmbedder(Endpoint endpoint, std::size_t dim);

  std::vector<double> embed(const std::string& text) const override;
  std::size_t dimension() const override { return dim_; }
  std::string name() const override;

 private:
  Endpoint endpoint_;
  std::size_t dim_;
  std::unique_ptr<std::counting_semaphore<>> slots_;
};

}  // namespace mia
