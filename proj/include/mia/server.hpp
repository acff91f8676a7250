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

#include <memory>
#include <string>
#include <thread>

#include "mia/retrieval.hpp"
#include "mia/toy_model.hpp"

namespace mia::server {

struct MockServerConfig {
  std::string host = "127.0.0.1";
  // 0 binds any free port; port() reports the bound one.
  int port = 0;
  // When > 0, completion responses omit exact moment arrays and carry
  // only the top-k per-position logprob maps, exercising the client-side
  // residual-mass approximation.
  int top_logprobs_only = 0;
};

// Mock endpoint speaking the completion wire protocol over a fitted toy
// model, plus /v1/embeddings over the offline embedder. Handlers are
// stateless and the model is read-only, so concurrent requests are safe
// and identical requests produce identical responses. Doubles survive
// the JSON round trip bit-exactly.
class MockServer {
 public:
  MockServer(ToyModel model, MockServerConfig config);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  int port() const { return port_; }
  std::string address() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  std::string host_;
  int port_ = 0;
};

}  // namespace mia::server
