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

#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "mia/attacks.hpp"
#include "mia/common.hpp"
#include "mia/http_client.hpp"
#include "mia/server.hpp"
#include "mia/toy_model.hpp"

namespace {

using namespace mia;

ToyModel make_model() {
  std::vector<std::string> corpus = {
      "the quick brown fox jumps over the lazy dog",
      "the quick brown fox likes the quiet pond",
      "a slow green turtle walks under the old bridge",
      "every quiet morning the pond reflects the bridge",
  };
  return ToyModel::fit(corpus, 3, 0.1);
}

void check_scored_equal(const TokenScoredText& got, const TokenScoredText& want) {
  CHECK(got.text == want.text);
  REQUIRE(got.tokens == want.tokens);
  REQUIRE(got.nll.size() == want.nll.size());
  for (std::size_t i = 0; i < got.nll.size(); ++i) CHECK(got.nll[i] == want.nll[i]);
  REQUIRE(got.has_moments() == want.has_moments());
  if (want.has_moments()) {
    for (std::size_t i = 0; i < want.moments_mu->size(); ++i) {
      CHECK((*got.moments_mu)[i] == (*want.moments_mu)[i]);
      CHECK((*got.moments_sigma)[i] == (*want.moments_sigma)[i]);
    }
  }
}

TEST_CASE("transport: scoring through the mock server is bit-exact") {
  ToyModel model = make_model();
  server::MockServer server(model, {});
  Endpoint endpoint;
  endpoint.base_address = server.address();
  endpoint.model = "toy";
  HttpModelClient client(endpoint);

  const std::vector<std::string> texts = {
      "the quick brown fox jumps over the lazy dog",
      "a slow green turtle walks under the old bridge",
      "unknown words entirely outside the vocabulary here",
      "the pond reflects the fox",
      "bridge",
  };
  for (const std::string& text : texts) {
    check_scored_equal(client.score_tokens(text), model.score(text));
  }

  SUBCASE("prefix conditioning subtracts exactly") {
    check_scored_equal(client.score_tokens("jumps over the lazy dog", "the quick brown fox"),
                       model.score("jumps over the lazy dog", "the quick brown fox"));
    check_scored_equal(client.score_tokens("bridge", "the old"),
                       model.score("bridge", "the old"));
  }
  SUBCASE("empty text raises InputError through the wire") {
    CHECK_THROWS_AS(client.score_tokens(""), InputError);
    CHECK_THROWS_AS(client.score_tokens("   "), InputError);
  }
}

TEST_CASE("transport: generation through the mock server matches local generation") {
  ToyModel model = make_model();
  server::MockServer server(model, {});
  Endpoint endpoint;
  endpoint.base_address = server.address();
  HttpModelClient client(endpoint);

  GenerationConfig config;
  config.max_tokens = 8;
  SUBCASE("argmax decoding") {
    GeneratedAnswer remote = client.generate("the quick", config);
    GeneratedAnswer local = model.generate("the quick", config);
    CHECK(remote.text == local.text);
    CHECK(remote.is_empty == local.is_empty);
    CHECK(remote.mean_loss == local.mean_loss);
    check_scored_equal(remote.scored, local.scored);
  }
  SUBCASE("seeded sampling") {
    config.temperature = 0.8;
    config.seed = 1234;
    GeneratedAnswer a = client.generate("the quick", config);
    GeneratedAnswer b = client.generate("the quick", config);
    CHECK(a.text == b.text);
    CHECK(a.text == model.generate("the quick", config).text);
  }
}

TEST_CASE("transport: protocol violations get well-formed error responses") {
  server::MockServer server(make_model(), {});
  httplib::Client raw("127.0.0.1", server.port());

  SUBCASE("missing logprobs flag") {
    auto res = raw.Post("/v1/completions", R"({"prompt": "hi", "echo": true})",
                        "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    auto body = nlohmann::json::parse(res->body);
    CHECK(body["error"]["type"] == "invalid_request");
    CHECK(body["error"]["message"] == "field 'logprobs' must be present and true");
  }
  SUBCASE("logprobs false") {
    auto res = raw.Post("/v1/completions",
                        R"({"prompt": "hi", "echo": true, "logprobs": false})",
                        "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
  }
  SUBCASE("malformed body") {
    auto res = raw.Post("/v1/completions", "{not json", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(nlohmann::json::parse(res->body).contains("error"));
  }
  SUBCASE("bad generation parameters") {
    auto res = raw.Post("/v1/completions",
                        R"({"prompt": "hi", "logprobs": true, "max_tokens": 0})",
                        "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
  }
}

TEST_CASE("transport: connection failure raises TransportError with the attempt count") {
  Endpoint endpoint;
  // Bind-then-close yields a port that refuses connections immediately.
  int dead_port = 0;
  {
    httplib::Server probe;
    dead_port = probe.bind_to_any_port("127.0.0.1");
    probe.stop();
  }
  endpoint.base_address = "http://127.0.0.1:" + std::to_string(dead_port);
  endpoint.timeout = std::chrono::milliseconds(300);
  HttpModelClient client(endpoint);
  try {
    client.score_tokens("some text");
    FAIL("expected TransportError");
  } catch (const TransportError& e) {
    CHECK(e.attempts() == HttpModelClient::kMaxAttempts);
    CHECK(std::string(e.what()).find("failed after 3 attempts") != std::string::npos);
  }
}

TEST_CASE("transport: top-k-only endpoints yield flagged approximate moments") {
  ToyModel model = make_model();
  server::MockServerConfig config;
  config.top_logprobs_only = 3;
  server::MockServer server(model, config);
  Endpoint endpoint;
  endpoint.base_address = server.address();
  HttpModelClient client(endpoint);

  const std::string text = "the quick brown fox jumps";
  TokenScoredText remote = client.score_tokens(text);
  TokenScoredText exact = model.score(text);

  REQUIRE(remote.has_moments());
  CHECK(remote.moments_approximate);
  CHECK_FALSE(exact.moments_approximate);
  for (std::size_t i = 0; i < remote.nll.size(); ++i) CHECK(remote.nll[i] == exact.nll[i]);

  // Oracle: mean/stddev over the top-3 probabilities plus one residual
  // pseudo-token, from the model's own distributions.
  std::vector<std::string> context;
  for (std::size_t i = 0; i < remote.tokens.size(); ++i) {
    std::vector<double> dist = model.next_distribution(context);
    std::sort(dist.begin(), dist.end(), std::greater<double>());
    double mass = 0.0, ex = 0.0, ex2 = 0.0;
    for (int j = 0; j < 3; ++j) {
      double lp = std::log(dist[j]);
      mass += dist[j];
      ex += dist[j] * lp;
      ex2 += dist[j] * lp * lp;
    }
    double residual = 1.0 - mass;
    if (residual > 0.0) {
      double lr = std::log(residual);
      ex += residual * lr;
      ex2 += residual * lr * lr;
    }
    CHECK((*remote.moments_mu)[i] == doctest::Approx(ex).epsilon(1e-12));
    CHECK((*remote.moments_sigma)[i] ==
          doctest::Approx(std::sqrt(std::max(0.0, ex2 - ex * ex))).epsilon(1e-12));
    context.push_back(remote.tokens[i]);
  }

  // The flag rides through to attack scores that use moments.
  attacks::AttackScore mkpp = attacks::score_minkpp(remote, 0.4);
  CHECK(mkpp.approximate);
  attacks::AttackScore mkpp_exact = attacks::score_minkpp(exact, 0.4);
  CHECK_FALSE(mkpp_exact.approximate);
}

TEST_CASE("transport: remote embeddings match the offline embedder bit-exactly") {
  server::MockServer server(make_model(), {});
  Endpoint endpoint;
  endpoint.base_address = server.address();
  HttpEmbedder remote(endpoint, 256);
  retrieval::HashedBowEmbedder local(256);

  for (const std::string& text :
       {"the quick brown fox", "a slow green turtle", "pond"}) {
    std::vector<double> a = remote.embed(text);
    std::vector<double> b = local.embed(text);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }

  SUBCASE("dimension contract is enforced") {
    HttpEmbedder wrong(endpoint, 128);
    CHECK_THROWS_AS(wrong.embed("text"), ProtocolError);
  }
}

TEST_CASE("transport: identical concurrent requests get identical responses") {
  ToyModel model = make_model();
  server::MockServer server(model, {});
  const std::string body =
      R"({"model":"toy","prompt":"the quick brown fox jumps over the lazy dog",)"
      R"("max_tokens":0,"temperature":0.0,"seed":0,"logprobs":true,"echo":true})";

  std::vector<std::string> responses(32);
  std::vector<std::thread> threads;
  threads.reserve(32);
  for (int i = 0; i < 32; ++i) {
    threads.emplace_back([&, i] {
      httplib::Client raw("127.0.0.1", server.port());
      auto res = raw.Post("/v1/completions", body, "application/json");
      responses[i] = res ? res->body : "transport failure";
    });
  }
  for (auto& t : threads) t.join();
  for (int i = 1; i < 32; ++i) REQUIRE(responses[i] == responses[0]);
  CHECK(responses[0].find("token_logprobs") != std::string::npos);
}

}  // namespace
