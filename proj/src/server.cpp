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

#include "mia/server.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "mia/common.hpp"

namespace mia::server {
namespace {

using nlohmann::json;

void write_error(httplib::Response& res, int status, const std::string& type,
                 const std::string& message) {
  json body = {{"error", {{"message", message}, {"type", type}}}};
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json scored_to_json(const TokenScoredText& scored) {
  json out;
  out["text"] = scored.text;
  out["tokens"] = scored.tokens;
  json logprobs = json::array();
  for (double nll : scored.nll) logprobs.push_back(-nll);
  out["token_logprobs"] = std::move(logprobs);
  if (scored.has_moments()) {
    out["moments_mu"] = *scored.moments_mu;
    out["moments_sigma"] = *scored.moments_sigma;
  }
  return out;
}

// Top-k (probability descending, vocabulary order on ties) logprob map at
// every position of the scored region.
json top_logprobs_for(const ToyModel& model, const std::vector<std::string>& tokens, int k) {
  json out = json::array();
  std::vector<std::string> context;
  context.reserve(tokens.size());
  for (const std::string& token : tokens) {
    std::vector<double> dist = model.next_distribution(context);
    std::vector<std::size_t> order(dist.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (dist[a] != dist[b]) return dist[a] > dist[b];
      return a < b;
    });
    json entry = json::object();
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), dist.size());
    for (std::size_t i = 0; i < take; ++i) {
      entry[model.vocabulary()[order[i]]] = std::log(dist[order[i]]);
    }
    out.push_back(std::move(entry));
    context.push_back(token);
  }
  return out;
}

}  // namespace

struct MockServer::Impl {
  ToyModel model;
  retrieval::HashedBowEmbedder embedder;
  MockServerConfig config;
  httplib::Server http;

  Impl(ToyModel m, MockServerConfig c)
      : model(std::move(m)), embedder(256), config(std::move(c)) {}

  void handle_completion(const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body, nullptr, /*allow_exceptions=*/false);
    if (!body.is_object()) {
      write_error(res, 400, "invalid_request", "request body is not a JSON object");
      return;
    }
    if (!body.contains("logprobs") || !body["logprobs"].is_boolean() ||
        !body["logprobs"].get<bool>()) {
      write_error(res, 400, "invalid_request", "field 'logprobs' must be present and true");
      return;
    }
    if (!body.contains("prompt") || !body["prompt"].is_string()) {
      write_error(res, 400, "invalid_request", "field 'prompt' must be a string");
      return;
    }
    const std::string prompt = body["prompt"].get<std::string>();
    const bool echo = body.value("echo", false);
    try {
      if (echo) {
        TokenScoredText scored = model.score(prompt);
        json out;
        if (config.top_logprobs_only > 0) {
          out = scored_to_json(scored);
          out.erase("moments_mu");
          out.erase("moments_sigma");
          out["top_logprobs"] =
              top_logprobs_for(model, scored.tokens, config.top_logprobs_only);
        } else {
          out = scored_to_json(scored);
        }
        res.set_content(out.dump(), "application/json");
        return;
      }
      GenerationConfig gen;
      gen.max_tokens = body.value("max_tokens", gen.max_tokens);
      gen.temperature = body.value("temperature", gen.temperature);
      gen.seed = body.value("seed", gen.seed);
      if (gen.max_tokens < 1) {
        write_error(res, 400, "invalid_request", "field 'max_tokens' must be >= 1");
        return;
      }
      if (gen.temperature < 0.0) {
        write_error(res, 400, "invalid_request", "field 'temperature' must be >= 0");
        return;
      }
      GeneratedAnswer answer = model.generate(prompt, gen);
      res.set_content(scored_to_json(answer.scored).dump(), "application/json");
    } catch (const InputError& e) {
      write_error(res, 400, "empty_input", e.what());
    } catch (const Error& e) {
      write_error(res, 500, "internal", e.what());
    }
  }

  void handle_embeddings(const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body, nullptr, /*allow_exceptions=*/false);
    if (!body.is_object() || !body.contains("input") || !body["input"].is_array()) {
      write_error(res, 400, "invalid_request", "field 'input' must be an array of strings");
      return;
    }
    json data = json::array();
    for (const auto& item : body["input"]) {
      if (!item.is_string()) {
        write_error(res, 400, "invalid_request", "field 'input' must hold strings");
        return;
      }
      data.push_back({{"embedding", embedder.embed(item.get<std::string>())}});
    }
    res.set_content(json{{"data", std::move(data)}}.dump(), "application/json");
  }
};

MockServer::MockServer(ToyModel model, MockServerConfig config)
    : impl_(std::make_unique<Impl>(std::move(model), std::move(config))),
      host_(impl_->config.host) {
  impl_->http.Post("/v1/completions", [impl = impl_.get()](const httplib::Request& req,
                                                           httplib::Response& res) {
    impl->handle_completion(req, res);
  });
  impl_->http.Post("/v1/embeddings", [impl = impl_.get()](const httplib::Request& req,
                                                          httplib::Response& res) {
    impl->handle_embeddings(req, res);
  });
  if (impl_->config.port == 0) {
    port_ = impl_->http.bind_to_any_port(host_);
    if (port_ <= 0) throw ConfigError("cannot bind mock server to " + host_);
  } else {
    if (!impl_->http.bind_to_port(host_, impl_->config.port)) {
      throw ConfigError("cannot bind mock server to " + host_ + ":" +
                        std::to_string(impl_->config.port));
    }
    port_ = impl_->config.port;
  }
  // The listening socket exists after bind, so connections made before
  // the accept loop spins up just queue in the backlog.
  thread_ = std::thread([impl = impl_.get()] { impl->http.listen_after_bind(); });
}

MockServer::~MockServer() { stop(); }

void MockServer::stop() {
  if (impl_ && thread_.joinable()) {
    impl_->http.wait_until_ready();
    impl_->http.stop();
  }
  if (thread_.joinable()) thread_.join();
}

std::string MockServer::address() const {
  return "http://" + host_ + ":" + std::to_string(port_);
}

}  // namespace mia::server
