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

#include "mia/http_client.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "httplib.h"
#include "json.hpp"
#include "mia/common.hpp"

namespace mia {
namespace {

using nlohmann::json;

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<>& sem_;
};

[[noreturn]] void throw_typed(const httplib::Response& res, const std::string& where) {
  std::string type = "invalid_request";
  std::string message = "HTTP " + std::to_string(res.status);
  std::string feature = "capability";
  json body = json::parse(res.body, nullptr, /*allow_exceptions=*/false);
  if (body.is_object() && body.contains("error") && body["error"].is_object()) {
    const json& err = body["error"];
    if (err.contains("message") && err["message"].is_string()) {
      message = err["message"].get<std::string>();
    }
    if (err.contains("type") && err["type"].is_string()) {
      type = err["type"].get<std::string>();
    }
    if (err.contains("feature") && err["feature"].is_string()) {
      feature = err["feature"].get<std::string>();
    }
  }
  if (type == "empty_input") throw InputError(where + ": " + message);
  if (type == "unsupported") throw CapabilityError(feature, where + ": " + message);
  throw ProtocolError(where + ": endpoint rejected request: " + message);
}

// One fresh connection per request; the per-client semaphore already
// bounds concurrency, and connection reuse is not worth sharing mutable
// transport state between threads.
json post_json(const Endpoint& endpoint, const std::string& path, const json& body,
               int max_attempts) {
  const std::string where = "POST " + endpoint.base_address + path;
  std::string last_error;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    httplib::Client client(endpoint.base_address);
    client.set_connection_timeout(endpoint.timeout);
    client.set_read_timeout(endpoint.timeout);
    client.set_write_timeout(endpoint.timeout);
    httplib::Headers headers;
    if (endpoint.auth_token) {
      headers.emplace("Authorization", "Bearer " + *endpoint.auth_token);
    }
    httplib::Result res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) throw_typed(*res, where);
    json parsed = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded()) throw ProtocolError(where + ": response is not JSON");
    return parsed;
  }
  throw TransportError(max_attempts, where + " failed after " + std::to_string(max_attempts) +
                                         " attempts: " + last_error);
}

std::vector<double> get_double_array(const json& obj, const char* key,
                                     const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_array()) {
    throw ProtocolError(where + ": missing array '" + key + "'");
  }
  std::vector<double> out;
  out.reserve(obj[key].size());
  for (const auto& v : obj[key]) {
    if (!v.is_number()) throw ProtocolError(where + ": '" + std::string(key) + "' holds a non-number");
    out.push_back(v.get<double>());
  }
  return out;
}

// Residual mass beyond the reported top-k acts as a single pseudo-token,
// so the mean/stddev are over k+1 outcomes. Flagged approximate.
void approximate_moments(const json& top_logprobs, TokenScoredText* scored,
                         const std::string& where) {
  if (!top_logprobs.is_array() || top_logprobs.size() != scored->tokens.size()) {
    throw ProtocolError(where + ": 'top_logprobs' length mismatch");
  }
  std::vector<double> mu(scored->tokens.size()), sigma(scored->tokens.size());
  for (std::size_t i = 0; i < top_logprobs.size(); ++i) {
    const json& entry = top_logprobs[i];
    if (!entry.is_object()) throw ProtocolError(where + ": 'top_logprobs' entry is not a map");
    double mass = 0.0, ex = 0.0, ex2 = 0.0;
    for (const auto& item : entry.items()) {
      if (!item.value().is_number()) {
        throw ProtocolError(where + ": 'top_logprobs' holds a non-number");
      }
      double lp = item.value().get<double>();
      double p = std::exp(lp);
      mass += p;
      ex += p * lp;
      ex2 += p * lp * lp;
    }
    double residual = 1.0 - mass;
    if (residual > 0.0) {
      double lr = std::log(residual);
      ex += residual * lr;
      ex2 += residual * lr * lr;
    }
    mu[i] = ex;
    sigma[i] = std::sqrt(std::max(0.0, ex2 - ex * ex));
  }
  scored->moments_mu = std::move(mu);
  scored->moments_sigma = std::move(sigma);
  scored->moments_approximate = true;
}

TokenScoredText parse_scored(const json& resp, const std::string& where) {
  TokenScoredText out;
  if (!resp.contains("text") || !resp["text"].is_string()) {
    throw ProtocolError(where + ": missing 'text'");
  }
  out.text = resp["text"].get<std::string>();
  if (!resp.contains("tokens") || !resp["tokens"].is_array()) {
    throw ProtocolError(where + ": missing array 'tokens'");
  }
  for (const auto& t : resp["tokens"]) {
    if (!t.is_string()) throw ProtocolError(where + ": 'tokens' holds a non-string");
    out.tokens.push_back(t.get<std::string>());
  }
  if (!resp.contains("token_logprobs")) {
    throw CapabilityError("token logprobs", where + ": endpoint returned no token log-probs");
  }
  std::vector<double> logprobs = get_double_array(resp, "token_logprobs", where);
  if (logprobs.size() != out.tokens.size()) {
    throw ProtocolError(where + ": 'tokens' and 'token_logprobs' lengths differ");
  }
  out.nll.resize(logprobs.size());
  std::transform(logprobs.begin(), logprobs.end(), out.nll.begin(),
                 [](double lp) { return -lp; });
  const bool has_mu = resp.contains("moments_mu");
  const bool has_sigma = resp.contains("moments_sigma");
  if (has_mu != has_sigma) throw ProtocolError(where + ": moment arrays must come in pairs");
  if (has_mu) {
    std::vector<double> mu = get_double_array(resp, "moments_mu", where);
    std::vector<double> sigma = get_double_array(resp, "moments_sigma", where);
    if (mu.size() != out.tokens.size() || sigma.size() != out.tokens.size()) {
      throw ProtocolError(where + ": moment array length mismatch");
    }
    out.moments_mu = std::move(mu);
    out.moments_sigma = std::move(sigma);
  } else if (resp.contains("top_logprobs")) {
    approximate_moments(resp["top_logprobs"], &out, where);
  }
  return out;
}

}  // namespace

HttpModelClient::HttpModelClient(Endpoint endpoint) : endpoint_(std::move(endpoint)) {
  if (endpoint_.base_address.empty()) throw ConfigError("endpoint address must not be empty");
  if (endpoint_.max_parallel < 1) throw ConfigError("endpoint max_parallel must be >= 1");
  slots_ = std::make_unique<std::counting_semaphore<>>(endpoint_.max_parallel);
}

std::string HttpModelClient::model_name() const {
  return endpoint_.model.empty() ? endpoint_.base_address : endpoint_.model;
}

TokenScoredText HttpModelClient::score_once(const std::string& prompt) {
  json body = {{"model", endpoint_.model}, {"prompt", prompt},   {"max_tokens", 0},
               {"temperature", 0.0},       {"seed", 0},          {"logprobs", true},
               {"echo", true}};
  SlotGuard guard(*slots_);
  json resp = post_json(endpoint_, "/v1/completions", body, kMaxAttempts);
  return parse_scored(resp, "score_tokens(" + model_name() + ")");
}

TokenScoredText HttpModelClient::score_tokens(const std::string& text,
                                              const std::string& prefix) {
  if (prefix.empty()) return score_once(text);
  TokenScoredText whole = score_once(prefix + " " + text);
  TokenScoredText head = score_once(prefix);
  const std::size_t n = head.tokens.size();
  if (whole.tokens.size() <= n) {
    throw InputError("score_tokens: text has no tokens under the endpoint tokenization");
  }
  if (!std::equal(head.tokens.begin(), head.tokens.end(), whole.tokens.begin())) {
    throw ProtocolError("score_tokens: endpoint tokenization is not prefix-stable");
  }
  TokenScoredText out;
  out.text = text;
  out.tokens.assign(whole.tokens.begin() + n, whole.tokens.end());
  out.nll.assign(whole.nll.begin() + n, whole.nll.end());
  if (whole.has_moments()) {
    out.moments_mu.emplace(whole.moments_mu->begin() + n, whole.moments_mu->end());
    out.moments_sigma.emplace(whole.moments_sigma->begin() + n, whole.moments_sigma->end());
  }
  out.moments_approximate = whole.moments_approximate;
  return out;
}

GeneratedAnswer HttpModelClient::generate(const std::string& prompt,
                                          const GenerationConfig& config) {
  json body = {{"model", endpoint_.model},
               {"prompt", prompt},
               {"max_tokens", config.max_tokens},
               {"temperature", config.temperature},
               {"seed", config.seed},
               {"logprobs", true},
               {"echo", false}};
  SlotGuard guard(*slots_);
  json resp = post_json(endpoint_, "/v1/completions", body, kMaxAttempts);
  return make_generated_answer(parse_scored(resp, "generate(" + model_name() + ")"));
}

HttpEmbedder::HttpEmbedder(Endpoint endpoint, std::size_t dim)
    : endpoint_(std::move(endpoint)), dim_(dim) {
  if (endpoint_.base_address.empty()) throw ConfigError("endpoint address must not be empty");
  if (dim_ == 0) throw ConfigError("embedding dimension must be >= 1");
  slots_ = std::make_unique<std::counting_semaphore<>>(std::max(1, endpoint_.max_parallel));
}

std::string HttpEmbedder::name() const {
  return "http-embedder(" + endpoint_.base_address + ")";
}

std::vector<double> HttpEmbedder::embed(const std::string& text) const {
  json body = {{"model", endpoint_.model}, {"input", json::array({text})}};
  SlotGuard guard(*slots_);
  json resp =
      post_json(endpoint_, "/v1/embeddings", body, HttpModelClient::kMaxAttempts);
  const std::string where = "embed(" + endpoint_.base_address + ")";
  if (!resp.contains("data") || !resp["data"].is_array() || resp["data"].size() != 1) {
    throw ProtocolError(where + ": expected one embedding");
  }
  std::vector<double> vec = get_double_array(resp["data"][0], "embedding", where);
  if (vec.size() != dim_) {
    throw ProtocolError(where + ": embedding has dimension " + std::to_string(vec.size()) +
                        ", expected " + std::to_string(dim_));
  }
  return vec;
}

}  // namespace mia
