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

#include "mia/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include "doctest.h"
#include "mia/common.hpp"

namespace {

using namespace mia;
using config::ExperimentConfig;

const char* kFullConfig = R"({
  "mode": "rag-style",
  "dataset": "data/eval.jsonl",
  "output_dir": "runs/exp1",
  "seed": 42,
  "generation": {"max_tokens": 24, "temperature": 0.7},
  "attacks": {
    "enabled": ["logloss", "zlib", "mink", "minkpp", "recall", "lira", "spv"],
    "mink_k": 0.3,
    "recall_prefix": "The weather today is mild and the sky is clear.",
    "spv_paraphrases": 6,
    "spv_drop_prob": 0.15,
    "parallelism": 8
  },
  "metrics": {"fpr_targets": [0.01, 0.05]},
  "models": {
    "target": {"kind": "toy", "corpus": "data/train.txt", "order": 4, "smoothing": 0.2},
    "base": {"kind": "http", "address": "http://127.0.0.1:9200", "model": "base-lm",
             "timeout_ms": 5000, "max_parallel": 2, "auth_token": "secret"},
    "judge": {"kind": "mock"},
    "reference": {"kind": "toy", "corpus": "data/ref.txt"}
  },
  "defenses": {
    "arms": ["epd", "flatten", "dp_logits", "adaptive"],
    "flatten_lambda": 0.5,
    "dp_sigma": 0.8,
    "dp_seed": 7,
    "adaptive": {"w_sim": 0.6, "w_loss": 0.4, "tau": 0.1, "sigma_base": 1.0,
                 "lambda_amp": 2.0, "alpha_decay": 1.0, "rdp_order": 2.0,
                 "rdp_form": "quadratic", "delta": 1e-5}
  },
  "retrieval": {"corpus": "data/docs.txt", "top_k": 3, "dim": 128}
})";

std::string minimal_config(const std::string& extra = "") {
  return std::string(R"({"dataset": "d.jsonl", "models": {"target": {"kind": "toy", "corpus": "c.txt"}})") +
         extra + "}";
}

TEST_CASE("config: full document parses and validates") {
  ExperimentConfig c = config::parse_config(kFullConfig);
  config::validate(c);
  CHECK(c.mode == config::Mode::kRagStyle);
  CHECK(c.dataset_path == "data/eval.jsonl");
  CHECK(c.output_dir == "runs/exp1");
  CHECK(c.seed == 42);
  CHECK(c.generation.max_tokens == 24);
  CHECK(c.generation.temperature == doctest::Approx(0.7));
  CHECK(c.attacks.enabled.size() == 7);
  CHECK(c.attacks.mink_k == doctest::Approx(0.3));
  CHECK(c.attacks.spv_paraphrases == 6);
  CHECK(c.metrics.fpr_targets == std::vector<double>{0.01, 0.05});
  REQUIRE(c.models.count("target") == 1);
  CHECK(c.models["target"].kind == config::ModelKind::kToy);
  CHECK(c.models["target"].toy.order == 4);
  CHECK(c.models["base"].kind == config::ModelKind::kHttp);
  CHECK(c.models["base"].endpoint.base_address == "http://127.0.0.1:9200");
  CHECK(c.models["base"].endpoint.model == "base-lm");
  CHECK(c.models["base"].endpoint.timeout.count() == 5000);
  CHECK(c.models["base"].endpoint.auth_token == std::optional<std::string>("secret"));
  CHECK(c.models["judge"].kind == config::ModelKind::kMock);
  CHECK(c.defenses.arms.size() == 4);
  CHECK(c.defenses.adaptive.noise.lambda_amp == doctest::Approx(2.0));
  REQUIRE(c.retrieval.has_value());
  CHECK(c.retrieval->top_k == 3);
  CHECK(c.retrieval->dim == 128);
}

TEST_CASE("config: defaults materialize in a minimal document") {
  ExperimentConfig c = config::parse_config(minimal_config());
  config::validate(c);
  CHECK(c.mode == config::Mode::kSftStyle);
  CHECK(c.output_dir == "out");
  CHECK(c.seed == 0);
  CHECK(c.generation.max_tokens == 18);
  CHECK(c.generation.temperature == 0.0);
  CHECK(c.attacks.enabled == config::default_attacks());
  CHECK(c.attacks.mink_k == doctest::Approx(0.2));
  CHECK(c.metrics.fpr_targets == std::vector<double>{0.01});
  CHECK(c.models["target"].name == "target");
  CHECK(c.models["target"].toy.order == 3);
  CHECK(c.models["target"].toy.smoothing == doctest::Approx(0.1));
  CHECK(c.defenses.arms.empty());
  CHECK_FALSE(c.retrieval.has_value());
}

TEST_CASE("config: parse failures name the offending field") {
  CHECK_THROWS_WITH_AS(config::parse_config("not json"),
                       doctest::Contains("malformed config"), ConfigError);
  CHECK_THROWS_WITH_AS(config::parse_config("[1, 2]"),
                       doctest::Contains("must be a JSON object"), ConfigError);
  CHECK_THROWS_WITH_AS(config::parse_config(R"({"dataset": "d", "models": {}, "bogus": 1})"),
                       doctest::Contains("unknown field 'bogus'"), ConfigError);
  CHECK_THROWS_WITH_AS(config::parse_config(R"({"models": {}})"),
                       doctest::Contains("missing field 'dataset'"), ConfigError);
  CHECK_THROWS_WITH_AS(config::parse_config(R"({"dataset": "d"})"),
                       doctest::Contains("missing field 'models'"), ConfigError);
  CHECK_THROWS_WITH_AS(
      config::parse_config(R"({"dataset": "d", "models": {"driver": {"kind": "mock"}}})"),
      doctest::Contains("unknown role 'driver'"), ConfigError);
  CHECK_THROWS_WITH_AS(
      config::parse_config(R"({"dataset": "d", "models": {"target": {"kind": "toy"}}})"),
      doctest::Contains("models.target: missing field 'corpus'"), ConfigError);
  CHECK_THROWS_WITH_AS(
      config::parse_config(
          R"({"dataset": "d", "models": {"target": {"kind": "warp", "corpus": "c"}}})"),
      doctest::Contains("'kind' must be 'toy', 'http', or 'mock'"), ConfigError);
  CHECK_THROWS_WITH_AS(config::parse_config(minimal_config(R"(, "mode": "fine-tune")")),
                       doctest::Contains("unknown mode 'fine-tune'"), ConfigError);
  CHECK_THROWS_AS(
      config::parse_config(minimal_config(R"(, "attacks": {"enabled": ["warp"]})")),
      ConfigError);
  CHECK_THROWS_WITH_AS(
      config::parse_config(minimal_config(R"(, "attacks": {"mink_k": 0.0})")),
      doctest::Contains("mink_k"), ConfigError);
  CHECK_THROWS_WITH_AS(
      config::parse_config(minimal_config(R"(, "defenses": {"flatten_lambda": 1.5})")),
      doctest::Contains("flatten_lambda"), ConfigError);
  CHECK_THROWS_WITH_AS(
      config::parse_config(minimal_config(R"(, "defenses": {"arms": ["scrub"]})")),
      doctest::Contains("unknown defense arm 'scrub'"), ConfigError);
  CHECK_THROWS_WITH_AS(
      config::parse_config(minimal_config(R"(, "generation": {"max_tokens": 0})")),
      doctest::Contains("max_tokens"), ConfigError);
  CHECK_THROWS_WITH_AS(
      config::parse_config(minimal_config(R"(, "seed": -3)")),
      doctest::Contains("'seed' must be a non-negative integer"), ConfigError);
}

TEST_CASE("config: cross-field validation") {
  SUBCASE("rag-style requires a retrieval corpus") {
    ExperimentConfig c = config::parse_config(minimal_config(R"(, "mode": "rag-style")"));
    CHECK_THROWS_WITH_AS(config::validate(c), doctest::Contains("retrieval corpus"),
                         ConfigError);
  }
  SUBCASE("lira requires a reference model") {
    ExperimentConfig c =
        config::parse_config(minimal_config(R"(, "attacks": {"enabled": ["lira"]})"));
    CHECK_THROWS_WITH_AS(config::validate(c), doctest::Contains("'reference' model"),
                         ConfigError);
  }
  SUBCASE("recall requires a prefix") {
    ExperimentConfig c =
        config::parse_config(minimal_config(R"(, "attacks": {"enabled": ["recall"]})"));
    CHECK_THROWS_WITH_AS(config::validate(c), doctest::Contains("recall_prefix"), ConfigError);
  }
  SUBCASE("epd requires a base model") {
    ExperimentConfig c =
        config::parse_config(minimal_config(R"(, "defenses": {"arms": ["epd"]})"));
    CHECK_THROWS_WITH_AS(config::validate(c), doctest::Contains("'base' model"), ConfigError);
  }
  SUBCASE("distribution arms require a toy target") {
    const char* doc = R"({
      "dataset": "d.jsonl",
      "models": {"target": {"kind": "http", "address": "http://h:1", "model": "m"}},
      "defenses": {"arms": ["flatten"]}
    })";
    ExperimentConfig c = config::parse_config(doc);
    CHECK_THROWS_WITH_AS(config::validate(c), doctest::Contains("distribution access"),
                         ConfigError);
  }
  SUBCASE("mock is judge-only") {
    const char* doc = R"({
      "dataset": "d.jsonl",
      "models": {"target": {"kind": "mock"}}
    })";
    ExperimentConfig c = config::parse_config(doc);
    CHECK_THROWS_WITH_AS(config::validate(c), doctest::Contains("only valid for the judge"),
                         ConfigError);
  }
}

TEST_CASE("config: environment overrides repoint roles at endpoints") {
  ExperimentConfig c = config::parse_config(minimal_config());
  REQUIRE(setenv("MIA_TARGET_ADDRESS", "http://10.0.0.5:8000", 1) == 0);
  REQUIRE(setenv("MIA_TARGET_AUTH_TOKEN", "tok123", 1) == 0);
  REQUIRE(setenv("MIA_JUDGE_AUTH_TOKEN", "ignored", 1) == 0);
  config::apply_env_overrides(c);
  unsetenv("MIA_TARGET_ADDRESS");
  unsetenv("MIA_TARGET_AUTH_TOKEN");
  unsetenv("MIA_JUDGE_AUTH_TOKEN");

  CHECK(c.models["target"].kind == config::ModelKind::kHttp);
  CHECK(c.models["target"].endpoint.base_address == "http://10.0.0.5:8000");
  CHECK(c.models["target"].endpoint.auth_token == std::optional<std::string>("tok123"));
  // A token alone never creates a role or applies to a non-http spec.
  CHECK(c.models.count("judge") == 0);
}

TEST_CASE("config: fingerprint is stable and sensitive to every field") {
  ExperimentConfig base = config::parse_config(kFullConfig);
  const std::string canon = config::canonical_json(base);
  CHECK(config::canonical_json(base) == canon);
  const uint64_t fp = config::fingerprint(base);
  CHECK(config::fingerprint(base) == fp);

  auto differs = [&](void (*mutate)(ExperimentConfig&)) {
    ExperimentConfig other = config::parse_config(kFullConfig);
    mutate(other);
    return config::fingerprint(other) != fp;
  };
  CHECK(differs([](ExperimentConfig& c) { c.seed += 1; }));
  CHECK(differs([](ExperimentConfig& c) { c.dataset_path = "other.jsonl"; }));
  CHECK(differs([](ExperimentConfig& c) { c.attacks.mink_k = 0.25; }));
  CHECK(differs([](ExperimentConfig& c) { c.generation.temperature = 0.0; }));
  CHECK(differs([](ExperimentConfig& c) { c.metrics.fpr_targets.push_back(0.1); }));
  CHECK(differs([](ExperimentConfig& c) { c.models["target"].toy.order = 5; }));
  CHECK(differs([](ExperimentConfig& c) { c.models["base"].endpoint.max_parallel = 9; }));
  CHECK(differs([](ExperimentConfig& c) { c.defenses.arms.pop_back(); }));
  CHECK(differs([](ExperimentConfig& c) { c.defenses.adaptive.noise.tau = 0.2; }));
  CHECK(differs([](ExperimentConfig& c) { c.retrieval->top_k = 4; }));
  CHECK(differs([](ExperimentConfig& c) { c.retrieval.reset(); }));
}

TEST_CASE("config: load_config reads a file and rejects a missing one") {
  const std::string path = "config_roundtrip_test.json";
  {
    std::ofstream out(path, std::ios::binary);
    out << minimal_config();
  }
  ExperimentConfig c = config::load_config(path);
  CHECK(c.dataset_path == "d.jsonl");
  std::remove(path.c_str());
  CHECK_THROWS_WITH_AS(config::load_config("definitely_missing_config.json"),
                       doctest::Contains("cannot open config file"), ConfigError);
}

}  // namespace
