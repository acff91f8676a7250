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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mia/attacks.hpp"
#include "mia/defense.hpp"
#include "mia/model.hpp"
#include "mia/toy_model.hpp"

namespace mia::config {

enum class Mode { kSftStyle, kRagStyle };
enum class DefenseArm { kEpd, kFlatten, kDpLogits, kAdaptive };
enum class ModelKind { kToy, kHttp, kMock };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);
std::string to_string(DefenseArm arm);
DefenseArm arm_from_string(const std::string& name);

// In-process n-gram model fitted from a newline-delimited corpus file.
struct ToyModelSpec {
  std::string corpus_path;
  int order = 3;
  double smoothing = 0.1;
  TokenizerKind tokenizer = TokenizerKind::kWhitespace;
  bool operator==(const ToyModelSpec&) const = default;
};

// One model role. kMock is only meaningful for the judge role and means
// the deterministic offline policy.
struct ModelSpec {
  ModelKind kind = ModelKind::kToy;
  std::string name;
  ToyModelSpec toy;
  Endpoint endpoint;
};

struct GenerationSettings {
  int max_tokens = 18;
  double temperature = 0.0;
};

// Attacks that need nothing beyond the target model; recall (prefix) and
// lira (reference model) are opt-in.
std::vector<attacks::AttackKind> default_attacks();

struct AttackSettings {
  std::vector<attacks::AttackKind> enabled = default_attacks();
  double mink_k = 0.2;
  std::string recall_prefix;
  int spv_paraphrases = 4;
  double spv_drop_prob = 0.1;
  int parallelism = 4;
};

struct AdaptiveSettings {
  defense::NoiseParams noise;
  double delta = 1e-5;
};

struct DefenseSettings {
  std::vector<DefenseArm> arms;
  double flatten_lambda = 0.5;
  double dp_sigma = 0.5;
  uint64_t dp_seed = 0;
  AdaptiveSettings adaptive;
};

struct MetricsSettings {
  std::vector<double> fpr_targets = {0.01};
};

struct RetrievalSettings {
  std::string corpus_path;
  int top_k = 2;
  std::size_t dim = 256;
};

struct ExperimentConfig {
  Mode mode = Mode::kSftStyle;
  std::string dataset_path;
  std::string output_dir;
  uint64_t seed = 0;
  GenerationSettings generation;
  AttackSettings attacks;
  MetricsSettings metrics;
  // Roles: target (required), base, judge, reference, embedding.
  std::map<std::string, ModelSpec> models;
  DefenseSettings defenses;
  std::optional<RetrievalSettings> retrieval;
};

// Strict parse: unknown keys, missing required fields, or out-of-range
// values raise ConfigError naming the offender. Does not validate.
ExperimentConfig parse_config(const std::string& json_text);

// Cross-field rules: a target model is required; rag-style needs a
// retrieval corpus; lira needs a reference model; recall needs a prefix;
// epd needs a base model; distribution defenses (flatten, dp-logits,
// adaptive) need an in-process toy target.
void validate(const ExperimentConfig& config);

// MIA_<ROLE>_ADDRESS repoints a role at an HTTP endpoint;
// MIA_<ROLE>_AUTH_TOKEN supplies its credential. Roles are upper-cased
// (MIA_TARGET_ADDRESS, MIA_JUDGE_AUTH_TOKEN, ...).
void apply_env_overrides(ExperimentConfig& config);

// parse + env overrides + validate, from a file.
ExperimentConfig load_config(const std::string& path);

// Sorted-key full-precision rendering; equal configs produce equal bytes.
std::string canonical_json(const ExperimentConfig& config);

// Hash of the canonical form and the code version; any config change
// changes the fingerprint.
uint64_t fingerprint(const ExperimentConfig& config);

}  // namespace mia::config
