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
#include <string_view>
#include <vector>

#include "mia/model.hpp"

namespace mia::attacks {

// Every scorer is oriented so that a HIGHER value means more likely
// member; metrics consume one convention.
enum class AttackKind { kSpv, kLira, kRecall, kLogloss, kZlib, kMink, kMinkpp };

std::string_view to_string(AttackKind kind);
AttackKind attack_from_string(std::string_view name);
const std::vector<AttackKind>& all_attacks();

struct AttackScore {
  AttackKind attack;
  double value = 0.0;
  // Inputs used approximated moments (top-k reconstruction).
  bool approximate = false;
  // A defined-by-convention edge value was taken (e.g. zero unconditional
  // loss in recall, skipped empty paraphrases in spv).
  bool degenerate = false;
};

struct ScoredSample {
  std::string sample_id;
  int label = 0;  // 1 member, 0 non-member
  AttackScore score;
};

// One record of work for the suite runner. `prefix` conditions every
// score but is never itself scored or attacked; empty means the text is
// scored unconditionally.
struct AttackSample {
  std::string id;
  std::string text;
  int label = 0;
  std::string prefix;
};

// Compressed octet length of `text` in the raw DEFLATE format at fixed
// level 6. The level is part of the score definition; changing it changes
// zlib attack values.
std::size_t deflate_length(const std::string& text);

// -mean(nll).
AttackScore score_logloss(const TokenScoredText& scored);

// -sum(nll) / deflate_length(text).
AttackScore score_zlib(const TokenScoredText& scored);

// Mean log-prob of the ceil(k*T) highest-loss tokens. k=1 degenerates to
// score_logloss exactly.
AttackScore score_mink(const TokenScoredText& scored, double k_fraction = 0.2);

// Z-score each position against the model's own distribution moments,
// z_t = (logprob_t - mu_t) / sigma_t (z = 0 where sigma_t = 0), then mean
// the ceil(k*T) smallest z values.
AttackScore score_minkpp(const TokenScoredText& scored, double k_fraction = 0.2);

// c/u where u = mean NLL of text under `base_prefix` alone and c = mean
// NLL with the known non-member prefix prepended. u = 0 gives 1
// (degenerate).
AttackScore score_recall(ModelClient& target, const std::string& text,
                         const std::string& nonmember_prefix,
                         const std::string& base_prefix = "");

// meanNLL(reference) - meanNLL(target) over the same text.
AttackScore score_lira(const TokenScoredText& target_scored,
                       const TokenScoredText& reference_scored);

// Seeded word-dropout paraphrase: every token after the first is dropped
// independently with probability drop_prob.
std::string word_dropout_paraphrase(const std::string& text, double drop_prob,
                                    uint64_t seed);

struct SpvConfig {
  int paraphrase_count = 4;
  double drop_prob = 0.1;
  // When set, paraphrases are requested from the endpoint itself instead
  // of the offline word-dropout policy.
  bool prompt_endpoint = false;
  int prompt_max_tokens = 32;
  uint64_t seed = 0;
};

// Mean paraphrase loss minus own loss, first-order probabilistic
// variation with self-paraphrases. Both sides are scored under the same
// conditioning prefix.
AttackScore score_spv(ModelClient& target, const std::string& text, const SpvConfig& config,
                      const std::string& prefix = "");

struct SuiteConfig {
  std::vector<AttackKind> attacks = all_attacks();
  double mink_k = 0.2;
  std::string recall_prefix;
  SpvConfig spv;
  uint64_t master_seed = 0;
  int parallelism = 4;
};

// Scores every sample with every enabled attack. Fan-out may be parallel;
// the result is sorted by sample id per attack, so ordering never depends
// on scheduling. Configuration gaps (lira without a reference, recall
// without a prefix) fail before any endpoint call.
std::map<AttackKind, std::vector<ScoredSample>> run_attack_suite(
    const std::vector<AttackSample>& dataset, ModelClient& target,
    ModelClient* reference, const SuiteConfig& config);

}  // namespace mia::attacks
