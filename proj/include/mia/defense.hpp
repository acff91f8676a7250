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
#include <optional>
#include <string>
#include <vector>

#include "mia/model.hpp"
#include "mia/retrieval.hpp"
#include "mia/toy_model.hpp"

namespace mia::defense {

// ---------------------------------------------------------------------
// Judge ensemble.

// Query plus both candidate answers with their scored regions truncated
// to the same token count T = min of the two generation lengths; mean
// losses are recomputed over the truncated regions.
struct CandidateBundle {
  std::string query;
  GeneratedAnswer target_answer;
  GeneratedAnswer base_answer;
  std::size_t truncation_length = 0;
};

struct JudgeVerdict {
  std::string final_answer;
  std::string judge_raw_output;
  bool fallback_used = false;
};

struct EpdResult {
  CandidateBundle bundle;
  JudgeVerdict verdict;
};

// The judge prompt with the five slots filled; losses rendered to four
// decimal places. Identical inputs produce identical bytes.
std::string format_judge_prompt(const std::string& query, const std::string& target_answer,
                                double target_loss, const std::string& base_answer,
                                double base_loss);

// Deterministic offline judge: identical candidates pass through, near
// duplicates (token F1 >= 0.8) resolve to the base answer, anything else
// becomes a synthesis quoting the base answer and the target's first
// clause. One empty candidate yields the other.
std::string mock_judge_policy(const std::string& target_answer,
                              const std::string& base_answer);

// Generates both candidates concurrently, truncates, formats the prompt,
// and asks the judge. A null judge means the mock policy by choice
// (fallback_used stays false); a judge that fails or answers emptily
// falls back to the mock policy with fallback_used set.
EpdResult epd_answer(const std::string& query, ModelClient& target, ModelClient& base,
                     ModelClient* judge, const GenerationConfig& gen_config);

// ---------------------------------------------------------------------
// Output-distribution defenses.

// p' = (1-lambda)*p + lambda*uniform. Argmax-preserving for lambda < 1
// and never entropy-decreasing.
std::vector<double> defense_flatten(const std::vector<double>& distribution, double lambda);

// Adds i.i.d. N(0, sigma^2) to every logit; sigma = 0 returns the input
// bit-identically.
std::vector<double> defense_dp_logits(const std::vector<double>& logits, double sigma,
                                      uint64_t seed);

// ---------------------------------------------------------------------
// Adaptive noise (similarity- and loss-aware) with an RDP ledger.

// Two printed RDP step-cost forms. The kQuadratic form alpha*sigma^2/2 grows
// with the noise scale, opposite to the standard Gaussian-mechanism form
// alpha/(2*sigma^2); both are carried so summaries can show them side by
// side rather than silently correcting either.
enum class RdpForm { kQuadratic, kStandard };

struct NoiseParams {
  double w_sim = 0.6;
  double w_loss = 0.4;
  double tau = 0.1;
  double sigma_base = 1.0;
  double lambda_amp = 1.0;
  // Decay rate of noise with token confidence (exp(-alpha_decay * margin)).
  double alpha_decay = 1.0;
  // Renyi order of the privacy ledger; must exceed 1.
  double rdp_order = 2.0;
  RdpForm rdp_form = RdpForm::kQuadratic;
};

// Throws ConfigError unless w_sim + w_loss = 1, tau in (0,1),
// sigma_base > 0 and rdp_order > 1.
void validate(const NoiseParams& params);

struct BetaResult {
  double beta = 0.0;
  double similarity = 0.0;
  double delta_loss = 0.0;
  // Both losses were zero; delta defined 0.
  bool degenerate = false;
};

// beta = w_sim*(1-sim) + w_loss*|L_t-L_b|/max(L_t,L_b). Similarity is the
// cosine of the two answers' embeddings, 0 when either answer is empty.
BetaResult noise_strength_beta(const std::string& target_answer,
                               const std::string& base_answer, double target_loss,
                               double base_loss, const NoiseParams& params,
                               const retrieval::Embedder& embedder);

// sigma_i = sigma_base * lambda_amp * beta * exp(-alpha_decay * confidence).
double token_noise_scale(double beta, double confidence, const NoiseParams& params);

double rdp_step_cost(double sigma, double order, RdpForm form);

// Accumulated RDP cost across noised tokens. Step order never affects
// reported totals: they are recomputed over sorted step records.
class PrivacyLedger {
 public:
  explicit PrivacyLedger(double order, RdpForm form = RdpForm::kQuadratic);

  void add_step(double sigma);

  double order() const { return order_; }
  RdpForm form() const { return form_; }
  long long steps() const { return static_cast<long long>(sigmas_.size()); }
  // Running total in the configured form; non-decreasing.
  double cost() const { return cost_; }
  // Deterministic total in either form (sorted summation). Zero-sigma
  // steps make the standard form infinite.
  double total(RdpForm form) const;
  // epsilon at the given delta: total + ln(1/delta)/(order-1).
  double to_epsilon(double delta) const;
  const std::vector<double>& step_sigmas() const { return sigmas_; }

 private:
  double order_;
  RdpForm form_;
  double cost_ = 0.0;
  std::vector<double> sigmas_;
};

struct ProtectedTokenNoise {
  std::size_t position = 0;  // index into the final answer's tokens
  std::string token;
  double confidence = 0.0;
  double sigma = 0.0;
  std::vector<double> noised_logits;
  // NLL of the token under softmax(noised_logits).
  double noised_nll = 0.0;
};

struct AdaptiveNoiseResult {
  bool activated = false;
  BetaResult beta;
  std::vector<ProtectedTokenNoise> tokens;
};

// Gate on beta > tau, then noise the target-model logits of every final-
// answer token that also appears in the target answer, charging the
// ledger one step per protected token. beta <= tau is a strict no-op.
AdaptiveNoiseResult apply_adaptive_noise(const ToyModel& target_model,
                                         const CandidateBundle& bundle,
                                         const JudgeVerdict& verdict,
                                         const NoiseParams& params,
                                         const retrieval::Embedder& embedder,
                                         PrivacyLedger& ledger, uint64_t seed);

// ---------------------------------------------------------------------
// Defended serving.

struct OutputDefenseConfig {
  double flatten_lambda = 0.0;
  double dp_sigma = 0.0;
  uint64_t dp_seed = 0;
};

// Serves a toy model through the flatten and DP-logits chain. With both
// knobs at zero every call delegates straight to the wrapped model, so
// the chain is bit-identical to no defense. Noise is keyed on the
// context window, keeping score_tokens pure and generation consistent
// with later echo-scoring.
class DefendedToyClient : public ModelClient {
 public:
  DefendedToyClient(ToyModel model, std::string name, OutputDefenseConfig config);

  TokenScoredText score_tokens(const std::string& text, const std::string& prefix = "") override;
  GeneratedAnswer generate(const std::string& prompt, const GenerationConfig& config) override;
  std::string model_name() const override { return name_; }

  const ToyModel& model() const { return model_; }

 private:
  bool passthrough() const;
  std::vector<double> defended_distribution(const std::vector<std::string>& window) const;
  std::vector<std::string> context_window(const std::vector<std::string>& context) const;

  ToyModel model_;
  std::string name_;
  OutputDefenseConfig config_;
};

}  // namespace mia::defense
