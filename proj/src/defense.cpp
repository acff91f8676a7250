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

#include "mia/defense.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <limits>
#include <random>
#include <set>
#include <utility>

#include "mia/common.hpp"
#include "mia/kernels.hpp"
#include "mia/metrics.hpp"
#include "mia/rng.hpp"
#include "mia/tokenize.hpp"

namespace mia::defense {

namespace {

// Four decimal places, truncated rather than rounded: 0.69315 renders as
// "0.6931".
std::string format_loss(double loss) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10f", loss);
  std::string s(buf);
  const std::size_t dot = s.find('.');
  if (dot == std::string::npos) return s;
  return s.substr(0, dot + 5);
}

std::string trim_copy(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Text up to the first clause boundary, for quoting inside a synthesis.
std::string first_clause(const std::string& text) {
  const std::size_t cut = text.find_first_of(".,;:!?");
  const std::string head = trim_copy(cut == std::string::npos ? text : text.substr(0, cut));
  return head.empty() ? trim_copy(text) : head;
}

// Truncates the scored region to the first `count` tokens and recomputes
// the mean loss over it; answer text is kept whole so the judge sees the
// full candidates.
void truncate_scored(GeneratedAnswer* answer, std::size_t count) {
  TokenScoredText& s = answer->scored;
  if (s.tokens.size() > count) s.tokens.resize(count);
  if (s.nll.size() > count) s.nll.resize(count);
  if (s.moments_mu && s.moments_mu->size() > count) s.moments_mu->resize(count);
  if (s.moments_sigma && s.moments_sigma->size() > count) s.moments_sigma->resize(count);
  answer->mean_loss = s.nll.empty() ? 0.0 : s.mean_nll();
}

double logsumexp(const std::vector<double>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double acc = 0.0;
  for (double x : logits) acc += std::exp(x - m);
  return m + std::log(acc);
}

}  // namespace

std::string format_judge_prompt(const std::string& query, const std::string& target_answer,
                                double target_loss, const std::string& base_answer,
                                double base_loss) {
  std::string p;
  p += "You are a judge that needs to generate a final answer based on two candidate answers.\n";
  p += "Consider both PRIVACY (low-loss answers that might leak training data) and ACCURACY "
       "(being factually correct).\n\n";
  p += "Question: " + query + "\n";
  p += "Answer A (target): " + target_answer + "\n";
  p += "Answer B (base): " + base_answer + "\n\n";
  p += "Model confidence (lower loss indicates higher confidence):\n";
  p += "  -- Target answer loss: " + format_loss(target_loss) + "\n";
  p += "  -- Base   answer loss: " + format_loss(base_loss) + "\n\n";
  p += "Your task:\n";
  p += "1. Weigh privacy and factual accuracy.\n";
  p += "2. Generate a new final answer that:\n";
  p += "  - Maintains accuracy while protecting privacy\n";
  p += "  - Uses general language instead of specific details\n";
  p += "  - Avoids exact quotes or precise measurements\n";
  p += "  - Combines the best aspects of both answers\n\n";
  p += "Generate your final answer:";
  return p;
}

std::string mock_judge_policy(const std::string& target_answer,
                              const std::string& base_answer) {
  if (target_answer == base_answer) return target_answer;
  const std::vector<std::string> t = tokenize(target_answer);
  const std::vector<std::string> b = tokenize(base_answer);
  if (metrics::token_f1_tokens(t, b) >= 0.8) return base_answer;
  return "Combining both: " + base_answer + " (" + first_clause(target_answer) + ")";
}

EpdResult epd_answer(const std::string& query, ModelClient& target, ModelClient& base,
                     ModelClient* judge, const GenerationConfig& gen_config) {
  auto target_future = std::async(std::launch::async,
                                  [&] { return target.generate(query, gen_config); });
  auto base_future = std::async(std::launch::async,
                                [&] { return base.generate(query, gen_config); });
  GeneratedAnswer target_answer;
  try {
    target_answer = target_future.get();
  } catch (const TransportError& e) {
    base_future.wait();
    throw TransportError(e.attempts(), std::string("target generation failed: ") + e.what());
  }
  GeneratedAnswer base_answer;
  try {
    base_answer = base_future.get();
  } catch (const TransportError& e) {
    throw TransportError(e.attempts(), std::string("base generation failed: ") + e.what());
  }

  const std::size_t truncation =
      std::min(target_answer.scored.tokens.size(), base_answer.scored.tokens.size());
  truncate_scored(&target_answer, truncation);
  truncate_scored(&base_answer, truncation);

  EpdResult result;
  result.bundle.query = query;
  result.bundle.target_answer = std::move(target_answer);
  result.bundle.base_answer = std::move(base_answer);
  result.bundle.truncation_length = truncation;

  const CandidateBundle& bundle = result.bundle;
  JudgeVerdict& verdict = result.verdict;
  if (tokenize(bundle.target_answer.text).empty() && tokenize(bundle.base_answer.text).empty()) {
    // Nothing to judge; an empty verdict with the fallback flag set.
    verdict.fallback_used = true;
    return result;
  }
  if (judge == nullptr) {
    verdict.final_answer =
        mock_judge_policy(bundle.target_answer.text, bundle.base_answer.text);
    verdict.judge_raw_output = verdict.final_answer;
    return result;
  }

  const std::string prompt =
      format_judge_prompt(bundle.query, bundle.target_answer.text,
                          bundle.target_answer.mean_loss, bundle.base_answer.text,
                          bundle.base_answer.mean_loss);
  bool failed = false;
  try {
    const GeneratedAnswer judged = judge->generate(prompt, gen_config);
    verdict.judge_raw_output = judged.text;
    if (!trim_copy(judged.text).empty()) {
      verdict.final_answer = judged.text;
      return result;
    }
  } catch (const TransportError&) {
    failed = true;
  } catch (const CapabilityError&) {
    failed = true;
  } catch (const ProtocolError&) {
    failed = true;
  }
  if (failed) verdict.judge_raw_output.clear();
  verdict.final_answer = mock_judge_policy(bundle.target_answer.text, bundle.base_answer.text);
  verdict.fallback_used = true;
  return result;
}

std::vector<double> defense_flatten(const std::vector<double>& distribution, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ConfigError("flatten lambda must be in [0, 1]");
  }
  double total = 0.0;
  for (double p : distribution) {
    if (!(p >= 0.0)) throw InputError("flatten input has a negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InputError("flatten input does not sum to 1");
  }
  std::vector<double> out = distribution;
  kernels::blend_uniform_f64(out.data(), out.size(), lambda);
  return out;
}

std::vector<double> defense_dp_logits(const std::vector<double>& logits, double sigma,
                                      uint64_t seed) {
  if (!(sigma >= 0.0)) throw ConfigError("dp noise sigma must be >= 0");
  if (sigma == 0.0) return logits;
  GaussianSampler gauss(seed);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] + sigma * gauss();
  return out;
}

void validate(const NoiseParams& params) {
  if (std::abs(params.w_sim + params.w_loss - 1.0) > 1e-12) {
    throw ConfigError("noise weights must sum to 1");
  }
  if (!(params.w_sim >= 0.0 && params.w_loss >= 0.0)) {
    throw ConfigError("noise weights must be non-negative");
  }
  if (!(params.tau > 0.0 && params.tau < 1.0)) {
    throw ConfigError("noise gate tau must be in (0, 1)");
  }
  if (!(params.sigma_base > 0.0)) throw ConfigError("sigma_base must be > 0");
  if (!(params.lambda_amp >= 0.0)) throw ConfigError("lambda_amp must be >= 0");
  if (!(params.alpha_decay >= 0.0)) throw ConfigError("alpha_decay must be >= 0");
  if (!(params.rdp_order > 1.0)) throw ConfigError("rdp order must be > 1");
}

BetaResult noise_strength_beta(const std::string& target_answer,
                               const std::string& base_answer, double target_loss,
                               double base_loss, const NoiseParams& params,
                               const retrieval::Embedder& embedder) {
  validate(params);
  BetaResult r;
  if (!target_answer.empty() && !base_answer.empty()) {
    r.similarity =
        retrieval::cosine(embedder.embed(target_answer), embedder.embed(base_answer));
  }
  const double max_loss = std::max(target_loss, base_loss);
  if (max_loss > 0.0) {
    r.delta_loss = std::abs(target_loss - base_loss) / max_loss;
  } else {
    r.degenerate = true;
  }
  // Cosine can exceed 1 by an ulp for identical texts; never let beta go
  // negative from rounding alone.
  r.beta = std::max(0.0, params.w_sim * (1.0 - r.similarity) + params.w_loss * r.delta_loss);
  return r;
}

double token_noise_scale(double beta, double confidence, const NoiseParams& params) {
  if (!(beta >= 0.0)) throw InputError("noise strength beta must be >= 0");
  return params.sigma_base * params.lambda_amp * beta *
         std::exp(-params.alpha_decay * confidence);
}

double rdp_step_cost(double sigma, double order, RdpForm form) {
  if (!(order > 1.0)) throw ConfigError("rdp order must be > 1");
  if (!(sigma >= 0.0)) throw InputError("rdp step sigma must be >= 0");
  if (form == RdpForm::kQuadratic) return order * sigma * sigma / 2.0;
  if (sigma == 0.0) return std::numeric_limits<double>::infinity();
  return order / (2.0 * sigma * sigma);
}

PrivacyLedger::PrivacyLedger(double order, RdpForm form) : order_(order), form_(form) {
  if (!(order > 1.0)) throw ConfigError("rdp order must be > 1");
}

void PrivacyLedger::add_step(double sigma) {
  cost_ += rdp_step_cost(sigma, order_, form_);
  sigmas_.push_back(sigma);
}

double PrivacyLedger::total(RdpForm form) const {
  std::vector<double> sorted = sigmas_;
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (double s : sorted) total += rdp_step_cost(s, order_, form);
  return total;
}

double PrivacyLedger::to_epsilon(double delta) const {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must be in (0, 1)");
  return total(form_) + std::log(1.0 / delta) / (order_ - 1.0);
}

AdaptiveNoiseResult apply_adaptive_noise(const ToyModel& target_model,
                                         const CandidateBundle& bundle,
                                         const JudgeVerdict& verdict,
                                         const NoiseParams& params,
                                         const retrieval::Embedder& embedder,
                                         PrivacyLedger& ledger, uint64_t seed) {
  validate(params);
  AdaptiveNoiseResult out;
  out.beta = noise_strength_beta(bundle.target_answer.text, bundle.base_answer.text,
                                 bundle.target_answer.mean_loss,
                                 bundle.base_answer.mean_loss, params, embedder);
  if (!(out.beta.beta > params.tau)) return out;
  out.activated = true;

  std::set<std::string> target_bag;
  for (const auto& t : target_model.tokenize_text(bundle.target_answer.text)) {
    target_bag.insert(t);
  }

  std::vector<std::string> context = target_model.tokenize_text(bundle.query);
  const std::vector<std::string> final_tokens =
      target_model.tokenize_text(verdict.final_answer);
  for (std::size_t i = 0; i < final_tokens.size(); ++i) {
    const std::string& token = final_tokens[i];
    if (target_bag.count(token) != 0) {
      const std::vector<double> dist = target_model.next_distribution(context);
      std::vector<double> logits(dist.size());
      for (std::size_t j = 0; j < dist.size(); ++j) logits[j] = std::log(dist[j]);

      double confidence = 0.0;
      if (logits.size() >= 2) {
        std::vector<double> top = logits;
        std::nth_element(top.begin(), top.begin() + 1, top.end(), std::greater<double>());
        confidence = top[0] - top[1];
      }

      ProtectedTokenNoise record;
      record.position = i;
      record.token = token;
      record.confidence = confidence;
      record.sigma = token_noise_scale(out.beta.beta, confidence, params);
      record.noised_logits = defense_dp_logits(
          logits, record.sigma, derive_seed(seed, "adaptive/" + std::to_string(i)));
      const int id = target_model.vocab_id(token);
      if (id >= 0) {
        record.noised_nll =
            logsumexp(record.noised_logits) - record.noised_logits[static_cast<std::size_t>(id)];
      } else {
        // Out-of-vocabulary tokens have no logit coordinate; they keep the
        // model's floor score.
        record.noised_nll = -std::log(target_model.oov_probability(context));
      }
      ledger.add_step(record.sigma);
      out.tokens.push_back(std::move(record));
    }
    context.push_back(token);
  }
  return out;
}

DefendedToyClient::DefendedToyClient(ToyModel model, std::string name,
                                     OutputDefenseConfig config)
    : model_(std::move(model)), name_(std::move(name)), config_(config) {
  if (!(config_.flatten_lambda >= 0.0 && config_.flatten_lambda <= 1.0)) {
    throw ConfigError("flatten lambda must be in [0, 1]");
  }
  if (!(config_.dp_sigma >= 0.0)) throw ConfigError("dp noise sigma must be >= 0");
}

bool DefendedToyClient::passthrough() const {
  return config_.flatten_lambda == 0.0 && config_.dp_sigma == 0.0;
}

std::vector<std::string> DefendedToyClient::context_window(
    const std::vector<std::string>& context) const {
  const std::size_t width = static_cast<std::size_t>(model_.order() - 1);
  const std::size_t take = std::min(width, context.size());
  return {context.end() - static_cast<long>(take), context.end()};
}

std::vector<double> DefendedToyClient::defended_distribution(
    const std::vector<std::string>& window) const {
  std::vector<double> dist = model_.next_distribution(window);
  if (config_.flatten_lambda > 0.0) {
    kernels::blend_uniform_f64(dist.data(), dist.size(), config_.flatten_lambda);
  }
  if (config_.dp_sigma > 0.0) {
    // Noise is a pure function of the context window's identity, padded
    // slots and out-of-vocabulary slots included, so repeated calls and
    // generate-then-score round trips see the same distribution.
    const std::size_t width = static_cast<std::size_t>(model_.order() - 1);
    std::string key;
    for (std::size_t i = window.size(); i < width; ++i) key += "B;";
    for (const auto& t : window) {
      if (model_.vocab_id(t) < 0) {
        key += "O;";
      } else {
        key += std::to_string(t.size());
        key += ':';
        key += t;
        key += ';';
      }
    }
    std::vector<double> logits(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i) logits[i] = std::log(dist[i]);
    logits = defense_dp_logits(logits, config_.dp_sigma, derive_seed(config_.dp_seed, key));
    const double norm = logsumexp(logits);
    for (std::size_t i = 0; i < dist.size(); ++i) dist[i] = std::exp(logits[i] - norm);
  }
  return dist;
}

TokenScoredText DefendedToyClient::score_tokens(const std::string& text,
                                                const std::string& prefix) {
  if (passthrough()) return model_.score(text, prefix);

  const std::vector<std::string> text_tokens = model_.tokenize_text(text);
  if (text_tokens.empty()) throw InputError("cannot score text with no tokens");
  std::vector<std::string> all = model_.tokenize_text(prefix);
  const std::size_t prefix_len = all.size();
  all.insert(all.end(), text_tokens.begin(), text_tokens.end());

  TokenScoredText out;
  out.text = text;
  out.tokens = text_tokens;
  out.nll.reserve(text_tokens.size());
  out.moments_mu.emplace();
  out.moments_sigma.emplace();
  const double vocab_size = static_cast<double>(model_.vocabulary().size());
  for (std::size_t p = prefix_len; p < all.size(); ++p) {
    const std::vector<std::string> context(all.begin(), all.begin() + static_cast<long>(p));
    const std::vector<std::string> window = context_window(context);
    const std::vector<double> dist = defended_distribution(window);

    const int id = model_.vocab_id(all[p]);
    double probability;
    if (id >= 0) {
      probability = dist[static_cast<std::size_t>(id)];
    } else {
      // Out-of-vocabulary tokens keep the floor-probability convention;
      // flattening mixes the floor with uniform mass, noise does not
      // apply because the token has no logit coordinate.
      probability = model_.oov_probability(window);
      if (config_.flatten_lambda > 0.0) {
        probability =
            (1.0 - config_.flatten_lambda) * probability + config_.flatten_lambda / vocab_size;
      }
    }
    out.nll.push_back(-std::log(probability));

    double m1 = 0.0;
    double m2 = 0.0;
    for (double q : dist) {
      const double lq = std::log(q);
      m1 += q * lq;
      m2 += q * lq * lq;
    }
    out.moments_mu->push_back(m1);
    out.moments_sigma->push_back(std::sqrt(std::max(0.0, m2 - m1 * m1)));
  }
  return out;
}

GeneratedAnswer DefendedToyClient::generate(const std::string& prompt,
                                            const GenerationConfig& config) {
  if (passthrough()) return model_.generate(prompt, config);
  if (config.max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  if (config.temperature < 0.0) throw ConfigError("temperature must be >= 0");

  std::vector<std::string> tokens = model_.tokenize_text(prompt);
  std::mt19937_64 rng(config.seed);
  TokenScoredText scored;
  scored.moments_mu.emplace();
  scored.moments_sigma.emplace();

  const std::vector<std::string>& vocab = model_.vocabulary();
  for (int step = 0; step < config.max_tokens; ++step) {
    const std::vector<double> dist = defended_distribution(context_window(tokens));

    std::size_t chosen = 0;
    if (config.temperature == 0.0) {
      for (std::size_t i = 1; i < dist.size(); ++i) {
        if (dist[i] > dist[chosen]) chosen = i;
      }
    } else {
      std::vector<double> w(dist.size());
      double z = 0.0;
      for (std::size_t i = 0; i < dist.size(); ++i) {
        w[i] = std::pow(dist[i], 1.0 / config.temperature);
        z += w[i];
      }
      const double u = (static_cast<double>(rng() >> 11) * 0x1.0p-53) * z;
      double acc = 0.0;
      chosen = dist.size() - 1;
      for (std::size_t i = 0; i < w.size(); ++i) {
        acc += w[i];
        if (u < acc) {
          chosen = i;
          break;
        }
      }
    }

    scored.tokens.push_back(vocab[chosen]);
    scored.nll.push_back(-std::log(dist[chosen]));
    double m1 = 0.0;
    double m2 = 0.0;
    for (double q : dist) {
      const double lq = std::log(q);
      m1 += q * lq;
      m2 += q * lq * lq;
    }
    scored.moments_mu->push_back(m1);
    scored.moments_sigma->push_back(std::sqrt(std::max(0.0, m2 - m1 * m1)));
    tokens.push_back(vocab[chosen]);
  }

  scored.text = model_.detokenize(scored.tokens);
  return make_generated_answer(std::move(scored));
}

}  // namespace mia::defense
