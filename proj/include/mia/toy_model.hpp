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
#include <string>
#include <vector>

#include "mia/model.hpp"

namespace mia {

enum class TokenizerKind { kWhitespace, kByte };

// Add-lambda smoothed n-gram model. Contexts shorter than order-1 are
// padded with a begin-of-sequence sentinel that is never part of the
// vocabulary. Unseen contexts back off to the uniform distribution.
// Pure value after fitting: refitting the same corpus compares equal.
class ToyModel {
 public:
  static ToyModel fit(const std::vector<std::string>& corpus, int order,
                      double smoothing, TokenizerKind tokenizer = TokenizerKind::kWhitespace);

  // Exact per-token NLL and exact per-token distribution moments for the
  // `text` region, conditioned on `prefix`. Tokens outside the vocabulary
  // are scored at the smoothing floor of their context.
  TokenScoredText score(const std::string& text, const std::string& prefix = "") const;

  // Temperature 0 is argmax with ties broken toward the first token in
  // sorted vocabulary order; temperature > 0 samples from the tempered
  // distribution under the given seed. Always emits exactly max_tokens.
  GeneratedAnswer generate(const std::string& prompt, const GenerationConfig& config) const;

  // Next-token probabilities over the sorted vocabulary given the last
  // order-1 tokens of `context_tokens`. Sums to 1 within 1e-9.
  std::vector<double> next_distribution(const std::vector<std::string>& context_tokens) const;

  std::vector<std::string> tokenize_text(const std::string& text) const;
  std::string detokenize(const std::vector<std::string>& tokens) const;

  // Position of `token` in the sorted vocabulary, or -1 when out of
  // vocabulary.
  int vocab_id(const std::string& token) const;

  // Probability assigned to an out-of-vocabulary token after the last
  // order-1 tokens of `context_tokens`: the smoothing floor of a seen
  // context, uniform otherwise.
  double oov_probability(const std::vector<std::string>& context_tokens) const;

  const std::vector<std::string>& vocabulary() const { return vocab_; }
  int order() const { return order_; }
  double smoothing() const { return smoothing_; }
  TokenizerKind tokenizer() const { return tokenizer_; }

  bool operator==(const ToyModel& other) const = default;

 private:
  // Vocabulary ids are positions in vocab_; kBos marks sentinel padding
  // and kOov marks out-of-vocabulary context tokens.
  static constexpr int kBos = -1;
  static constexpr int kOov = -2;

  int token_id(const std::string& token) const;
  std::vector<int> context_at(const std::vector<int>& ids, std::size_t pos) const;
  double prob(const std::vector<int>& context, int token_id) const;
  std::vector<double> distribution(const std::vector<int>& context) const;
  void moments(const std::vector<int>& context, double* mu, double* sigma) const;

  int order_ = 2;
  double smoothing_ = 1.0;
  TokenizerKind tokenizer_ = TokenizerKind::kWhitespace;
  std::vector<std::string> vocab_;
  std::map<std::string, int> vocab_index_;
  std::map<std::vector<int>, std::map<int, long long>> counts_;
  std::map<std::vector<int>, long long> context_totals_;
};

// In-process client over a fitted toy model.
class ToyModelClient : public ModelClient {
 public:
  ToyModelClient(ToyModel model, std::string name)
      : model_(std::move(model)), name_(std::move(name)) {}

  TokenScoredText score_tokens(const std::string& text, const std::string& prefix = "") override {
    return model_.score(text, prefix);
  }

  GeneratedAnswer generate(const std::string& prompt, const GenerationConfig& config) override {
    return model_.generate(prompt, config);
  }

  std::string model_name() const override { return name_; }

  const ToyModel& model() const { return model_; }

 private:
  ToyModel model_;
  std::string name_;
};

}  // namespace mia
