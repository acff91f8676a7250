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

#include "mia/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "mia/common.hpp"
#include "mia/tokenize.hpp"

namespace mia {

namespace {

std::vector<std::string> tokenize_with(TokenizerKind kind, const std::string& text) {
  if (kind == TokenizerKind::kWhitespace) return tokenize(text);
  std::vector<std::string> out;
  out.reserve(text.size());
  for (char c : text) out.emplace_back(1, c);
  return out;
}

}  // namespace

ToyModel ToyModel::fit(const std::vector<std::string>& corpus, int order,
                       double smoothing, TokenizerKind tokenizer) {
  if (corpus.empty()) throw ConfigError("toy model corpus is empty");
  if (order < 1) throw ConfigError("toy model order must be >= 1");
  if (!(smoothing > 0.0)) throw ConfigError("toy model smoothing must be > 0");

  ToyModel m;
  m.order_ = order;
  m.smoothing_ = smoothing;
  m.tokenizer_ = tokenizer;

  std::set<std::string> vocab;
  std::vector<std::vector<std::string>> lines;
  lines.reserve(corpus.size());
  for (const auto& line : corpus) {
    lines.push_back(tokenize_with(tokenizer, line));
    for (const auto& t : lines.back()) vocab.insert(t);
  }
  if (vocab.empty()) throw ConfigError("toy model corpus has no tokens");
  m.vocab_.assign(vocab.begin(), vocab.end());
  for (int i = 0; i < static_cast<int>(m.vocab_.size()); ++i) {
    m.vocab_index_[m.vocab_[i]] = i;
  }

  for (const auto& line : lines) {
    std::vector<int> ids;
    ids.reserve(line.size());
    for (const auto& t : line) ids.push_back(m.vocab_index_.at(t));
    for (std::size_t p = 0; p < ids.size(); ++p) {
      const std::vector<int> ctx = m.context_at(ids, p);
      ++m.counts_[ctx][ids[p]];
      ++m.context_totals_[ctx];
    }
  }
  return m;
}

int ToyModel::token_id(const std::string& token) const {
  auto it = vocab_index_.find(token);
  return it == vocab_index_.end() ? kOov : it->second;
}

std::vector<int> ToyModel::context_at(const std::vector<int>& ids, std::size_t pos) const {
  std::vector<int> ctx(static_cast<std::size_t>(order_ - 1));
  for (int j = 0; j < order_ - 1; ++j) {
    const long long idx = static_cast<long long>(pos) - (order_ - 1) + j;
    ctx[static_cast<std::size_t>(j)] = idx < 0 ? kBos : ids[static_cast<std::size_t>(idx)];
  }
  return ctx;
}

double ToyModel::prob(const std::vector<int>& context, int id) const {
  const double v = static_cast<double>(vocab_.size());
  auto tot = context_totals_.find(context);
  if (tot == context_totals_.end()) return 1.0 / v;
  long long c = 0;
  auto row = counts_.find(context);
  if (row != counts_.end()) {
    auto cell = row->second.find(id);
    if (cell != row->second.end()) c = cell->second;
  }
  return (static_cast<double>(c) + smoothing_) /
         (static_cast<double>(tot->second) + smoothing_ * v);
}

std::vector<double> ToyModel::distribution(const std::vector<int>& context) const {
  std::vector<double> dist(vocab_.size());
  auto tot = context_totals_.find(context);
  if (tot == context_totals_.end()) {
    const double u = 1.0 / static_cast<double>(vocab_.size());
    std::fill(dist.begin(), dist.end(), u);
    return dist;
  }
  const double denom =
      static_cast<double>(tot->second) + smoothing_ * static_cast<double>(vocab_.size());
  const auto& row = counts_.at(context);
  for (std::size_t i = 0; i < dist.size(); ++i) {
    auto cell = row.find(static_cast<int>(i));
    const double c = cell == row.end() ? 0.0 : static_cast<double>(cell->second);
    dist[i] = (c + smoothing_) / denom;
  }
  return dist;
}

void ToyModel::moments(const std::vector<int>& context, double* mu, double* sigma) const {
  const std::vector<double> dist = distribution(context);
  double m1 = 0.0;
  double m2 = 0.0;
  for (double p : dist) {
    const double lp = std::log(p);
    m1 += p * lp;
    m2 += p * lp * lp;
  }
  *mu = m1;
  *sigma = std::sqrt(std::max(0.0, m2 - m1 * m1));
}

std::vector<std::string> ToyModel::tokenize_text(const std::string& text) const {
  return tokenize_with(tokenizer_, text);
}

std::string ToyModel::detokenize(const std::vector<std::string>& tokens) const {
  if (tokenizer_ == TokenizerKind::kWhitespace) return join_tokens(tokens);
  std::string out;
  for (const auto& t : tokens) out += t;
  return out;
}

std::vector<double> ToyModel::next_distribution(
    const std::vector<std::string>& context_tokens) const {
  std::vector<int> ids;
  ids.reserve(context_tokens.size());
  for (const auto& t : context_tokens) ids.push_back(token_id(t));
  return distribution(context_at(ids, ids.size()));
}

int ToyModel::vocab_id(const std::string& token) const {
  const int id = token_id(token);
  return id == kOov ? -1 : id;
}

double ToyModel::oov_probability(const std::vector<std::string>& context_tokens) const {
  std::vector<int> ids;
  ids.reserve(context_tokens.size());
  for (const auto& t : context_tokens) ids.push_back(token_id(t));
  return prob(context_at(ids, ids.size()), kOov);
}

TokenScoredText ToyModel::score(const std::string& text, const std::string& prefix) const {
  const std::vector<std::string> text_tokens = tokenize_text(text);
  if (text_tokens.empty()) throw InputError("cannot score text with no tokens");
  const std::vector<std::string> prefix_tokens = tokenize_text(prefix);

  std::vector<int> ids;
  ids.reserve(prefix_tokens.size() + text_tokens.size());
  for (const auto& t : prefix_tokens) ids.push_back(token_id(t));
  for (const auto& t : text_tokens) ids.push_back(token_id(t));

  TokenScoredText out;
  out.text = text;
  out.tokens = text_tokens;
  out.nll.reserve(text_tokens.size());
  out.moments_mu.emplace();
  out.moments_sigma.emplace();
  for (std::size_t p = prefix_tokens.size(); p < ids.size(); ++p) {
    const std::vector<int> ctx = context_at(ids, p);
    out.nll.push_back(-std::log(prob(ctx, ids[p])));
    double mu = 0.0;
    double sigma = 0.0;
    moments(ctx, &mu, &sigma);
    out.moments_mu->push_back(mu);
    out.moments_sigma->push_back(sigma);
  }
  return out;
}

GeneratedAnswer ToyModel::generate(const std::string& prompt,
                                   const GenerationConfig& config) const {
  if (config.max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  if (config.temperature < 0.0) throw ConfigError("temperature must be >= 0");

  std::vector<int> ids;
  for (const auto& t : tokenize_text(prompt)) ids.push_back(token_id(t));

  std::mt19937_64 rng(config.seed);
  TokenScoredText scored;
  scored.moments_mu.emplace();
  scored.moments_sigma.emplace();

  for (int step = 0; step < config.max_tokens; ++step) {
    const std::vector<int> ctx = context_at(ids, ids.size());
    const std::vector<double> dist = distribution(ctx);

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

    scored.tokens.push_back(vocab_[chosen]);
    scored.nll.push_back(-std::log(dist[chosen]));
    double m1 = 0.0;
    double m2 = 0.0;
    for (double p : dist) {
      const double lp = std::log(p);
      m1 += p * lp;
      m2 += p * lp * lp;
    }
    scored.moments_mu->push_back(m1);
    scored.moments_sigma->push_back(std::sqrt(std::max(0.0, m2 - m1 * m1)));
    ids.push_back(static_cast<int>(chosen));
  }

  scored.text = detokenize(scored.tokens);
  return make_generated_answer(std::move(scored));
}

}  // namespace mia
