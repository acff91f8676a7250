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

#include "mia/judge_analysis.hpp"

#include <algorithm>
#include <cmath>

#include "mia/common.hpp"
#include "mia/metrics.hpp"
#include "mia/tokenize.hpp"

namespace mia::judge {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::kTarget: return "target";
    case Category::kBase: return "base";
    case Category::kMixed: return "mixed";
  }
  return "?";
}

std::string_view to_string(Reason r) {
  switch (r) {
    case Reason::kExact: return "exact";
    case Reason::kPrefix: return "prefix";
    case Reason::kF1: return "f1";
    case Reason::kBoth: return "both";
    case Reason::kSimilarityTie: return "similarity_tie";
    case Reason::kF1Tie: return "f1_tie";
  }
  return "?";
}

std::string normalize(const std::string& text) {
  return metrics::normalize_answer(text, /*remove_articles=*/false);
}

double prefix_similarity(const std::string& a, const std::string& b, std::size_t width) {
  const std::size_t la = std::min(a.size(), width);
  const std::size_t lb = std::min(b.size(), width);
  const std::size_t denom = std::min(width, std::max(a.size(), b.size()));
  if (denom == 0) return 1.0;
  std::size_t lcp = 0;
  while (lcp < la && lcp < lb && a[lcp] == b[lcp]) ++lcp;
  return static_cast<double>(lcp) / static_cast<double>(denom);
}

DecisionRecord categorize(const std::string& judge_answer,
                          const std::string& target_answer,
                          const std::string& base_answer) {
  DecisionRecord rec;
  rec.judge_answer = judge_answer;
  rec.target_answer = target_answer;
  rec.base_answer = base_answer;

  const std::string j = normalize(judge_answer);
  const std::string t = normalize(target_answer);
  const std::string b = normalize(base_answer);

  if (j == t && j == b) {
    rec.category = Category::kMixed;
    rec.reason = Reason::kBoth;
    return rec;
  }
  if (j == t) {
    rec.category = Category::kTarget;
    rec.reason = Reason::kExact;
    return rec;
  }
  if (j == b) {
    rec.category = Category::kBase;
    rec.reason = Reason::kExact;
    return rec;
  }

  const auto jt = tokenize(j);
  const double f1_target = metrics::token_f1_tokens(jt, tokenize(t));
  const double f1_base = metrics::token_f1_tokens(jt, tokenize(b));

  if (f1_target < 0.3 && f1_base < 0.3) {
    const double sim_target = prefix_similarity(j, t);
    const double sim_base = prefix_similarity(j, b);
    if (sim_target > sim_base) {
      rec.category = Category::kTarget;
      rec.reason = Reason::kPrefix;
    } else if (sim_base > sim_target) {
      rec.category = Category::kBase;
      rec.reason = Reason::kPrefix;
    } else {
      rec.category = Category::kMixed;
      rec.reason = Reason::kSimilarityTie;
    }
    return rec;
  }

  if (f1_target > 1.15 * f1_base) {
    rec.category = Category::kTarget;
    rec.reason = Reason::kF1;
  } else if (f1_base > 1.15 * f1_target) {
    rec.category = Category::kBase;
    rec.reason = Reason::kF1;
  } else {
    rec.category = Category::kMixed;
    rec.reason = Reason::kF1Tie;
  }
  return rec;
}

BiasReport bias_report(const std::vector<DecisionRecord>& records) {
  if (records.empty()) throw InputError("bias report needs at least one record");
  BiasReport r;
  r.total = static_cast<long long>(records.size());
  long long n_target = 0;
  long long n_base = 0;
  long long n_mixed = 0;
  for (const auto& rec : records) {
    switch (rec.category) {
      case Category::kTarget: ++n_target; break;
      case Category::kBase: ++n_base; break;
      case Category::kMixed: ++n_mixed; break;
    }
  }
  const double total = static_cast<double>(r.total);
  r.p_target = static_cast<double>(n_target) / total;
  r.p_base = static_cast<double>(n_base) / total;
  r.p_mixed = static_cast<double>(n_mixed) / total;
  r.bias = std::abs(r.p_target - r.p_base);
  return r;
}

}  // namespace mia::judge
