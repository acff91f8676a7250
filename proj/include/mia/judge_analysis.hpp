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

#include <string>
#include <string_view>
#include <vector>

namespace mia::judge {

// Which candidate the judge's synthesized answer tracks.
enum class Category { kTarget, kBase, kMixed };

// Which branch of the decision procedure produced the category.
enum class Reason { kExact, kPrefix, kF1, kBoth, kSimilarityTie, kF1Tie };

std::string_view to_string(Category c);
std::string_view to_string(Reason r);

struct DecisionRecord {
  std::string judge_answer;
  std::string target_answer;
  std::string base_answer;
  Category category;
  Reason reason;
};

struct BiasReport {
  double p_target = 0.0;
  double p_base = 0.0;
  double p_mixed = 0.0;
  double bias = 0.0;  // |p_target - p_base|
  long long total = 0;
};

// Lowercase, punctuation stripped, whitespace collapsed. Unlike QA answer
// normalization this keeps articles; the categorizer normalizes its own
// inputs with this.
std::string normalize(const std::string& text);

// Normalized longest-common-prefix ratio over the first `width`
// characters: LCP / min(width, max(len a, len b)). Two empty strings
// score 1.
double prefix_similarity(const std::string& a, const std::string& b,
                         std::size_t width = 50);

// Branch order, on normalized strings j/t/b:
//   all three equal            -> mixed(both)
//   j == t                     -> target(exact)
//   j == b                     -> base(exact)
//   F1(j,t) and F1(j,b) < 0.3  -> higher prefix similarity wins
//                                 (tie -> mixed(similarity tie))
//   otherwise                  -> F1 with a 1.15x dominance requirement
//                                 (else mixed(f1 tie))
DecisionRecord categorize(const std::string& judge_answer,
                          const std::string& target_answer,
                          const std::string& base_answer);

// Category fractions over all records plus the bias score.
BiasReport bias_report(const std::vector<DecisionRecord>& records);

}  // namespace mia::judge
