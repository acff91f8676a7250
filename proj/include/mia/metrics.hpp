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

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mia::metrics {

struct RocPoint {
  double fpr;
  double tpr;
};

// Privacy summary of one attack score vector. `points` starts at (0,0),
// ends at (1,1), and is non-decreasing in fpr.
struct RocSummary {
  std::vector<RocPoint> points;
  double auc = 0.0;
  double asr = 0.0;
  std::map<double, double> tpr_at;
};

// Labels are 1 for members, 0 for non-members. All score-based metrics
// require at least one sample of each class and throw InputError otherwise.

// Probability a random member outscores a random non-member, ties counted
// half. Exact pair counting, so it matches trapezoidal integration of
// roc_points to rounding error.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Best achievable accuracy of the rule "score > t implies member" over
// thresholds -inf and every distinct score. The attack success rate.
double asr(const std::vector<double>& scores, const std::vector<int>& labels);

// Highest TPR among operating points with empirical FPR <= target. Step
// convention, no interpolation, so low-FPR numbers are never over-claimed.
double tpr_at_fpr(const std::vector<double>& scores, const std::vector<int>& labels,
                  double fpr_target);

// Operating points of "score > t implies member" as t sweeps from +inf
// down through every distinct score.
std::vector<RocPoint> roc_points(const std::vector<double>& scores,
                                 const std::vector<int>& labels);

RocSummary roc_summary(const std::vector<double>& scores, const std::vector<int>& labels,
                       const std::vector<double>& fpr_targets = {0.01});

// Extractive-QA answer normalization: lowercase, drop ASCII punctuation,
// remove the articles a/an/the, collapse whitespace. `remove_articles`
// false gives the variant used for judge-decision analysis.
std::string normalize_answer(const std::string& text, bool remove_articles = true);

// Multiset token F1 on already-normalized token lists. Either side empty
// makes F1 degenerate to exact match on the lists.
double token_f1_tokens(const std::vector<std::string>& pred,
                       const std::vector<std::string>& gold);

// EM / F1 on raw strings, normalized internally with article removal.
int exact_match(const std::string& prediction, const std::string& gold);
double token_f1(const std::string& prediction, const std::string& gold);

// 100 * (defended - baseline) / baseline, or empty when the baseline is 0.
std::optional<double> relative_change(double defended, double baseline);

// Table cell "0.601(-21)": value to three decimals, relative change
// rounded to the nearest integer percent. Zero renders "(0)", an
// undefined change renders an em dash.
std::string render_cell_change(double value, std::optional<double> change_pct);

// Same cell, with the change computed against a baseline value.
std::string render_cell(double value, std::optional<double> baseline);

}  // namespace mia::metrics
