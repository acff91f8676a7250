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

// Reference implementations used only by tests. Deliberately naive and
// written independently of the library so they can disagree with it.

#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

namespace oracle {

// Exhaustive member/non-member pair counting, ties worth one half.
inline double auc_pairs(const std::vector<double>& scores, const std::vector<int>& labels) {
  double num = 0.0;
  long long pairs = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        num += 1.0;
      } else if (scores[i] == scores[j]) {
        num += 0.5;
      }
    }
  }
  return num / static_cast<double>(pairs);
}

// Trapezoidal area under explicitly enumerated ROC points.
inline double trapezoid(const std::vector<std::pair<double, double>>& pts) {
  double area = 0.0;
  for (size_t i = 1; i < pts.size(); ++i) {
    area += (pts[i].first - pts[i - 1].first) * (pts[i].second + pts[i - 1].second) / 2.0;
  }
  return area;
}

// Accuracy of "score > t => member" maximized by trying -inf and every
// observed score as t.
inline double best_threshold_accuracy(const std::vector<double>& scores,
                                      const std::vector<int>& labels) {
  std::set<double> thresholds(scores.begin(), scores.end());
  std::vector<double> sweep(thresholds.begin(), thresholds.end());
  sweep.push_back(-std::numeric_limits<double>::infinity());
  double best = 0.0;
  for (double t : sweep) {
    long long correct = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
      const int pred = scores[i] > t ? 1 : 0;
      if (pred == labels[i]) ++correct;
    }
    best = std::max(best, static_cast<double>(correct) / static_cast<double>(scores.size()));
  }
  return best;
}

// Max TPR over all thresholds whose FPR stays at or below the target.
inline double tpr_at_fpr(const std::vector<double>& scores, const std::vector<int>& labels,
                         double target) {
  std::set<double> thresholds(scores.begin(), scores.end());
  std::vector<double> sweep(thresholds.begin(), thresholds.end());
  sweep.push_back(std::numeric_limits<double>::infinity());
  sweep.push_back(-std::numeric_limits<double>::infinity());
  long long members = std::count(labels.begin(), labels.end(), 1);
  long long nonmembers = static_cast<long long>(labels.size()) - members;
  double best = 0.0;
  for (double t : sweep) {
    long long tp = 0;
    long long fp = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] > t) {
        if (labels[i] == 1) {
          ++tp;
        } else {
          ++fp;
        }
      }
    }
    const double fpr = static_cast<double>(fp) / static_cast<double>(nonmembers);
    const double tpr = static_cast<double>(tp) / static_cast<double>(members);
    if (fpr <= target) best = std::max(best, tpr);
  }
  return best;
}

}  // namespace oracle
