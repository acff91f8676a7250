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

#include "mia/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "mia/common.hpp"
#include "mia/tokenize.hpp"

namespace mia::metrics {

namespace {

struct ClassCounts {
  long long members = 0;
  long long nonmembers = 0;
};

ClassCounts check_two_class(const std::vector<double>& scores,
                            const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw InputError("scores and labels differ in length");
  }
  ClassCounts c;
  for (int l : labels) {
    if (l == 1) {
      ++c.members;
    } else if (l == 0) {
      ++c.nonmembers;
    } else {
      throw InputError("labels must be 0 or 1");
    }
  }
  if (c.members == 0 || c.nonmembers == 0) {
    throw InputError("need at least one member and one non-member");
  }
  return c;
}

// Samples ordered by descending score, grouped by tied score. Each entry
// is (#members, #nonmembers) in one tie group.
std::vector<ClassCounts> tie_groups_desc(const std::vector<double>& scores,
                                         const std::vector<int>& labels) {
  std::vector<size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  std::vector<ClassCounts> groups;
  size_t i = 0;
  while (i < idx.size()) {
    size_t j = i;
    ClassCounts g;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      if (labels[idx[j]] == 1) {
        ++g.members;
      } else {
        ++g.nonmembers;
      }
      ++j;
    }
    groups.push_back(g);
    i = j;
  }
  return groups;
}

bool is_ascii_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

}  // namespace

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  const ClassCounts totals = check_two_class(scores, labels);
  // Counting from the high-score end: a member in some group beats every
  // non-member in strictly lower groups and ties with those in its own.
  long long nonmembers_below = totals.nonmembers;
  long long correct2 = 0;  // twice the pair score, to keep it integral
  for (const ClassCounts& g : tie_groups_desc(scores, labels)) {
    nonmembers_below -= g.nonmembers;
    correct2 += 2 * g.members * nonmembers_below + g.members * g.nonmembers;
  }
  return static_cast<double>(correct2) /
         (2.0 * static_cast<double>(totals.members) *
          static_cast<double>(totals.nonmembers));
}

std::vector<RocPoint> roc_points(const std::vector<double>& scores,
                                 const std::vector<int>& labels) {
  const ClassCounts totals = check_two_class(scores, labels);
  std::vector<RocPoint> pts;
  pts.push_back({0.0, 0.0});
  long long tp = 0;
  long long fp = 0;
  for (const ClassCounts& g : tie_groups_desc(scores, labels)) {
    tp += g.members;
    fp += g.nonmembers;
    pts.push_back({static_cast<double>(fp) / static_cast<double>(totals.nonmembers),
                   static_cast<double>(tp) / static_cast<double>(totals.members)});
  }
  return pts;
}

double asr(const std::vector<double>& scores, const std::vector<int>& labels) {
  const ClassCounts totals = check_two_class(scores, labels);
  const double n = static_cast<double>(totals.members + totals.nonmembers);
  // Threshold -inf: everything called a member.
  long long best = totals.members;
  long long tp = totals.members;
  long long fp = totals.nonmembers;
  // Ascending distinct scores; after raising t past a tie group that
  // group is no longer predicted member.
  auto groups = tie_groups_desc(scores, labels);
  for (auto it = groups.rbegin(); it != groups.rend(); ++it) {
    tp -= it->members;
    fp -= it->nonmembers;
    best = std::max(best, tp + (totals.nonmembers - fp));
  }
  return static_cast<double>(best) / n;
}

double tpr_at_fpr(const std::vector<double>& scores, const std::vector<int>& labels,
                  double fpr_target) {
  if (fpr_target < 0.0 || fpr_target > 1.0) {
    throw InputError("fpr target must lie in [0,1]");
  }
  double best = 0.0;
  for (const RocPoint& p : roc_points(scores, labels)) {
    if (p.fpr <= fpr_target) best = std::max(best, p.tpr);
  }
  return best;
}

RocSummary roc_summary(const std::vector<double>& scores, const std::vector<int>& labels,
                       const std::vector<double>& fpr_targets) {
  RocSummary s;
  s.points = roc_points(scores, labels);
  s.auc = auc(scores, labels);
  s.asr = asr(scores, labels);
  for (double t : fpr_targets) s.tpr_at[t] = tpr_at_fpr(scores, labels, t);
  return s;
}

std::string normalize_answer(const std::string& text, bool remove_articles) {
  std::string lowered;
  lowered.reserve(text.size());
  for (char c : text) {
    if (is_ascii_punct(c)) continue;
    lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  std::vector<std::string> tokens = tokenize(lowered);
  if (remove_articles) {
    std::erase_if(tokens, [](const std::string& t) {
      return t == "a" || t == "an" || t == "the";
    });
  }
  return join_tokens(tokens);
}

double token_f1_tokens(const std::vector<std::string>& pred,
                       const std::vector<std::string>& gold) {
  if (pred.empty() || gold.empty()) {
    return pred == gold ? 1.0 : 0.0;
  }
  std::map<std::string, long long> gold_counts;
  for (const auto& t : gold) ++gold_counts[t];
  long long overlap = 0;
  for (const auto& t : pred) {
    auto it = gold_counts.find(t);
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / static_cast<double>(pred.size());
  const double recall = static_cast<double>(overlap) / static_cast<double>(gold.size());
  return 2.0 * precision * recall / (precision + recall);
}

int exact_match(const std::string& prediction, const std::string& gold) {
  return normalize_answer(prediction) == normalize_answer(gold) ? 1 : 0;
}

double token_f1(const std::string& prediction, const std::string& gold) {
  return token_f1_tokens(tokenize(normalize_answer(prediction)),
                         tokenize(normalize_answer(gold)));
}

std::optional<double> relative_change(double defended, double baseline) {
  if (baseline == 0.0) return std::nullopt;
  return 100.0 * (defended - baseline) / baseline;
}

std::string render_cell_change(double value, std::optional<double> change_pct) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", value);
  std::string out{buf};
  if (!change_pct.has_value()) return out;
  const long long pct = std::llround(*change_pct);
  if (pct == 0) {
    out += "(0)";
  } else {
    std::snprintf(buf, sizeof(buf), "(%+lld)", pct);
    out += buf;
  }
  return out;
}

std::string render_cell(double value, std::optional<double> baseline) {
  if (!baseline.has_value()) return render_cell_change(value, std::nullopt);
  auto change = relative_change(value, *baseline);
  if (!change.has_value()) return render_cell_change(value, std::nullopt) + "(—)";
  return render_cell_change(value, change);
}

}  // namespace mia::metrics
