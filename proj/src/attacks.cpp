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

#include "mia/attacks.hpp"

#include <zlib.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "mia/common.hpp"
#include "mia/kernels.hpp"
#include "mia/tokenize.hpp"

namespace mia::attacks {

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::kSpv: return "spv";
    case AttackKind::kLira: return "lira";
    case AttackKind::kRecall: return "recall";
    case AttackKind::kLogloss: return "logloss";
    case AttackKind::kZlib: return "zlib";
    case AttackKind::kMink: return "mink";
    case AttackKind::kMinkpp: return "minkpp";
  }
  return "?";
}

AttackKind attack_from_string(std::string_view name) {
  for (AttackKind k : all_attacks()) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown attack name '" + std::string(name) + "'");
}

const std::vector<AttackKind>& all_attacks() {
  static const std::vector<AttackKind> kAll = {
      AttackKind::kLogloss, AttackKind::kZlib,   AttackKind::kMink, AttackKind::kMinkpp,
      AttackKind::kRecall,  AttackKind::kLira,   AttackKind::kSpv};
  return kAll;
}

std::size_t deflate_length(const std::string& text) {
  z_stream strm{};
  // Raw DEFLATE stream (negative window bits), level pinned at 6.
  if (deflateInit2(&strm, 6, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error("deflate initialization failed");
  }
  const uLong bound = deflateBound(&strm, static_cast<uLong>(text.size()));
  std::vector<unsigned char> out(bound);
  strm.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(text.data()));
  strm.avail_in = static_cast<uInt>(text.size());
  strm.next_out = out.data();
  strm.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&strm, Z_FINISH);
  const std::size_t produced = strm.total_out;
  deflateEnd(&strm);
  if (rc != Z_STREAM_END) throw Error("deflate did not finish");
  if (produced == 0) throw Error("deflate produced an empty stream");
  return produced;
}

namespace {

void require_tokens(const TokenScoredText& scored) {
  if (scored.nll.empty()) throw InputError("attack input has no scored tokens");
}

std::size_t selection_size(double k_fraction, std::size_t n) {
  if (!(k_fraction > 0.0) || k_fraction > 1.0) {
    throw ConfigError("k fraction must lie in (0, 1]");
  }
  return static_cast<std::size_t>(
      std::ceil(k_fraction * static_cast<double>(n)));
}

}  // namespace

AttackScore score_logloss(const TokenScoredText& scored) {
  require_tokens(scored);
  return {AttackKind::kLogloss, -scored.mean_nll(), scored.moments_approximate, false};
}

AttackScore score_zlib(const TokenScoredText& scored) {
  require_tokens(scored);
  if (scored.text.empty()) throw InputError("zlib attack needs the raw text");
  const double compressed = static_cast<double>(deflate_length(scored.text));
  return {AttackKind::kZlib, -scored.sum_nll() / compressed, scored.moments_approximate,
          false};
}

AttackScore score_mink(const TokenScoredText& scored, double k_fraction) {
  require_tokens(scored);
  const std::size_t m = selection_size(k_fraction, scored.nll.size());
  if (m >= scored.nll.size()) {
    // Full selection must coincide with logloss bit for bit.
    AttackScore s = score_logloss(scored);
    s.attack = AttackKind::kMink;
    return s;
  }
  std::vector<double> sorted = scored.nll;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(m - 1),
                   sorted.end(), std::greater<double>());
  std::sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(m),
            std::greater<double>());
  const double sum = kernels::sum_f64(sorted.data(), m);
  return {AttackKind::kMink, -sum / static_cast<double>(m), scored.moments_approximate,
          false};
}

AttackScore score_minkpp(const TokenScoredText& scored, double k_fraction) {
  require_tokens(scored);
  if (!scored.has_moments()) {
    throw CapabilityError("token moments",
                          "endpoint did not supply distribution moments for min-k++");
  }
  const std::size_t n = scored.nll.size();
  const std::size_t m = selection_size(k_fraction, n);
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double sigma = (*scored.moments_sigma)[i];
    z[i] = sigma == 0.0 ? 0.0 : (-scored.nll[i] - (*scored.moments_mu)[i]) / sigma;
  }
  std::sort(z.begin(), z.end());
  const double sum = kernels::sum_f64(z.data(), m);
  return {AttackKind::kMinkpp, sum / static_cast<double>(m), scored.moments_approximate,
          false};
}

AttackScore score_recall(ModelClient& target, const std::string& text,
                         const std::string& nonmember_prefix,
                         const std::string& base_prefix) {
  if (nonmember_prefix.empty()) {
    throw ConfigError("recall attack requires a non-member prefix");
  }
  const std::string conditioned =
      base_prefix.empty() ? nonmember_prefix : nonmember_prefix + " " + base_prefix;
  const TokenScoredText unconditional = target.score_tokens(text, base_prefix);
  const TokenScoredText conditional = target.score_tokens(text, conditioned);
  const double u = unconditional.mean_nll();
  const double c = conditional.mean_nll();
  const bool approx = unconditional.moments_approximate || conditional.moments_approximate;
  if (u == 0.0) return {AttackKind::kRecall, 1.0, approx, true};
  return {AttackKind::kRecall, c / u, approx, false};
}

AttackScore score_lira(const TokenScoredText& target_scored,
                       const TokenScoredText& reference_scored) {
  require_tokens(target_scored);
  require_tokens(reference_scored);
  if (target_scored.text != reference_scored.text) {
    throw InputError("lira inputs must score the same text");
  }
  return {AttackKind::kLira, reference_scored.mean_nll() - target_scored.mean_nll(),
          target_scored.moments_approximate || reference_scored.moments_approximate, false};
}

std::string word_dropout_paraphrase(const std::string& text, double drop_prob,
                                    uint64_t seed) {
  const std::vector<std::string> tokens = tokenize(text);
  if (tokens.empty()) return "";
  std::mt19937_64 rng(seed);
  std::vector<std::string> kept;
  kept.push_back(tokens.front());
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    if (u >= drop_prob) kept.push_back(tokens[i]);
  }
  return join_tokens(kept);
}

AttackScore score_spv(ModelClient& target, const std::string& text,
                      const SpvConfig& config, const std::string& prefix) {
  if (config.paraphrase_count < 1) {
    throw ConfigError("spv needs at least one paraphrase");
  }
  const double own = target.score_tokens(text, prefix).mean_nll();
  double total = 0.0;
  int effective = 0;
  bool skipped = false;
  for (int i = 0; i < config.paraphrase_count; ++i) {
    const uint64_t seed = derive_seed(config.seed, "spv/" + std::to_string(i));
    std::string paraphrase;
    if (config.prompt_endpoint) {
      GenerationConfig gen;
      gen.max_tokens = config.prompt_max_tokens;
      gen.temperature = 1.0;
      gen.seed = seed;
      paraphrase = target.generate("Paraphrase the following text: " + text, gen).text;
    } else {
      paraphrase = word_dropout_paraphrase(text, config.drop_prob, seed);
    }
    if (paraphrase.empty()) {
      skipped = true;
      continue;
    }
    total += target.score_tokens(paraphrase, prefix).mean_nll();
    ++effective;
  }
  if (effective == 0) return {AttackKind::kSpv, 0.0, false, true};
  return {AttackKind::kSpv, total / static_cast<double>(effective) - own, false, skipped};
}

namespace {

struct SampleWork {
  const AttackSample* sample;
  std::map<AttackKind, AttackScore> scores;
};

bool enabled(const SuiteConfig& config, AttackKind kind) {
  return std::find(config.attacks.begin(), config.attacks.end(), kind) !=
         config.attacks.end();
}

void score_one(const AttackSample& sample, ModelClient& target, ModelClient* reference,
               const SuiteConfig& config, std::map<AttackKind, AttackScore>& out) {
  const TokenScoredText scored = target.score_tokens(sample.text, sample.prefix);
  if (enabled(config, AttackKind::kLogloss)) {
    out[AttackKind::kLogloss] = score_logloss(scored);
  }
  if (enabled(config, AttackKind::kZlib)) out[AttackKind::kZlib] = score_zlib(scored);
  if (enabled(config, AttackKind::kMink)) {
    out[AttackKind::kMink] = score_mink(scored, config.mink_k);
  }
  if (enabled(config, AttackKind::kMinkpp)) {
    out[AttackKind::kMinkpp] = score_minkpp(scored, config.mink_k);
  }
  if (enabled(config, AttackKind::kRecall)) {
    out[AttackKind::kRecall] =
        score_recall(target, sample.text, config.recall_prefix, sample.prefix);
  }
  if (enabled(config, AttackKind::kLira)) {
    out[AttackKind::kLira] =
        score_lira(scored, reference->score_tokens(sample.text, sample.prefix));
  }
  if (enabled(config, AttackKind::kSpv)) {
    SpvConfig spv = config.spv;
    spv.seed = derive_seed(config.master_seed, "spv-sample/" + sample.id);
    out[AttackKind::kSpv] = score_spv(target, sample.text, spv, sample.prefix);
  }
}

}  // namespace

std::map<AttackKind, std::vector<ScoredSample>> run_attack_suite(
    const std::vector<AttackSample>& dataset, ModelClient& target,
    ModelClient* reference, const SuiteConfig& config) {
  bool has_member = false;
  bool has_nonmember = false;
  std::set<std::string> ids;
  for (const auto& s : dataset) {
    if (!ids.insert(s.id).second) {
      throw InputError("duplicate sample id '" + s.id + "'");
    }
    if (s.label == 1) {
      has_member = true;
    } else if (s.label == 0) {
      has_nonmember = true;
    } else {
      throw InputError("sample '" + s.id + "' has label outside {0,1}");
    }
  }
  if (!has_member || !has_nonmember) {
    throw InputError("attack suite needs at least one member and one non-member");
  }
  if (enabled(config, AttackKind::kLira) && reference == nullptr) {
    throw ConfigError("lira attack requires a reference endpoint");
  }
  if (enabled(config, AttackKind::kRecall) && config.recall_prefix.empty()) {
    throw ConfigError("recall attack requires a non-member prefix");
  }

  std::vector<SampleWork> work(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) work[i].sample = &dataset[i];

  const int threads = std::max(1, std::min<int>(config.parallelism,
                                                static_cast<int>(dataset.size())));
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= work.size()) return;
      try {
        score_one(*work[i].sample, target, reference, config, work[i].scores);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::sort(work.begin(), work.end(), [](const SampleWork& a, const SampleWork& b) {
    return a.sample->id < b.sample->id;
  });

  std::map<AttackKind, std::vector<ScoredSample>> result;
  for (AttackKind kind : config.attacks) {
    auto& rows = result[kind];
    rows.reserve(work.size());
    for (const auto& w : work) {
      rows.push_back({w.sample->id, w.sample->label, w.scores.at(kind)});
    }
  }
  return result;
}

}  // namespace mia::attacks
