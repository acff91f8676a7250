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

#include "mia/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <utility>

#include "json.hpp"
#include "mia/attacks.hpp"
#include "mia/common.hpp"
#include "mia/defense.hpp"
#include "mia/metrics.hpp"

namespace mia::harness {
namespace {

using nlohmann::json;

// Bounded-parallel index loop; the first worker exception wins and is
// rethrown after all workers drain.
template <typename Fn>
void parallel_for(std::size_t count, int parallelism, Fn&& fn) {
  const int threads = std::max(1, std::min<int>(parallelism, static_cast<int>(count)));
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
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
}

bool blank(const std::string& text) {
  return text.find_first_not_of(" \t\r\n") == std::string::npos;
}

double logsumexp(const std::vector<double>& xs) {
  double m = *std::max_element(xs.begin(), xs.end());
  double total = 0.0;
  for (double x : xs) total += std::exp(x - m);
  return m + std::log(total);
}

// Serves precomputed defended scores for specific (text, prefix) pairs
// and defers everything else to the wrapped endpoint. The override map is
// immutable, so concurrent scoring stays safe.
class OverrideScoringClient : public ModelClient {
 public:
  OverrideScoringClient(ModelClient& inner,
                        std::map<std::pair<std::string, std::string>, TokenScoredText> overrides)
      : inner_(inner), overrides_(std::move(overrides)) {}

  TokenScoredText score_tokens(const std::string& text, const std::string& prefix) override {
    auto it = overrides_.find({text, prefix});
    if (it != overrides_.end()) return it->second;
    return inner_.score_tokens(text, prefix);
  }

  GeneratedAnswer generate(const std::string& prompt, const GenerationConfig& config) override {
    return inner_.generate(prompt, config);
  }

  std::string model_name() const override { return inner_.model_name() + "+adaptive-noise"; }

 private:
  ModelClient& inner_;
  const std::map<std::pair<std::string, std::string>, TokenScoredText> overrides_;
};

struct ArmContext {
  const config::ExperimentConfig& config;
  const ClientSet& clients;
  const std::vector<dataset::DatasetRecord>& records;
  const std::vector<std::string>& queries;
  uint64_t arm_seed = 0;
};

attacks::SuiteConfig make_suite_config(const ArmContext& ctx) {
  attacks::SuiteConfig suite;
  suite.attacks = ctx.config.attacks.enabled;
  suite.mink_k = ctx.config.attacks.mink_k;
  suite.recall_prefix = ctx.config.attacks.recall_prefix;
  suite.spv.paraphrase_count = ctx.config.attacks.spv_paraphrases;
  suite.spv.drop_prob = ctx.config.attacks.spv_drop_prob;
  suite.master_seed = ctx.arm_seed;
  suite.parallelism = ctx.config.attacks.parallelism;
  return suite;
}

GenerationConfig make_gen_config(const ArmContext& ctx, const std::string& key) {
  GenerationConfig gen;
  gen.max_tokens = ctx.config.generation.max_tokens;
  gen.temperature = ctx.config.generation.temperature;
  gen.seed = derive_seed(ctx.arm_seed, key);
  return gen;
}

// Scores every sample under every enabled attack. Samples whose text is
// blank carry zero attack evidence by the empty-answer convention and
// never reach an endpoint.
std::map<attacks::AttackKind, std::vector<attacks::ScoredSample>> scored_rows(
    const ArmContext& ctx, const std::vector<attacks::AttackSample>& samples,
    ModelClient& target) {
  std::vector<attacks::AttackSample> live;
  std::vector<const attacks::AttackSample*> empty;
  for (const auto& s : samples) {
    if (blank(s.text)) {
      empty.push_back(&s);
    } else {
      live.push_back(s);
    }
  }
  auto suite = make_suite_config(ctx);
  auto result = attacks::run_attack_suite(live, target, ctx.clients.reference, suite);
  for (auto& [kind, rows] : result) {
    for (const auto* s : empty) {
      rows.push_back({s->id, s->label, {kind, 0.0, false, true}});
    }
    std::sort(rows.begin(), rows.end(),
              [](const attacks::ScoredSample& a, const attacks::ScoredSample& b) {
                return a.sample_id < b.sample_id;
              });
  }
  return result;
}

std::map<std::string, AttackCell> attack_cells(const ArmContext& ctx,
                                               const std::vector<attacks::AttackSample>& samples,
                                               ModelClient& target) {
  auto result = scored_rows(ctx, samples, target);
  std::map<std::string, AttackCell> cells;
  for (const auto& [kind, rows] : result) {
    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(rows.size());
    labels.reserve(rows.size());
    AttackCell cell;
    for (const auto& row : rows) {
      scores.push_back(row.score.value);
      labels.push_back(row.label);
      cell.approximate = cell.approximate || row.score.approximate;
    }
    cell.auc = metrics::auc(scores, labels);
    cell.asr = metrics::asr(scores, labels);
    for (double target_fpr : ctx.config.metrics.fpr_targets) {
      cell.tpr_at[target_fpr] = metrics::tpr_at_fpr(scores, labels, target_fpr);
    }
    cells[std::string(attacks::to_string(kind))] = cell;
  }
  return cells;
}

UtilitySummary utility_of(const ArmContext& ctx, const std::vector<std::string>& answers) {
  UtilitySummary out;
  out.count = static_cast<int>(answers.size());
  for (std::size_t i = 0; i < answers.size(); ++i) {
    out.exact_match += metrics::exact_match(answers[i], ctx.records[i].answer);
    out.f1 += metrics::token_f1(answers[i], ctx.records[i].answer);
  }
  if (out.count > 0) {
    out.exact_match /= out.count;
    out.f1 /= out.count;
  }
  return out;
}

std::vector<attacks::AttackSample> dataset_samples(const ArmContext& ctx) {
  std::vector<attacks::AttackSample> samples;
  samples.reserve(ctx.records.size());
  for (std::size_t i = 0; i < ctx.records.size(); ++i) {
    samples.push_back({ctx.records[i].id, ctx.records[i].answer, ctx.records[i].label(),
                       ctx.queries[i]});
  }
  return samples;
}

// The arm's own generations against the gold answers.
std::vector<std::string> generate_answers(const ArmContext& ctx, ModelClient& client) {
  std::vector<std::string> answers(ctx.records.size());
  parallel_for(ctx.records.size(), ctx.config.attacks.parallelism, [&](std::size_t i) {
    answers[i] =
        client.generate(ctx.queries[i], make_gen_config(ctx, "gen/" + ctx.records[i].id)).text;
  });
  return answers;
}

ArmReport run_none_arm(const ArmContext& ctx) {
  ArmReport report;
  report.arm = "none";
  report.attacks = attack_cells(ctx, dataset_samples(ctx), *ctx.clients.target);
  report.utility = utility_of(ctx, generate_answers(ctx, *ctx.clients.target));
  return report;
}

ArmReport run_distribution_arm(const ArmContext& ctx, config::DefenseArm arm) {
  if (ctx.clients.target_toy == nullptr) {
    throw ConfigError("defense arm '" + config::to_string(arm) +
                      "' needs an in-process toy target");
  }
  defense::OutputDefenseConfig defense_config;
  if (arm == config::DefenseArm::kFlatten) {
    defense_config.flatten_lambda = ctx.config.defenses.flatten_lambda;
  } else {
    defense_config.dp_sigma = ctx.config.defenses.dp_sigma;
    defense_config.dp_seed = ctx.config.defenses.dp_seed;
  }
  defense::DefendedToyClient defended(*ctx.clients.target_toy,
                                      ctx.clients.target->model_name() + "+" +
                                          config::to_string(arm),
                                      defense_config);
  ArmReport report;
  report.arm = config::to_string(arm);
  report.attacks = attack_cells(ctx, dataset_samples(ctx), defended);
  report.utility = utility_of(ctx, generate_answers(ctx, defended));
  return report;
}

std::vector<defense::EpdResult> run_epd_stage(const ArmContext& ctx) {
  if (ctx.clients.base == nullptr) {
    throw ConfigError("EPD needs a base model endpoint");
  }
  std::vector<defense::EpdResult> results(ctx.records.size());
  parallel_for(ctx.records.size(), ctx.config.attacks.parallelism, [&](std::size_t i) {
    results[i] = defense::epd_answer(ctx.queries[i], *ctx.clients.target, *ctx.clients.base,
                                     ctx.clients.judge,
                                     make_gen_config(ctx, "epd/" + ctx.records[i].id));
  });
  return results;
}

std::vector<attacks::AttackSample> final_answer_samples(
    const ArmContext& ctx, const std::vector<defense::EpdResult>& epd) {
  std::vector<attacks::AttackSample> samples;
  samples.reserve(ctx.records.size());
  for (std::size_t i = 0; i < ctx.records.size(); ++i) {
    samples.push_back({ctx.records[i].id, epd[i].verdict.final_answer,
                       ctx.records[i].label(), ctx.queries[i]});
  }
  return samples;
}

std::vector<std::string> final_answers(const std::vector<defense::EpdResult>& epd) {
  std::vector<std::string> answers;
  answers.reserve(epd.size());
  for (const auto& r : epd) answers.push_back(r.verdict.final_answer);
  return answers;
}

ArmReport run_epd_arm(const ArmContext& ctx) {
  std::vector<defense::EpdResult> epd = run_epd_stage(ctx);
  ArmReport report;
  report.arm = "epd";
  report.attacks = attack_cells(ctx, final_answer_samples(ctx, epd), *ctx.clients.target);
  report.utility = utility_of(ctx, final_answers(epd));
  return report;
}

// Replaces the scores at noised positions: NLL from the noised logits and
// the matching full-distribution moments. OOV positions carry the floor
// NLL and keep their exact moments.
TokenScoredText defended_final_scores(const ToyModel& toy, const std::string& final_answer,
                                      const std::string& query,
                                      const defense::AdaptiveNoiseResult& noise) {
  TokenScoredText scored = toy.score(final_answer, query);
  for (const defense::ProtectedTokenNoise& t : noise.tokens) {
    scored.nll[t.position] = t.noised_nll;
    if (t.noised_logits.empty() || !scored.has_moments()) continue;
    const double lse = logsumexp(t.noised_logits);
    double mu = 0.0;
    double ex2 = 0.0;
    for (double logit : t.noised_logits) {
      const double lp = logit - lse;
      const double p = std::exp(lp);
      mu += p * lp;
      ex2 += p * lp * lp;
    }
    (*scored.moments_mu)[t.position] = mu;
    (*scored.moments_sigma)[t.position] = std::sqrt(std::max(0.0, ex2 - mu * mu));
  }
  return scored;
}

ArmReport run_adaptive_arm(const ArmContext& ctx) {
  if (ctx.clients.target_toy == nullptr) {
    throw ConfigError("defense arm 'adaptive' needs an in-process toy target");
  }
  if (ctx.clients.embedder == nullptr) {
    throw ConfigError("defense arm 'adaptive' needs an embedding provider");
  }
  const defense::NoiseParams& params = ctx.config.defenses.adaptive.noise;
  std::vector<defense::EpdResult> epd = run_epd_stage(ctx);

  std::vector<defense::AdaptiveNoiseResult> noise(ctx.records.size());
  std::vector<defense::PrivacyLedger> ledgers(
      ctx.records.size(), defense::PrivacyLedger(params.rdp_order, params.rdp_form));
  std::vector<TokenScoredText> defended(ctx.records.size());
  parallel_for(ctx.records.size(), ctx.config.attacks.parallelism, [&](std::size_t i) {
    noise[i] = defense::apply_adaptive_noise(
        *ctx.clients.target_toy, epd[i].bundle, epd[i].verdict, params,
        *ctx.clients.embedder, ledgers[i],
        derive_seed(ctx.arm_seed, "noise/" + ctx.records[i].id));
    if (!blank(epd[i].verdict.final_answer)) {
      defended[i] = defended_final_scores(*ctx.clients.target_toy,
                                          epd[i].verdict.final_answer, ctx.queries[i],
                                          noise[i]);
    }
  });

  // Per-sample ledgers merge in id order so parallel scheduling never
  // reorders the recorded steps.
  std::vector<std::size_t> order(ctx.records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ctx.records[a].id < ctx.records[b].id;
  });
  defense::PrivacyLedger ledger(params.rdp_order, params.rdp_form);
  int activated = 0;
  for (std::size_t i : order) {
    if (noise[i].activated) ++activated;
    for (double sigma : ledgers[i].step_sigmas()) ledger.add_step(sigma);
  }

  std::map<std::pair<std::string, std::string>, TokenScoredText> overrides;
  for (std::size_t i = 0; i < ctx.records.size(); ++i) {
    if (blank(epd[i].verdict.final_answer)) continue;
    overrides.emplace(std::pair{epd[i].verdict.final_answer, ctx.queries[i]}, defended[i]);
  }
  OverrideScoringClient override_client(*ctx.clients.target, std::move(overrides));

  ArmReport report;
  report.arm = "adaptive";
  report.attacks = attack_cells(ctx, final_answer_samples(ctx, epd), override_client);
  report.utility = utility_of(ctx, final_answers(epd));
  LedgerSummary summary;
  summary.order = params.rdp_order;
  summary.steps = ledger.steps();
  summary.activated_samples = activated;
  summary.total_quadratic = ledger.total(defense::RdpForm::kQuadratic);
  summary.total_standard = ledger.total(defense::RdpForm::kStandard);
  summary.delta = ctx.config.defenses.adaptive.delta;
  summary.epsilon = ledger.to_epsilon(summary.delta);
  report.ledger = summary;
  return report;
}

ArmReport run_arm(const ArmContext& ctx, const std::string& name) {
  if (name == "none") return run_none_arm(ctx);
  const config::DefenseArm arm = config::arm_from_string(name);
  switch (arm) {
    case config::DefenseArm::kEpd:
      return run_epd_arm(ctx);
    case config::DefenseArm::kFlatten:
    case config::DefenseArm::kDpLogits:
      return run_distribution_arm(ctx, arm);
    case config::DefenseArm::kAdaptive:
      return run_adaptive_arm(ctx);
  }
  throw ConfigError("unknown defense arm '" + name + "'");
}

std::vector<std::string> build_queries(const config::ExperimentConfig& config,
                                       const ClientSet& clients,
                                       const std::vector<dataset::DatasetRecord>& records) {
  std::vector<std::string> queries;
  queries.reserve(records.size());
  if (config.mode == config::Mode::kSftStyle) {
    for (const auto& r : records) queries.push_back(r.question);
    return queries;
  }
  if (clients.index == nullptr || clients.embedder == nullptr) {
    throw ConfigError("rag-style mode needs a retrieval index and an embedding provider");
  }
  const std::size_t k =
      config.retrieval ? static_cast<std::size_t>(config.retrieval->top_k) : 2;
  for (const auto& r : records) {
    std::vector<retrieval::Hit> hits =
        clients.index->retrieve_topk(clients.embedder->embed(r.question), k);
    std::vector<std::string> contexts;
    contexts.reserve(hits.size());
    for (const auto& hit : hits) {
      contexts.push_back(clients.index->passages()[hit.index].text);
    }
    queries.push_back(retrieval::assemble_rag_prompt(r.question, contexts));
  }
  return queries;
}

struct LoadedInputs {
  std::vector<dataset::DatasetRecord> records;
  std::vector<std::string> queries;
};

LoadedInputs load_inputs(const config::ExperimentConfig& config, const ClientSet& clients) {
  config::validate(config);
  if (clients.target == nullptr) throw ConfigError("a target endpoint is required");
  LoadedInputs inputs;
  inputs.records = dataset::load_dataset(config.dataset_path);
  inputs.queries = build_queries(config, clients, inputs.records);
  return inputs;
}

std::string fingerprint_hex(const config::ExperimentConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(config::fingerprint(config)));
  return buf;
}

// Shortest round-trip decimal form; the same convention nlohmann uses, so
// table keys and CSV values match the structured file byte for byte.
std::string number_repr(double value) { return json(value).dump(); }

json cell_to_json(const AttackCell& cell) {
  json j;
  j["approximate"] = cell.approximate;
  j["auc"] = cell.auc;
  j["auc_change_pct"] = cell.auc_change ? json(*cell.auc_change) : json();
  j["asr"] = cell.asr;
  j["asr_change_pct"] = cell.asr_change ? json(*cell.asr_change) : json();
  json tpr = json::object();
  for (const auto& [fpr, value] : cell.tpr_at) tpr[number_repr(fpr)] = value;
  j["tpr_at_fpr"] = std::move(tpr);
  json tpr_change = json::object();
  for (const auto& [fpr, value] : cell.tpr_change) tpr_change[number_repr(fpr)] = value;
  j["tpr_change_pct"] = std::move(tpr_change);
  return j;
}

}  // namespace

ExperimentReport run_experiment(const config::ExperimentConfig& config,
                                const ClientSet& clients) {
  const LoadedInputs inputs = load_inputs(config, clients);
  const std::vector<dataset::DatasetRecord>& records = inputs.records;
  const std::vector<std::string>& queries = inputs.queries;

  ExperimentReport report;
  report.config_fingerprint = fingerprint_hex(config);
  report.mode = config::to_string(config.mode);
  report.dataset_path = config.dataset_path;
  report.seed = config.seed;
  for (const auto& r : records) {
    if (r.membership == dataset::Membership::kMember) {
      ++report.member_count;
    } else {
      ++report.nonmember_count;
    }
  }

  std::vector<std::string> arm_names = {"none"};
  for (config::DefenseArm arm : config.defenses.arms) {
    arm_names.push_back(config::to_string(arm));
  }

  for (const std::string& name : arm_names) {
    ArmContext ctx{config, clients, records, queries, derive_seed(config.seed, "arm/" + name)};
    try {
      report.arms.push_back(run_arm(ctx, name));
    } catch (const Error& e) {
      ArmReport failed;
      failed.arm = name;
      failed.failed = true;
      failed.failure = e.what();
      report.arms.push_back(std::move(failed));
    }
  }

  // Relative changes against the no-defense arm.
  const ArmReport& baseline = report.arms.front();
  if (!baseline.failed) {
    for (std::size_t i = 1; i < report.arms.size(); ++i) {
      ArmReport& arm = report.arms[i];
      if (arm.failed) continue;
      for (auto& [name, cell] : arm.attacks) {
        auto it = baseline.attacks.find(name);
        if (it == baseline.attacks.end()) continue;
        cell.auc_change = metrics::relative_change(cell.auc, it->second.auc);
        cell.asr_change = metrics::relative_change(cell.asr, it->second.asr);
        for (const auto& [fpr, value] : cell.tpr_at) {
          auto base_tpr = it->second.tpr_at.find(fpr);
          if (base_tpr == it->second.tpr_at.end()) continue;
          auto change = metrics::relative_change(value, base_tpr->second);
          if (change) cell.tpr_change[fpr] = *change;
        }
      }
    }
  }
  return report;
}

std::vector<ScoreRow> score_dataset(const config::ExperimentConfig& config,
                                    const ClientSet& clients) {
  const LoadedInputs inputs = load_inputs(config, clients);
  ArmContext ctx{config, clients, inputs.records, inputs.queries,
                 derive_seed(config.seed, "arm/none")};
  auto result = scored_rows(ctx, dataset_samples(ctx), *clients.target);
  std::vector<ScoreRow> rows;
  for (const auto& [kind, scored] : result) {
    const std::string name(attacks::to_string(kind));
    for (const auto& s : scored) {
      rows.push_back({s.sample_id, s.label, name, s.score.value, s.score.approximate,
                      s.score.degenerate});
    }
  }
  return rows;
}

std::vector<ArmAnswer> defended_answers(const config::ExperimentConfig& config,
                                        const ClientSet& clients, const std::string& arm) {
  const LoadedInputs inputs = load_inputs(config, clients);
  ArmContext ctx{config, clients, inputs.records, inputs.queries,
                 derive_seed(config.seed, "arm/" + arm)};

  std::vector<std::string> answers;
  if (arm == "none") {
    answers = generate_answers(ctx, *clients.target);
  } else {
    switch (config::arm_from_string(arm)) {
      case config::DefenseArm::kEpd:
      case config::DefenseArm::kAdaptive:
        answers = final_answers(run_epd_stage(ctx));
        break;
      case config::DefenseArm::kFlatten:
      case config::DefenseArm::kDpLogits: {
        if (clients.target_toy == nullptr) {
          throw ConfigError("defense arm '" + arm + "' needs an in-process toy target");
        }
        defense::OutputDefenseConfig defense_config;
        if (config::arm_from_string(arm) == config::DefenseArm::kFlatten) {
          defense_config.flatten_lambda = config.defenses.flatten_lambda;
        } else {
          defense_config.dp_sigma = config.defenses.dp_sigma;
          defense_config.dp_seed = config.defenses.dp_seed;
        }
        defense::DefendedToyClient defended(*clients.target_toy,
                                            clients.target->model_name() + "+" + arm,
                                            defense_config);
        answers = generate_answers(ctx, defended);
        break;
      }
    }
  }

  std::vector<ArmAnswer> out;
  out.reserve(inputs.records.size());
  for (std::size_t i = 0; i < inputs.records.size(); ++i) {
    out.push_back({inputs.records[i].id, inputs.records[i].question, answers[i]});
  }
  return out;
}

std::string structured_json(const ExperimentReport& report) {
  json j;
  j["config_fingerprint"] = report.config_fingerprint;
  j["mode"] = report.mode;
  j["dataset"] = report.dataset_path;
  j["seed"] = report.seed;
  j["members"] = report.member_count;
  j["nonmembers"] = report.nonmember_count;
  json arms = json::array();
  for (const ArmReport& arm : report.arms) {
    json a;
    a["arm"] = arm.arm;
    a["failed"] = arm.failed;
    if (arm.failed) a["failure"] = arm.failure;
    json cells = json::object();
    for (const auto& [name, cell] : arm.attacks) cells[name] = cell_to_json(cell);
    a["attacks"] = std::move(cells);
    if (arm.utility) {
      a["utility"] = {{"exact_match", arm.utility->exact_match},
                      {"f1", arm.utility->f1},
                      {"count", arm.utility->count}};
    } else {
      a["utility"] = nullptr;
    }
    if (arm.ledger) {
      a["ledger"] = {{"rdp_order", arm.ledger->order},
                     {"steps", arm.ledger->steps},
                     {"activated_samples", arm.ledger->activated_samples},
                     {"total_quadratic", arm.ledger->total_quadratic},
                     {"total_standard", arm.ledger->total_standard},
                     {"delta", arm.ledger->delta},
                     {"epsilon", arm.ledger->epsilon}};
    } else {
      a["ledger"] = nullptr;
    }
    arms.push_back(std::move(a));
  }
  j["arms"] = std::move(arms);
  return j.dump(2) + "\n";
}

std::string render_table(const ExperimentReport& report) {
  std::ostringstream out;
  char buf[64];
  out << "config " << report.config_fingerprint << "  seed " << report.seed << "  mode "
      << report.mode << "\n";
  out << "dataset " << report.dataset_path << "  (" << report.member_count << " members / "
      << report.nonmember_count << " non-members)\n\n";

  auto pad = [](std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
  };

  std::vector<double> fpr_targets;
  std::vector<std::string> attack_names;
  for (const ArmReport& arm : report.arms) {
    if (arm.failed) continue;
    for (const auto& [name, cell] : arm.attacks) {
      if (std::find(attack_names.begin(), attack_names.end(), name) == attack_names.end()) {
        attack_names.push_back(name);
      }
      if (fpr_targets.empty()) {
        for (const auto& [fpr, value] : cell.tpr_at) fpr_targets.push_back(fpr);
      }
    }
    break;
  }

  out << pad("attack", 10) << pad("arm", 12) << pad("auc", 16) << pad("asr", 16);
  for (double fpr : fpr_targets) out << pad("tpr@" + number_repr(fpr), 16);
  out << "\n";
  for (const std::string& name : attack_names) {
    for (const ArmReport& arm : report.arms) {
      out << pad(name, 10) << pad(arm.arm, 12);
      if (arm.failed) {
        out << "FAILED: " << arm.failure << "\n";
        continue;
      }
      auto it = arm.attacks.find(name);
      if (it == arm.attacks.end()) {
        out << "-\n";
        continue;
      }
      const AttackCell& cell = it->second;
      out << pad(metrics::render_cell_change(cell.auc, cell.auc_change), 16);
      out << pad(metrics::render_cell_change(cell.asr, cell.asr_change), 16);
      for (double fpr : fpr_targets) {
        std::optional<double> change;
        auto chg = cell.tpr_change.find(fpr);
        if (chg != cell.tpr_change.end()) change = chg->second;
        auto tpr = cell.tpr_at.find(fpr);
        out << pad(tpr == cell.tpr_at.end()
                       ? std::string("-")
                       : metrics::render_cell_change(tpr->second, change),
                   16);
      }
      if (cell.approximate) out << " ~approx";
      out << "\n";
    }
  }

  bool any_utility = false;
  for (const ArmReport& arm : report.arms) any_utility = any_utility || arm.utility.has_value();
  if (any_utility) {
    out << "\n" << pad("utility", 10) << pad("arm", 12) << pad("em", 16) << pad("f1", 16)
        << "n\n";
    for (const ArmReport& arm : report.arms) {
      if (!arm.utility) continue;
      std::snprintf(buf, sizeof(buf), "%.3f", arm.utility->exact_match);
      out << pad("", 10) << pad(arm.arm, 12) << pad(buf, 16);
      std::snprintf(buf, sizeof(buf), "%.3f", arm.utility->f1);
      out << pad(buf, 16) << arm.utility->count << "\n";
    }
  }

  bool any_ledger = false;
  for (const ArmReport& arm : report.arms) any_ledger = any_ledger || arm.ledger.has_value();
  if (any_ledger) {
    out << "\n" << pad("privacy", 10) << pad("arm", 12) << pad("steps", 10)
        << pad("activated", 12) << pad("rdp(quadratic)", 16) << pad("rdp(standard)", 16)
        << "epsilon\n";
    for (const ArmReport& arm : report.arms) {
      if (!arm.ledger) continue;
      const LedgerSummary& ledger = *arm.ledger;
      out << pad("", 10) << pad(arm.arm, 12) << pad(std::to_string(ledger.steps), 10)
          << pad(std::to_string(ledger.activated_samples), 12);
      std::snprintf(buf, sizeof(buf), "%.3f", ledger.total_quadratic);
      out << pad(buf, 16);
      std::snprintf(buf, sizeof(buf), "%.3f", ledger.total_standard);
      out << pad(buf, 16);
      std::snprintf(buf, sizeof(buf), "%.3f (delta %s)", ledger.epsilon,
                    number_repr(ledger.delta).c_str());
      out << buf << "\n";
    }
  }
  return out.str();
}

std::string plot_data_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "attack,defense,metric,value\n";
  for (const ArmReport& arm : report.arms) {
    if (arm.failed) continue;
    for (const auto& [name, cell] : arm.attacks) {
      out << name << "," << arm.arm << ",auc," << number_repr(cell.auc) << "\n";
      out << name << "," << arm.arm << ",asr," << number_repr(cell.asr) << "\n";
      for (const auto& [fpr, value] : cell.tpr_at) {
        out << name << "," << arm.arm << ",tpr@" << number_repr(fpr) << ","
            << number_repr(value) << "\n";
      }
    }
  }
  return out.str();
}

ExperimentReport report_from_json(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw InputError("report body is not valid JSON");
  try {
    ExperimentReport report;
    report.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    report.mode = j.at("mode").get<std::string>();
    report.dataset_path = j.at("dataset").get<std::string>();
    report.seed = j.at("seed").get<uint64_t>();
    report.member_count = j.at("members").get<int>();
    report.nonmember_count = j.at("nonmembers").get<int>();
    for (const json& a : j.at("arms")) {
      ArmReport arm;
      arm.arm = a.at("arm").get<std::string>();
      arm.failed = a.at("failed").get<bool>();
      if (arm.failed) arm.failure = a.at("failure").get<std::string>();
      for (const auto& [name, c] : a.at("attacks").items()) {
        AttackCell cell;
        cell.approximate = c.at("approximate").get<bool>();
        cell.auc = c.at("auc").get<double>();
        cell.asr = c.at("asr").get<double>();
        if (!c.at("auc_change_pct").is_null()) cell.auc_change = c["auc_change_pct"].get<double>();
        if (!c.at("asr_change_pct").is_null()) cell.asr_change = c["asr_change_pct"].get<double>();
        for (const auto& [key, value] : c.at("tpr_at_fpr").items()) {
          cell.tpr_at[std::strtod(key.c_str(), nullptr)] = value.get<double>();
        }
        for (const auto& [key, value] : c.at("tpr_change_pct").items()) {
          cell.tpr_change[std::strtod(key.c_str(), nullptr)] = value.get<double>();
        }
        arm.attacks[name] = std::move(cell);
      }
      if (!a.at("utility").is_null()) {
        const json& u = a["utility"];
        arm.utility = UtilitySummary{u.at("exact_match").get<double>(),
                                     u.at("f1").get<double>(), u.at("count").get<int>()};
      }
      if (!a.at("ledger").is_null()) {
        const json& l = a["ledger"];
        LedgerSummary ledger;
        ledger.order = l.at("rdp_order").get<double>();
        ledger.steps = l.at("steps").get<long long>();
        ledger.activated_samples = l.at("activated_samples").get<int>();
        ledger.total_quadratic = l.at("total_quadratic").get<double>();
        ledger.total_standard = l.at("total_standard").get<double>();
        ledger.delta = l.at("delta").get<double>();
        ledger.epsilon = l.at("epsilon").get<double>();
        arm.ledger = ledger;
      }
      report.arms.push_back(std::move(arm));
    }
    return report;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed report body: ") + e.what());
  }
}

ReportPaths emit_report(const ExperimentReport& report, const std::string& output_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(output_dir, ec);
  if (ec) throw InputError("cannot create output directory '" + output_dir + "': " + ec.message());

  // Render everything and prove the directory writable before creating
  // any report file, so a failure never leaves a partial report.
  const std::string structured = structured_json(report);
  const std::string table = render_table(report);
  const std::string plot = plot_data_csv(report);
  const fs::path dir(output_dir);
  {
    const fs::path probe = dir / ".write_probe";
    std::ofstream test(probe, std::ios::binary);
    if (!test) {
      throw InputError("output directory '" + output_dir + "' is not writable");
    }
    test.close();
    fs::remove(probe, ec);
  }

  ReportPaths paths{(dir / "report.json").string(), (dir / "report.txt").string(),
                    (dir / "plot_data.csv").string()};
  auto write = [](const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << body;
    if (!out) throw InputError("failed writing report file '" + path + "'");
  };
  write(paths.structured, structured);
  write(paths.table, table);
  write(paths.plot_data, plot);
  return paths;
}

}  // namespace mia::harness
