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
#include <optional>
#include <string>
#include <vector>

#include "mia/config.hpp"
#include "mia/dataset.hpp"
#include "mia/model.hpp"
#include "mia/retrieval.hpp"
#include "mia/toy_model.hpp"

namespace mia::harness {

// One (attack x defense-arm) result. Change fields are percent relative
// to the no-defense arm and absent on the no-defense arm itself or when
// the baseline is zero.
struct AttackCell {
  double auc = 0.0;
  double asr = 0.0;
  std::map<double, double> tpr_at;
  // Any sample's score used approximated moments.
  bool approximate = false;
  std::optional<double> auc_change;
  std::optional<double> asr_change;
  std::map<double, double> tpr_change;
};

// Mean EM / token F1 of the arm's answers against the dataset answers.
struct UtilitySummary {
  double exact_match = 0.0;
  double f1 = 0.0;
  int count = 0;
};

struct LedgerSummary {
  double order = 0.0;
  long long steps = 0;
  int activated_samples = 0;
  double total_quadratic = 0.0;
  double total_standard = 0.0;
  double delta = 0.0;
  // epsilon at `delta` in the configured reporting form.
  double epsilon = 0.0;
};

struct ArmReport {
  std::string arm;
  bool failed = false;
  std::string failure;
  // Attack name -> cell; every enabled attack appears exactly once.
  std::map<std::string, AttackCell> attacks;
  std::optional<UtilitySummary> utility;
  std::optional<LedgerSummary> ledger;
};

struct ExperimentReport {
  std::string config_fingerprint;
  std::string mode;
  std::string dataset_path;
  uint64_t seed = 0;
  int member_count = 0;
  int nonmember_count = 0;
  // The no-defense arm first, then configured arms in order.
  std::vector<ArmReport> arms;
};

// Live endpoints for the configured roles. `target` is required; the
// others are required exactly when the config enables something that
// needs them (epd/adaptive -> base, lira -> reference). A null judge
// means the offline mock policy. `target_toy` grants the distribution
// access that flatten / dp_logits / adaptive arms need, and must be the
// same model `target` serves. `index` backs rag-style prompt assembly.
struct ClientSet {
  ModelClient* target = nullptr;
  ModelClient* base = nullptr;
  ModelClient* judge = nullptr;
  ModelClient* reference = nullptr;
  const ToyModel* target_toy = nullptr;
  const retrieval::Embedder* embedder = nullptr;
  const retrieval::RetrievalIndex* index = nullptr;
};

// Loads the dataset, runs every arm (no-defense first), computes metrics
// and relative changes. Deterministic given (config, seed, deterministic
// endpoints): per-sample seeds derive from the master seed and stable
// string keys, reductions sort by sample id, and one arm's failure marks
// only that arm.
ExperimentReport run_experiment(const config::ExperimentConfig& config,
                                const ClientSet& clients);

// One sample's score under one attack, against the undefended target.
struct ScoreRow {
  std::string id;
  int label = 0;
  std::string attack;
  double score = 0.0;
  bool approximate = false;
  bool degenerate = false;
};

// Runs the enabled attacks over the dataset with no defense and returns
// every per-sample score, grouped per attack in a stable order and
// sorted by id within each group. Reducing these rows with the metrics
// module reproduces the no-defense cells exactly.
std::vector<ScoreRow> score_dataset(const config::ExperimentConfig& config,
                                    const ClientSet& clients);

struct ArmAnswer {
  std::string id;
  std::string question;
  std::string answer;
};

// The answers one arm's defense chain produces for every record, in
// dataset order. "none" is the raw target; "epd" and "adaptive" return
// the privacy-judged final answers; "flatten" / "dp_logits" generate
// through the defended distribution.
std::vector<ArmAnswer> defended_answers(const config::ExperimentConfig& config,
                                        const ClientSet& clients, const std::string& arm);

// Machine-readable body: full-precision doubles, sorted keys, no
// timestamps. Equal reports produce equal bytes.
std::string structured_json(const ExperimentReport& report);

// Fixed-width table: values to three decimals, relative changes as signed
// integer percents in parentheses.
std::string render_table(const ExperimentReport& report);

// Long-form rows "attack,defense,metric,value", one per attack x arm x
// metric, full precision.
std::string plot_data_csv(const ExperimentReport& report);

// Inverse of structured_json; rendering a reparsed report reproduces the
// original bytes. Malformed bodies raise InputError.
ExperimentReport report_from_json(const std::string& body);

struct ReportPaths {
  std::string structured;
  std::string table;
  std::string plot_data;
};

// Writes report.json, report.txt and plot_data.csv under `output_dir`,
// creating it if needed. The directory is probed for writability before
// any file is created, so failure never leaves a partial report behind.
ReportPaths emit_report(const ExperimentReport& report, const std::string& output_dir);

}  // namespace mia::harness
