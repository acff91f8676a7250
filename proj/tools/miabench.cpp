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

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mia/common.hpp"
#include "mia/config.hpp"
#include "mia/harness.hpp"
#include "mia/http_client.hpp"
#include "mia/metrics.hpp"
#include "mia/retrieval.hpp"
#include "mia/server.hpp"
#include "mia/toy_model.hpp"

namespace {

using namespace mia;
namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) lines.push_back(line);
  }
  if (lines.empty()) throw InputError("file has no non-blank lines: " + path);
  return lines;
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << body;
  if (!out) throw InputError("failed writing file: " + path);
}

ToyModel fit_toy(const config::ToyModelSpec& spec) {
  return ToyModel::fit(read_lines(spec.corpus_path), spec.order, spec.smoothing,
                       spec.tokenizer);
}

std::vector<retrieval::Passage> corpus_passages(const std::string& path) {
  std::vector<retrieval::Passage> passages;
  std::vector<std::string> lines = read_lines(path);
  char id[16];
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::snprintf(id, sizeof(id), "p%05zu", i);
    passages.push_back({id, lines[i]});
  }
  return passages;
}

// Owns every client the configured roles need; `set` points into it.
struct ClientBundle {
  std::vector<std::unique_ptr<ToyModel>> models;
  std::vector<std::unique_ptr<ModelClient>> clients;
  std::unique_ptr<retrieval::Embedder> embedder;
  std::unique_ptr<retrieval::RetrievalIndex> index;
  harness::ClientSet set;
};

ClientBundle build_clients(const config::ExperimentConfig& config,
                           const std::string& index_path) {
  ClientBundle bundle;
  const std::vector<std::pair<std::string, ModelClient**>> roles = {
      {"target", &bundle.set.target},
      {"base", &bundle.set.base},
      {"judge", &bundle.set.judge},
      {"reference", &bundle.set.reference},
  };
  for (const auto& [role, slot] : roles) {
    auto it = config.models.find(role);
    if (it == config.models.end()) continue;
    const config::ModelSpec& spec = it->second;
    switch (spec.kind) {
      case config::ModelKind::kToy:
        bundle.models.push_back(std::make_unique<ToyModel>(fit_toy(spec.toy)));
        if (role == "target") bundle.set.target_toy = bundle.models.back().get();
        bundle.clients.push_back(
            std::make_unique<ToyModelClient>(*bundle.models.back(), spec.name));
        *slot = bundle.clients.back().get();
        break;
      case config::ModelKind::kHttp:
        bundle.clients.push_back(std::make_unique<HttpModelClient>(spec.endpoint));
        *slot = bundle.clients.back().get();
        break;
      case config::ModelKind::kMock:
        // The offline judge policy; no endpoint to build.
        break;
    }
  }

  const std::size_t dim = config.retrieval ? config.retrieval->dim : 256;
  auto embedding = config.models.find("embedding");
  if (embedding != config.models.end()) {
    if (embedding->second.kind != config::ModelKind::kHttp) {
      throw ConfigError("model role 'embedding' must be an http endpoint");
    }
    bundle.embedder = std::make_unique<HttpEmbedder>(embedding->second.endpoint, dim);
  } else {
    bundle.embedder = std::make_unique<retrieval::HashedBowEmbedder>(dim);
  }
  bundle.set.embedder = bundle.embedder.get();

  if (config.mode == config::Mode::kRagStyle && config.retrieval) {
    if (!index_path.empty()) {
      bundle.index =
          std::make_unique<retrieval::RetrievalIndex>(retrieval::RetrievalIndex::load(index_path));
    } else {
      bundle.index = std::make_unique<retrieval::RetrievalIndex>(retrieval::RetrievalIndex::build(
          *bundle.embedder, corpus_passages(config.retrieval->corpus_path)));
    }
    bundle.set.index = bundle.index.get();
  }
  return bundle;
}

std::string number_repr(double value) { return json(value).dump(); }

// Per-attack metrics over score rows; the same reduction the experiment
// report applies, so evaluate(attack output) matches the no-defense arm.
json evaluate_rows(const std::vector<harness::ScoreRow>& rows,
                   const std::vector<double>& fpr_targets) {
  std::map<std::string, std::vector<const harness::ScoreRow*>> by_attack;
  for (const auto& row : rows) {
    if (row.label != 0 && row.label != 1) {
      throw InputError("score row for '" + row.id + "' has label " +
                       std::to_string(row.label) + "; labels must be 0 or 1");
    }
    by_attack[row.attack].push_back(&row);
  }
  if (by_attack.empty()) throw InputError("no score rows to evaluate");

  json out = json::object();
  for (const auto& [attack, group] : by_attack) {
    std::vector<double> scores;
    std::vector<int> labels;
    int members = 0;
    for (const auto* row : group) {
      scores.push_back(row->score);
      labels.push_back(row->label);
      members += row->label;
    }
    json cell;
    cell["auc"] = metrics::auc(scores, labels);
    cell["asr"] = metrics::asr(scores, labels);
    json tpr = json::object();
    for (double target : fpr_targets) {
      tpr[number_repr(target)] = metrics::tpr_at_fpr(scores, labels, target);
    }
    cell["tpr_at_fpr"] = std::move(tpr);
    cell["count"] = group.size();
    cell["members"] = members;
    cell["nonmembers"] = static_cast<int>(group.size()) - members;
    out[attack] = std::move(cell);
  }
  return out;
}

std::vector<harness::ScoreRow> read_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scores file: " + path);
  std::vector<harness::ScoreRow> rows;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw InputError("scores file line " + std::to_string(line_number) +
                       " is not valid JSON");
    }
    try {
      harness::ScoreRow row;
      row.id = j.at("id").get<std::string>();
      row.label = j.at("label").get<int>();
      row.attack = j.at("attack").get<std::string>();
      row.score = j.at("score").get<double>();
      row.approximate = j.value("approximate", false);
      row.degenerate = j.value("degenerate", false);
      rows.push_back(std::move(row));
    } catch (const json::exception& e) {
      throw InputError("scores file line " + std::to_string(line_number) + ": " + e.what());
    }
  }
  return rows;
}

std::string scores_jsonl(const std::vector<harness::ScoreRow>& rows) {
  std::ostringstream out;
  for (const auto& row : rows) {
    json j;
    j["id"] = row.id;
    j["label"] = row.label;
    j["attack"] = row.attack;
    j["score"] = row.score;
    j["approximate"] = row.approximate;
    j["degenerate"] = row.degenerate;
    out << j.dump() << "\n";
  }
  return out.str();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + dir + "': " + ec.message());
}

int run_attack(const std::string& config_path, const std::string& output,
               const std::string& index_path) {
  config::ExperimentConfig config = config::load_config(config_path);
  if (!output.empty()) config.output_dir = output;
  ClientBundle bundle = build_clients(config, index_path);
  std::vector<harness::ScoreRow> rows = harness::score_dataset(config, bundle.set);

  ensure_dir(config.output_dir);
  const std::string path = (fs::path(config.output_dir) / "scores.jsonl").string();
  write_file(path, scores_jsonl(rows));
  const json summary = evaluate_rows(rows, config.metrics.fpr_targets);
  std::printf("%s\n", summary.dump(2).c_str());
  std::printf("wrote %s (%zu rows)\n", path.c_str(), rows.size());
  return 0;
}

int run_defend(const std::string& config_path, std::vector<std::string> arms,
               const std::string& output) {
  config::ExperimentConfig config = config::load_config(config_path);
  if (!output.empty()) config.output_dir = output;
  if (arms.empty()) {
    arms.push_back("none");
    for (config::DefenseArm arm : config.defenses.arms) {
      arms.push_back(config::to_string(arm));
    }
  } else {
    for (const std::string& arm : arms) {
      if (arm != "none") config::arm_from_string(arm);
    }
  }
  ClientBundle bundle = build_clients(config, "");
  ensure_dir(config.output_dir);
  std::set<std::string> seen;
  for (const std::string& arm : arms) {
    if (!seen.insert(arm).second) continue;
    std::vector<harness::ArmAnswer> answers = harness::defended_answers(config, bundle.set, arm);
    std::ostringstream body;
    for (const auto& a : answers) {
      json j;
      j["id"] = a.id;
      j["question"] = a.question;
      j["answer"] = a.answer;
      body << j.dump() << "\n";
    }
    const std::string path =
        (fs::path(config.output_dir) / ("answers_" + arm + ".jsonl")).string();
    write_file(path, body.str());
    std::printf("wrote %s (%zu answers)\n", path.c_str(), answers.size());
  }
  return 0;
}

int run_evaluate(const std::string& scores_path, std::vector<double> fpr_targets,
                 const std::string& output) {
  if (fpr_targets.empty()) fpr_targets.push_back(0.01);
  const json summary = evaluate_rows(read_scores(scores_path), fpr_targets);
  const std::string body = summary.dump(2) + "\n";
  if (output.empty()) {
    std::fputs(body.c_str(), stdout);
  } else {
    write_file(output, body);
    std::printf("wrote %s\n", output.c_str());
  }
  return 0;
}

int run_report(const std::string& config_path, const std::string& from_path,
               const std::string& output, const std::string& index_path) {
  harness::ExperimentReport report;
  std::string output_dir = output;
  if (!from_path.empty()) {
    if (output_dir.empty()) throw ConfigError("--output is required with --from");
    std::ifstream in(from_path, std::ios::binary);
    if (!in) throw InputError("cannot open report file: " + from_path);
    std::ostringstream body;
    body << in.rdbuf();
    report = harness::report_from_json(body.str());
  } else {
    config::ExperimentConfig config = config::load_config(config_path);
    if (output_dir.empty()) output_dir = config.output_dir;
    ClientBundle bundle = build_clients(config, index_path);
    report = harness::run_experiment(config, bundle.set);
  }
  harness::ReportPaths paths = harness::emit_report(report, output_dir);
  std::fputs(harness::render_table(report).c_str(), stdout);
  std::printf("\nwrote %s\nwrote %s\nwrote %s\n", paths.structured.c_str(),
              paths.table.c_str(), paths.plot_data.c_str());
  return 0;
}

std::atomic<bool> g_stop{false};
void handle_signal(int) { g_stop.store(true); }

int run_serve_mock(const std::string& config_path, const std::string& host, int port,
                   int top_logprobs) {
  config::ExperimentConfig config = config::load_config(config_path);
  auto it = config.models.find("target");
  if (it == config.models.end() || it->second.kind != config::ModelKind::kToy) {
    throw ConfigError("serve-mock needs a toy 'target' model");
  }
  server::MockServerConfig server_config;
  server_config.host = host;
  server_config.port = port;
  server_config.top_logprobs_only = top_logprobs;
  server::MockServer server(fit_toy(it->second.toy), server_config);
  std::printf("serving '%s' at %s\n", it->second.name.c_str(), server.address().c_str());
  std::fflush(stdout);

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  while (!g_stop.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  server.stop();
  std::printf("stopped\n");
  return 0;
}

int run_index(const std::string& config_path, const std::string& output) {
  config::ExperimentConfig config = config::load_config(config_path);
  if (!config.retrieval) throw ConfigError("config has no retrieval settings");
  std::unique_ptr<retrieval::Embedder> embedder;
  auto embedding = config.models.find("embedding");
  if (embedding != config.models.end()) {
    if (embedding->second.kind != config::ModelKind::kHttp) {
      throw ConfigError("model role 'embedding' must be an http endpoint");
    }
    embedder = std::make_unique<HttpEmbedder>(embedding->second.endpoint, config.retrieval->dim);
  } else {
    embedder = std::make_unique<retrieval::HashedBowEmbedder>(config.retrieval->dim);
  }
  std::vector<retrieval::Passage> passages = corpus_passages(config.retrieval->corpus_path);
  retrieval::RetrievalIndex index = retrieval::RetrievalIndex::build(*embedder, passages);
  if (fs::path(output).has_parent_path()) {
    ensure_dir(fs::path(output).parent_path().string());
  }
  index.save(output);
  std::printf("wrote %s (%zu passages, dim %zu)\n", output.c_str(), passages.size(),
              embedder->dimension());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"membership-inference red-team and defense harness"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::string config_path;
  std::string output;
  std::string index_path;
  std::string scores_path;
  std::string from_path;
  std::string host = "127.0.0.1";
  int port = 0;
  int top_logprobs = 0;
  std::vector<std::string> arms;
  std::vector<double> fpr_targets;
  int rc = 0;

  CLI::App* attack = app.add_subcommand(
      "attack", "run the enabled attacks over the dataset with no defense");
  attack->add_option("--config", config_path, "experiment config file")->required();
  attack->add_option("--output", output, "output directory (default: config output_dir)");
  attack->add_option("--index", index_path, "prebuilt retrieval index for rag-style mode");
  attack->callback([&] { rc = run_attack(config_path, output, index_path); });

  CLI::App* defend =
      app.add_subcommand("defend", "generate answers through the defense chain");
  defend->add_option("--config", config_path, "experiment config file")->required();
  defend->add_option("--arm", arms, "defense arm (repeatable; default: none + configured arms)");
  defend->add_option("--output", output, "output directory (default: config output_dir)");
  defend->callback([&] { rc = run_defend(config_path, arms, output); });

  CLI::App* evaluate = app.add_subcommand("evaluate", "compute metrics from a scores file");
  evaluate->add_option("--scores", scores_path, "scores.jsonl produced by 'attack'")->required();
  evaluate->add_option("--fpr", fpr_targets, "TPR@FPR target (repeatable; default 0.01)");
  evaluate->add_option("--output", output, "write metrics JSON here instead of stdout");
  evaluate->callback([&] { rc = run_evaluate(scores_path, fpr_targets, output); });

  CLI::App* report =
      app.add_subcommand("report", "run the full experiment and render report files");
  report->add_option("--config", config_path, "experiment config file");
  report->add_option("--from", from_path, "render an existing report.json instead of running");
  report->add_option("--output", output, "output directory");
  report->add_option("--index", index_path, "prebuilt retrieval index for rag-style mode");
  report->callback([&] {
    if (config_path.empty() == from_path.empty()) {
      throw CLI::ValidationError("report", "exactly one of --config / --from is required");
    }
    rc = run_report(config_path, from_path, output, index_path);
  });

  CLI::App* serve = app.add_subcommand("serve-mock", "serve the toy target model over http");
  serve->add_option("--config", config_path, "experiment config file")->required();
  serve->add_option("--host", host, "bind address (default 127.0.0.1)");
  serve->add_option("--port", port, "bind port (default: pick a free port)")
      ->check(CLI::Range(0, 65535));
  serve->add_option("--top-logprobs", top_logprobs,
                    "serve only top-k logprob maps instead of exact moments")
      ->check(CLI::NonNegativeNumber);
  serve->callback([&] { rc = run_serve_mock(config_path, host, port, top_logprobs); });

  CLI::App* index = app.add_subcommand("index", "build and save a retrieval index");
  index->add_option("--config", config_path, "experiment config file")->required();
  index->add_option("--output", output, "index file to write")->required();
  index->callback([&] { rc = run_index(config_path, output); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return rc;
}
