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

#include "mia/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "mia/common.hpp"
#include "json.hpp"

namespace mia::config {
namespace {

using nlohmann::json;

const std::set<std::string>& known_roles() {
  static const std::set<std::string> roles = {"target", "base", "judge", "reference",
                                              "embedding"};
  return roles;
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where.empty() ? what : where + ": " + what);
}

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) fail(where, "unknown field '" + item.key() + "'");
  }
}

const json* find(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

std::string get_string(const json& obj, const std::string& key, const std::string& where) {
  const json* v = find(obj, key);
  if (!v) fail(where, "missing field '" + key + "'");
  if (!v->is_string()) fail(where, "field '" + key + "' must be a string");
  return v->get<std::string>();
}

std::string get_string_or(const json& obj, const std::string& key, const std::string& where,
                          const std::string& fallback) {
  return find(obj, key) ? get_string(obj, key, where) : fallback;
}

double get_number_or(const json& obj, const std::string& key, const std::string& where,
                     double fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) fail(where, "field '" + key + "' must be a number");
  return v->get<double>();
}

int get_int_or(const json& obj, const std::string& key, const std::string& where,
               int fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) fail(where, "field '" + key + "' must be an integer");
  return v->get<int>();
}

uint64_t get_uint64_or(const json& obj, const std::string& key, const std::string& where,
                       uint64_t fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() &&
                                  v->get<int64_t>() < 0)) {
    fail(where, "field '" + key + "' must be a non-negative integer");
  }
  return v->get<uint64_t>();
}

void check_range(double value, double lo, double hi, const std::string& where,
                 const std::string& key) {
  if (!(value >= lo && value <= hi)) {
    std::ostringstream os;
    os << "field '" << key << "' must be in [" << lo << ", " << hi << "], got " << value;
    fail(where, os.str());
  }
}

void check_min_int(int value, int lo, const std::string& where, const std::string& key) {
  if (value < lo) {
    fail(where, "field '" + key + "' must be >= " + std::to_string(lo) + ", got " +
                    std::to_string(value));
  }
}

TokenizerKind tokenizer_from_name(const std::string& name, const std::string& where) {
  if (name == "whitespace") return TokenizerKind::kWhitespace;
  if (name == "byte") return TokenizerKind::kByte;
  fail(where, "field 'tokenizer' must be 'whitespace' or 'byte', got '" + name + "'");
}

std::string tokenizer_name(TokenizerKind kind) {
  return kind == TokenizerKind::kWhitespace ? "whitespace" : "byte";
}

ModelSpec parse_model_spec(const json& obj, const std::string& role) {
  const std::string where = "models." + role;
  if (!obj.is_object()) fail(where, "must be an object");
  const std::string kind = get_string(obj, "kind", where);
  ModelSpec spec;
  spec.name = get_string_or(obj, "name", where, role);
  if (kind == "toy") {
    spec.kind = ModelKind::kToy;
    check_keys(obj, {"kind", "name", "corpus", "order", "smoothing", "tokenizer"}, where);
    spec.toy.corpus_path = get_string(obj, "corpus", where);
    spec.toy.order = get_int_or(obj, "order", where, spec.toy.order);
    check_min_int(spec.toy.order, 1, where, "order");
    spec.toy.smoothing = get_number_or(obj, "smoothing", where, spec.toy.smoothing);
    if (!(spec.toy.smoothing > 0.0)) fail(where, "field 'smoothing' must be > 0");
    spec.toy.tokenizer =
        tokenizer_from_name(get_string_or(obj, "tokenizer", where, "whitespace"), where);
  } else if (kind == "http") {
    spec.kind = ModelKind::kHttp;
    check_keys(obj, {"kind", "name", "address", "model", "timeout_ms", "max_parallel",
                     "auth_token"},
               where);
    spec.endpoint.base_address = get_string(obj, "address", where);
    spec.endpoint.model = get_string_or(obj, "model", where, spec.name);
    int timeout_ms = get_int_or(obj, "timeout_ms", where, 30000);
    check_min_int(timeout_ms, 1, where, "timeout_ms");
    spec.endpoint.timeout = std::chrono::milliseconds(timeout_ms);
    spec.endpoint.max_parallel =
        get_int_or(obj, "max_parallel", where, spec.endpoint.max_parallel);
    check_min_int(spec.endpoint.max_parallel, 1, where, "max_parallel");
    if (find(obj, "auth_token")) {
      spec.endpoint.auth_token = get_string(obj, "auth_token", where);
    }
  } else if (kind == "mock") {
    spec.kind = ModelKind::kMock;
    check_keys(obj, {"kind", "name"}, where);
  } else {
    fail(where, "field 'kind' must be 'toy', 'http', or 'mock', got '" + kind + "'");
  }
  return spec;
}

AttackSettings parse_attacks(const json& obj) {
  const std::string where = "attacks";
  if (!obj.is_object()) fail(where, "must be an object");
  check_keys(obj,
             {"enabled", "mink_k", "recall_prefix", "spv_paraphrases", "spv_drop_prob",
              "parallelism"},
             where);
  AttackSettings out;
  if (const json* enabled = find(obj, "enabled")) {
    if (!enabled->is_array()) fail(where, "field 'enabled' must be an array");
    out.enabled.clear();
    for (const auto& entry : *enabled) {
      if (!entry.is_string()) fail(where, "field 'enabled' must hold attack names");
      try {
        out.enabled.push_back(attacks::attack_from_string(entry.get<std::string>()));
      } catch (const Error& e) {
        fail(where, e.what());
      }
    }
    if (out.enabled.empty()) fail(where, "field 'enabled' must not be empty");
  }
  out.mink_k = get_number_or(obj, "mink_k", where, out.mink_k);
  if (!(out.mink_k > 0.0 && out.mink_k <= 1.0)) {
    fail(where, "field 'mink_k' must be in (0, 1]");
  }
  out.recall_prefix = get_string_or(obj, "recall_prefix", where, "");
  out.spv_paraphrases = get_int_or(obj, "spv_paraphrases", where, out.spv_paraphrases);
  check_min_int(out.spv_paraphrases, 1, where, "spv_paraphrases");
  out.spv_drop_prob = get_number_or(obj, "spv_drop_prob", where, out.spv_drop_prob);
  if (!(out.spv_drop_prob >= 0.0 && out.spv_drop_prob < 1.0)) {
    fail(where, "field 'spv_drop_prob' must be in [0, 1)");
  }
  out.parallelism = get_int_or(obj, "parallelism", where, out.parallelism);
  check_min_int(out.parallelism, 1, where, "parallelism");
  return out;
}

AdaptiveSettings parse_adaptive(const json& obj) {
  const std::string where = "defenses.adaptive";
  if (!obj.is_object()) fail(where, "must be an object");
  check_keys(obj,
             {"w_sim", "w_loss", "tau", "sigma_base", "lambda_amp", "alpha_decay",
              "rdp_order", "rdp_form", "delta"},
             where);
  AdaptiveSettings out;
  defense::NoiseParams& p = out.noise;
  p.w_sim = get_number_or(obj, "w_sim", where, p.w_sim);
  p.w_loss = get_number_or(obj, "w_loss", where, p.w_loss);
  p.tau = get_number_or(obj, "tau", where, p.tau);
  p.sigma_base = get_number_or(obj, "sigma_base", where, p.sigma_base);
  p.lambda_amp = get_number_or(obj, "lambda_amp", where, p.lambda_amp);
  p.alpha_decay = get_number_or(obj, "alpha_decay", where, p.alpha_decay);
  p.rdp_order = get_number_or(obj, "rdp_order", where, p.rdp_order);
  const std::string form = get_string_or(obj, "rdp_form", where, "quadratic");
  if (form == "quadratic") {
    p.rdp_form = defense::RdpForm::kQuadratic;
  } else if (form == "standard") {
    p.rdp_form = defense::RdpForm::kStandard;
  } else {
    fail(where, "field 'rdp_form' must be 'quadratic' or 'standard', got '" + form + "'");
  }
  try {
    defense::validate(p);
  } catch (const Error& e) {
    fail(where, e.what());
  }
  out.delta = get_number_or(obj, "delta", where, out.delta);
  if (!(out.delta > 0.0 && out.delta < 1.0)) fail(where, "field 'delta' must be in (0, 1)");
  return out;
}

DefenseSettings parse_defenses(const json& obj) {
  const std::string where = "defenses";
  if (!obj.is_object()) fail(where, "must be an object");
  check_keys(obj, {"arms", "flatten_lambda", "dp_sigma", "dp_seed", "adaptive"}, where);
  DefenseSettings out;
  if (const json* arms = find(obj, "arms")) {
    if (!arms->is_array()) fail(where, "field 'arms' must be an array");
    for (const auto& entry : *arms) {
      if (!entry.is_string()) fail(where, "field 'arms' must hold arm names");
      try {
        out.arms.push_back(arm_from_string(entry.get<std::string>()));
      } catch (const Error& e) {
        fail(where, e.what());
      }
    }
  }
  out.flatten_lambda = get_number_or(obj, "flatten_lambda", where, out.flatten_lambda);
  check_range(out.flatten_lambda, 0.0, 1.0, where, "flatten_lambda");
  out.dp_sigma = get_number_or(obj, "dp_sigma", where, out.dp_sigma);
  if (!(out.dp_sigma >= 0.0)) fail(where, "field 'dp_sigma' must be >= 0");
  out.dp_seed = get_uint64_or(obj, "dp_seed", where, out.dp_seed);
  if (const json* adaptive = find(obj, "adaptive")) out.adaptive = parse_adaptive(*adaptive);
  return out;
}

json spec_to_json(const ModelSpec& spec) {
  json j;
  j["name"] = spec.name;
  switch (spec.kind) {
    case ModelKind::kToy:
      j["kind"] = "toy";
      j["corpus"] = spec.toy.corpus_path;
      j["order"] = spec.toy.order;
      j["smoothing"] = spec.toy.smoothing;
      j["tokenizer"] = tokenizer_name(spec.toy.tokenizer);
      break;
    case ModelKind::kHttp:
      j["kind"] = "http";
      j["address"] = spec.endpoint.base_address;
      j["model"] = spec.endpoint.model;
      j["timeout_ms"] = static_cast<int64_t>(spec.endpoint.timeout.count());
      j["max_parallel"] = spec.endpoint.max_parallel;
      j["auth_token"] = spec.endpoint.auth_token ? json(*spec.endpoint.auth_token) : json();
      break;
    case ModelKind::kMock:
      j["kind"] = "mock";
      break;
  }
  return j;
}

}  // namespace

std::vector<attacks::AttackKind> default_attacks() {
  using attacks::AttackKind;
  return {AttackKind::kLogloss, AttackKind::kZlib, AttackKind::kMink, AttackKind::kMinkpp,
          AttackKind::kSpv};
}

std::string to_string(Mode mode) {
  return mode == Mode::kSftStyle ? "sft-style" : "rag-style";
}

Mode mode_from_string(const std::string& name) {
  if (name == "sft-style") return Mode::kSftStyle;
  if (name == "rag-style") return Mode::kRagStyle;
  throw ConfigError("unknown mode '" + name + "' (expected 'sft-style' or 'rag-style')");
}

std::string to_string(DefenseArm arm) {
  switch (arm) {
    case DefenseArm::kEpd:
      return "epd";
    case DefenseArm::kFlatten:
      return "flatten";
    case DefenseArm::kDpLogits:
      return "dp_logits";
    case DefenseArm::kAdaptive:
      return "adaptive";
  }
  throw ConfigError("unknown defense arm");
}

DefenseArm arm_from_string(const std::string& name) {
  if (name == "epd") return DefenseArm::kEpd;
  if (name == "flatten") return DefenseArm::kFlatten;
  if (name == "dp_logits") return DefenseArm::kDpLogits;
  if (name == "adaptive") return DefenseArm::kAdaptive;
  throw ConfigError("unknown defense arm '" + name +
                    "' (expected 'epd', 'flatten', 'dp_logits', or 'adaptive')");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  check_keys(root,
             {"mode", "dataset", "output_dir", "seed", "generation", "attacks", "metrics",
              "models", "defenses", "retrieval"},
             "");

  ExperimentConfig out;
  out.mode = mode_from_string(get_string_or(root, "mode", "", "sft-style"));
  out.dataset_path = get_string(root, "dataset", "");
  out.output_dir = get_string_or(root, "output_dir", "", "out");
  out.seed = get_uint64_or(root, "seed", "", 0);

  if (const json* gen = find(root, "generation")) {
    const std::string where = "generation";
    if (!gen->is_object()) fail(where, "must be an object");
    check_keys(*gen, {"max_tokens", "temperature"}, where);
    out.generation.max_tokens =
        get_int_or(*gen, "max_tokens", where, out.generation.max_tokens);
    check_min_int(out.generation.max_tokens, 1, where, "max_tokens");
    out.generation.temperature =
        get_number_or(*gen, "temperature", where, out.generation.temperature);
    if (!(out.generation.temperature >= 0.0)) {
      fail(where, "field 'temperature' must be >= 0");
    }
  }

  if (const json* atk = find(root, "attacks")) out.attacks = parse_attacks(*atk);

  if (const json* met = find(root, "metrics")) {
    const std::string where = "metrics";
    if (!met->is_object()) fail(where, "must be an object");
    check_keys(*met, {"fpr_targets"}, where);
    if (const json* targets = find(*met, "fpr_targets")) {
      if (!targets->is_array() || targets->empty()) {
        fail(where, "field 'fpr_targets' must be a non-empty array");
      }
      out.metrics.fpr_targets.clear();
      for (const auto& entry : *targets) {
        if (!entry.is_number()) fail(where, "field 'fpr_targets' must hold numbers");
        double fpr = entry.get<double>();
        check_range(fpr, 0.0, 1.0, where, "fpr_targets");
        out.metrics.fpr_targets.push_back(fpr);
      }
    }
  }

  const json* models = find(root, "models");
  if (!models) throw ConfigError("missing field 'models'");
  if (!models->is_object()) throw ConfigError("models: must be an object");
  for (const auto& item : models->items()) {
    if (!known_roles().count(item.key())) {
      fail("models", "unknown role '" + item.key() + "'");
    }
    out.models[item.key()] = parse_model_spec(item.value(), item.key());
  }

  if (const json* def = find(root, "defenses")) out.defenses = parse_defenses(*def);

  if (const json* ret = find(root, "retrieval")) {
    const std::string where = "retrieval";
    if (!ret->is_object()) fail(where, "must be an object");
    check_keys(*ret, {"corpus", "top_k", "dim"}, where);
    RetrievalSettings settings;
    settings.corpus_path = get_string(*ret, "corpus", where);
    settings.top_k = get_int_or(*ret, "top_k", where, settings.top_k);
    check_min_int(settings.top_k, 1, where, "top_k");
    int dim = get_int_or(*ret, "dim", where, static_cast<int>(settings.dim));
    check_min_int(dim, 1, where, "dim");
    settings.dim = static_cast<std::size_t>(dim);
    out.retrieval = settings;
  }

  return out;
}

void validate(const ExperimentConfig& config) {
  if (config.dataset_path.empty()) throw ConfigError("dataset path must not be empty");
  if (config.output_dir.empty()) throw ConfigError("output_dir must not be empty");
  if (!config.models.count("target")) throw ConfigError("models: a 'target' model is required");
  if (config.mode == Mode::kRagStyle &&
      (!config.retrieval || config.retrieval->corpus_path.empty())) {
    throw ConfigError("rag-style mode requires a retrieval corpus");
  }
  const auto& enabled = config.attacks.enabled;
  auto has = [&](attacks::AttackKind kind) {
    return std::find(enabled.begin(), enabled.end(), kind) != enabled.end();
  };
  if (has(attacks::AttackKind::kLira) && !config.models.count("reference")) {
    throw ConfigError("attack 'lira' requires a 'reference' model");
  }
  if (has(attacks::AttackKind::kRecall) && config.attacks.recall_prefix.empty()) {
    throw ConfigError("attack 'recall' requires attacks.recall_prefix");
  }
  for (DefenseArm arm : config.defenses.arms) {
    if (arm == DefenseArm::kEpd && !config.models.count("base")) {
      throw ConfigError("defense arm 'epd' requires a 'base' model");
    }
    if (arm == DefenseArm::kFlatten || arm == DefenseArm::kDpLogits ||
        arm == DefenseArm::kAdaptive) {
      auto it = config.models.find("target");
      if (it == config.models.end() || it->second.kind != ModelKind::kToy) {
        throw ConfigError("defense arm '" + to_string(arm) +
                          "' needs distribution access; the target model must be kind 'toy'");
      }
    }
    if (arm == DefenseArm::kAdaptive && !config.models.count("base")) {
      throw ConfigError("defense arm 'adaptive' requires a 'base' model");
    }
  }
  for (const auto& [role, spec] : config.models) {
    if (spec.kind == ModelKind::kMock && role != "judge") {
      throw ConfigError("models." + role + ": kind 'mock' is only valid for the judge role");
    }
  }
}

void apply_env_overrides(ExperimentConfig& config) {
  for (const std::string& role : known_roles()) {
    std::string upper = role;
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (const char* address = std::getenv(("MIA_" + upper + "_ADDRESS").c_str())) {
      ModelSpec& spec = config.models[role];
      if (spec.name.empty()) spec.name = role;
      if (spec.endpoint.model.empty()) spec.endpoint.model = spec.name;
      spec.kind = ModelKind::kHttp;
      spec.endpoint.base_address = address;
    }
    if (const char* token = std::getenv(("MIA_" + upper + "_AUTH_TOKEN").c_str())) {
      auto it = config.models.find(role);
      if (it != config.models.end() && it->second.kind == ModelKind::kHttp) {
        it->second.endpoint.auth_token = token;
      }
    }
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  ExperimentConfig config = parse_config(buffer.str());
  apply_env_overrides(config);
  validate(config);
  return config;
}

std::string canonical_json(const ExperimentConfig& config) {
  json j;
  j["mode"] = to_string(config.mode);
  j["dataset"] = config.dataset_path;
  j["output_dir"] = config.output_dir;
  j["seed"] = config.seed;
  j["generation"] = {{"max_tokens", config.generation.max_tokens},
                     {"temperature", config.generation.temperature}};
  json enabled = json::array();
  for (attacks::AttackKind kind : config.attacks.enabled) {
    enabled.push_back(std::string(attacks::to_string(kind)));
  }
  j["attacks"] = {{"enabled", enabled},
                  {"mink_k", config.attacks.mink_k},
                  {"recall_prefix", config.attacks.recall_prefix},
                  {"spv_paraphrases", config.attacks.spv_paraphrases},
                  {"spv_drop_prob", config.attacks.spv_drop_prob},
                  {"parallelism", config.attacks.parallelism}};
  j["metrics"] = {{"fpr_targets", config.metrics.fpr_targets}};
  json models = json::object();
  for (const auto& [role, spec] : config.models) models[role] = spec_to_json(spec);
  j["models"] = models;
  json arms = json::array();
  for (DefenseArm arm : config.defenses.arms) arms.push_back(to_string(arm));
  const defense::NoiseParams& p = config.defenses.adaptive.noise;
  j["defenses"] = {
      {"arms", arms},
      {"flatten_lambda", config.defenses.flatten_lambda},
      {"dp_sigma", config.defenses.dp_sigma},
      {"dp_seed", config.defenses.dp_seed},
      {"adaptive",
       {{"w_sim", p.w_sim},
        {"w_loss", p.w_loss},
        {"tau", p.tau},
        {"sigma_base", p.sigma_base},
        {"lambda_amp", p.lambda_amp},
        {"alpha_decay", p.alpha_decay},
        {"rdp_order", p.rdp_order},
        {"rdp_form", p.rdp_form == defense::RdpForm::kQuadratic ? "quadratic" : "standard"},
        {"delta", config.defenses.adaptive.delta}}}};
  if (config.retrieval) {
    j["retrieval"] = {{"corpus", config.retrieval->corpus_path},
                      {"top_k", config.retrieval->top_k},
                      {"dim", config.retrieval->dim}};
  } else {
    j["retrieval"] = nullptr;
  }
  return j.dump();
}

uint64_t fingerprint(const ExperimentConfig& config) {
  uint64_t h = fnv1a64(canonical_json(config));
  return fnv1a64_combine(h, kVersion);
}

}  // namespace mia::config
