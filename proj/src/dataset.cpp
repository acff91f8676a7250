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

#include "mia/dataset.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mia/common.hpp"

namespace mia::dataset {

std::string to_string(Membership m) {
  return m == Membership::kMember ? "member" : "nonmember";
}

Membership membership_from_string(const std::string& name) {
  if (name == "member") return Membership::kMember;
  if (name == "nonmember") return Membership::kNonmember;
  throw InputError("membership must be 'member' or 'nonmember', got '" + name + "'");
}

namespace {

std::string at_line(std::size_t line_number, const std::string& what) {
  return "line " + std::to_string(line_number) + ": " + what;
}

std::string require_string(const nlohmann::json& object, const char* field,
                           std::size_t line_number) {
  if (!object.contains(field)) {
    throw InputError(at_line(line_number, std::string("missing field '") + field + "'"));
  }
  if (!object.at(field).is_string()) {
    throw InputError(
        at_line(line_number, std::string("field '") + field + "' must be a string"));
  }
  return object.at(field).get<std::string>();
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

std::vector<DatasetRecord> parse_dataset(const std::string& text) {
  static const std::set<std::string> kKnown = {"id", "question", "context", "answer",
                                               "membership"};
  std::vector<DatasetRecord> records;
  std::set<std::string> seen_ids;
  std::istringstream in(text);
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (is_blank(line)) continue;
    nlohmann::json object;
    try {
      object = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(at_line(line_number, std::string("malformed record: ") + e.what()));
    }
    if (!object.is_object()) {
      throw InputError(at_line(line_number, "record must be an object"));
    }
    for (const auto& item : object.items()) {
      if (kKnown.count(item.key()) == 0) {
        throw InputError(at_line(line_number, "unknown field '" + item.key() + "'"));
      }
    }

    DatasetRecord r;
    r.id = require_string(object, "id", line_number);
    if (r.id.empty()) throw InputError(at_line(line_number, "field 'id' must be non-empty"));
    r.question = require_string(object, "question", line_number);
    r.answer = require_string(object, "answer", line_number);
    if (object.contains("context")) {
      if (!object.at("context").is_string()) {
        throw InputError(at_line(line_number, "field 'context' must be a string"));
      }
      r.context = object.at("context").get<std::string>();
    }
    try {
      r.membership = membership_from_string(require_string(object, "membership", line_number));
    } catch (const InputError& e) {
      if (!object.contains("membership") || !object.at("membership").is_string()) throw;
      throw InputError(at_line(line_number, e.what()));
    }
    if (!seen_ids.insert(r.id).second) {
      throw InputError(at_line(line_number, "duplicate id '" + r.id + "'"));
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<DatasetRecord> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open dataset file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset(buffer.str());
}

std::string serialize_dataset(const std::vector<DatasetRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json object;
    object["id"] = r.id;
    object["question"] = r.question;
    if (r.context.has_value()) object["context"] = *r.context;
    object["answer"] = r.answer;
    object["membership"] = to_string(r.membership);
    out += object.dump();
    out += '\n';
  }
  return out;
}

void save_dataset(const std::string& path, const std::vector<DatasetRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open dataset file '" + path + "' for writing");
  const std::string text = serialize_dataset(records);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("failed writing dataset file '" + path + "'");
}

}  // namespace mia::dataset
