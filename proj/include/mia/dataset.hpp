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

#include <optional>
#include <string>
#include <vector>

namespace mia::dataset {

enum class Membership { kMember, kNonmember };

std::string to_string(Membership m);
Membership membership_from_string(const std::string& name);

struct DatasetRecord {
  std::string id;
  std::string question;
  std::optional<std::string> context;
  std::string answer;
  Membership membership = Membership::kNonmember;

  int label() const { return membership == Membership::kMember ? 1 : 0; }
  bool operator==(const DatasetRecord& other) const = default;
};

// One JSON object per line with fields id, question, answer, membership
// and optional context. Validation is strict: missing or mistyped fields
// and unknown keys fail with the offending line number; ids must be
// unique. Blank lines are permitted and skipped. Record order follows
// file order.
std::vector<DatasetRecord> load_dataset(const std::string& path);

std::vector<DatasetRecord> parse_dataset(const std::string& text);

// Inverse of load_dataset; load(save(x)) == x.
void save_dataset(const std::string& path, const std::vector<DatasetRecord>& records);

std::string serialize_dataset(const std::vector<DatasetRecord>& records);

}  // namespace mia::dataset
