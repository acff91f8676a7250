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

#include <cstdio>
#include <string>
#include <vector>

#include "doctest.h"
#include "mia/common.hpp"
#include "mia/dataset.hpp"

namespace {

using mia::InputError;
namespace ds = mia::dataset;

const char kWellFormed[] =
    R"({"id":"a1","question":"q one","answer":"first answer","membership":"member"}
{"id":"a2","question":"q two","context":"some context","answer":"second","membership":"nonmember"}
{"id":"a3","question":"q three","answer":"third","membership":"member"}

{"id":"a4","question":"q four","answer":"fourth","membership":"nonmember"}
)";

}  // namespace

TEST_CASE("well-formed dataset parses in file order") {
  const auto records = ds::parse_dataset(kWellFormed);
  REQUIRE(records.size() == 4);
  CHECK(records[0].id == "a1");
  CHECK(records[0].question == "q one");
  CHECK(records[0].answer == "first answer");
  CHECK(records[0].membership == ds::Membership::kMember);
  CHECK(records[0].label() == 1);
  CHECK_FALSE(records[0].context.has_value());
  CHECK(records[1].context == std::optional<std::string>("some context"));
  CHECK(records[1].label() == 0);
  CHECK(records[3].id == "a4");
}

TEST_CASE("field errors carry line numbers") {
  SUBCASE("missing membership") {
    const std::string text =
        "{\"id\":\"a\",\"question\":\"q\",\"answer\":\"x\",\"membership\":\"member\"}\n"
        "{\"id\":\"b\",\"question\":\"q\",\"answer\":\"x\"}\n";
    CHECK_THROWS_WITH_AS(ds::parse_dataset(text),
                         "line 2: missing field 'membership'", InputError);
  }
  SUBCASE("bad membership value") {
    CHECK_THROWS_WITH_AS(
        ds::parse_dataset(
            R"({"id":"a","question":"q","answer":"x","membership":"maybe"})"),
        "line 1: membership must be 'member' or 'nonmember', got 'maybe'", InputError);
  }
  SUBCASE("non-string id") {
    CHECK_THROWS_WITH_AS(
        ds::parse_dataset(R"({"id":7,"question":"q","answer":"x","membership":"member"})"),
        "line 1: field 'id' must be a string", InputError);
  }
  SUBCASE("empty id") {
    CHECK_THROWS_AS(
        ds::parse_dataset(R"({"id":"","question":"q","answer":"x","membership":"member"})"),
        InputError);
  }
  SUBCASE("unknown field") {
    CHECK_THROWS_WITH_AS(
        ds::parse_dataset(
            R"({"id":"a","question":"q","answer":"x","membership":"member","extra":1})"),
        "line 1: unknown field 'extra'", InputError);
  }
  SUBCASE("malformed json names the line") {
    const std::string text =
        "{\"id\":\"a\",\"question\":\"q\",\"answer\":\"x\",\"membership\":\"member\"}\n"
        "not json\n";
    CHECK_THROWS_AS(ds::parse_dataset(text), InputError);
    try {
      ds::parse_dataset(text);
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).rfind("line 2: malformed record", 0) == 0);
    }
  }
  SUBCASE("non-object line") {
    CHECK_THROWS_WITH_AS(ds::parse_dataset("[1,2]\n"), "line 1: record must be an object",
                         InputError);
  }
  SUBCASE("duplicate id") {
    const std::string text =
        "{\"id\":\"a\",\"question\":\"q\",\"answer\":\"x\",\"membership\":\"member\"}\n"
        "{\"id\":\"a\",\"question\":\"q\",\"answer\":\"y\",\"membership\":\"nonmember\"}\n";
    CHECK_THROWS_WITH_AS(ds::parse_dataset(text), "line 2: duplicate id 'a'", InputError);
  }
}

TEST_CASE("save and load round-trip") {
  std::vector<ds::DatasetRecord> records;
  records.push_back({"r1", "what is it", std::nullopt, "a thing", ds::Membership::kMember});
  records.push_back(
      {"r2", "where is it", std::string("ctx here"), "over there", ds::Membership::kNonmember});
  records.push_back({"r3", "unicode \xE2\x9C\x93 ok?", std::nullopt, "answer \"quoted\"",
                     ds::Membership::kMember});

  const std::string path = "/tmp/mia_dataset_roundtrip.jsonl";
  ds::save_dataset(path, records);
  const auto loaded = ds::load_dataset(path);
  CHECK(loaded == records);

  // Serialization is deterministic byte for byte.
  CHECK(ds::serialize_dataset(records) == ds::serialize_dataset(records));
  std::remove(path.c_str());
}

TEST_CASE("loading a missing file fails") {
  CHECK_THROWS_AS(ds::load_dataset("/tmp/definitely_not_here_9321.jsonl"), InputError);
}

TEST_CASE("membership names round-trip") {
  CHECK(ds::to_string(ds::Membership::kMember) == "member");
  CHECK(ds::to_string(ds::Membership::kNonmember) == "nonmember");
  CHECK(ds::membership_from_string("member") == ds::Membership::kMember);
  CHECK(ds::membership_from_string("nonmember") == ds::Membership::kNonmember);
  CHECK_THROWS_AS(ds::membership_from_string("Member"), InputError);
}
