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

#include "mia/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>

#include "mia/common.hpp"
#include "mia/kernels.hpp"
#include "mia/tokenize.hpp"

namespace mia::retrieval {

HashedBowEmbedder::HashedBowEmbedder(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw ConfigError("embedding dimension must be positive");
}

std::string HashedBowEmbedder::name() const {
  return "hashed-bow-" + std::to_string(dim_);
}

std::vector<double> HashedBowEmbedder::embed(const std::string& text) const {
  if (text.empty()) throw InputError("cannot embed an empty text");
  std::vector<double> v(dim_, 0.0);
  for (const std::string& token : tokenize(text)) {
    const uint64_t h = fnv1a64(token);
    const std::size_t bucket = h % dim_;
    const double sign = ((h >> 32) & 1) ? 1.0 : -1.0;
    v[bucket] += sign;
  }
  double norm = std::sqrt(kernels::dot_f64(v.data(), v.data(), dim_));
  if (norm == 0.0) {
    // All buckets cancelled (or no tokens): deterministic indicator.
    std::fill(v.begin(), v.end(), 0.0);
    v[fnv1a64(text) % dim_] = 1.0;
    return v;
  }
  for (auto& x : v) x /= norm;
  return v;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw InputError("cosine inputs differ in dimension");
  const double na = std::sqrt(kernels::dot_f64(a, a));
  const double nb = std::sqrt(kernels::dot_f64(b, b));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return kernels::dot_f64(a, b) / (na * nb);
}

RetrievalIndex RetrievalIndex::build(const Embedder& embedder,
                                     const std::vector<Passage>& passages) {
  if (passages.empty()) throw ConfigError("retrieval corpus is empty");
  std::set<std::string> seen;
  RetrievalIndex index;
  index.dim_ = embedder.dimension();
  index.passages_ = passages;
  index.vectors_.reserve(passages.size());
  for (const auto& p : passages) {
    if (!seen.insert(p.id).second) {
      throw InputError("duplicate passage id '" + p.id + "'");
    }
    index.vectors_.push_back(embedder.embed(p.text));
  }
  return index;
}

std::vector<Hit> RetrievalIndex::retrieve_topk(const std::vector<double>& query,
                                               std::size_t k) const {
  if (k < 1) throw ConfigError("k must be at least 1");
  if (query.size() != dim_) throw InputError("query dimension mismatch");
  const double norm = std::sqrt(kernels::dot_f64(query, query));
  if (std::abs(norm - 1.0) > 1e-6) throw InputError("query vector must be unit-norm");

  std::vector<Hit> hits;
  hits.reserve(passages_.size());
  for (std::size_t i = 0; i < vectors_.size(); ++i) {
    hits.push_back({passages_[i].id, kernels::dot_f64(query, vectors_[i]), i});
  }
  const std::size_t take = std::min(k, hits.size());
  auto better = [](const Hit& a, const Hit& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.index < b.index;
  };
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(take),
                    hits.end(), better);
  hits.resize(take);
  return hits;
}

namespace {

constexpr char kMagic[4] = {'M', 'I', 'R', 'X'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& out, uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_str(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint32_t read_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

uint64_t read_u64(std::istream& in) {
  uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

std::string read_str(std::istream& in) {
  const uint64_t len = read_u64(in);
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  return s;
}

}  // namespace

void RetrievalIndex::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kVersion);
  write_u32(out, static_cast<uint32_t>(dim_));
  write_u64(out, passages_.size());
  for (const auto& p : passages_) {
    write_str(out, p.id);
    write_str(out, p.text);
  }
  for (const auto& v : vectors_) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  if (!out) throw Error("failed while writing index to '" + path + "'");

  std::ofstream ids(path + ".ids.txt", std::ios::trunc);
  if (!ids) throw InputError("cannot open '" + path + ".ids.txt' for writing");
  for (const auto& p : passages_) ids << p.id << '\n';
}

RetrievalIndex RetrievalIndex::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open index file '" + path + "'");
  char magic[4] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ProtocolError("'" + path + "' is not an index file (bad magic)");
  }
  const uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw ProtocolError("unsupported index version " + std::to_string(version));
  }
  RetrievalIndex index;
  index.dim_ = read_u32(in);
  const uint64_t count = read_u64(in);
  index.passages_.resize(count);
  for (auto& p : index.passages_) {
    p.id = read_str(in);
    p.text = read_str(in);
  }
  index.vectors_.assign(count, std::vector<double>(index.dim_));
  for (auto& v : index.vectors_) {
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  if (!in) throw ProtocolError("index file '" + path + "' is truncated");
  return index;
}

bool RetrievalIndex::operator==(const RetrievalIndex& other) const {
  if (dim_ != other.dim_ || passages_.size() != other.passages_.size()) return false;
  for (std::size_t i = 0; i < passages_.size(); ++i) {
    if (passages_[i].id != other.passages_[i].id ||
        passages_[i].text != other.passages_[i].text) {
      return false;
    }
  }
  return vectors_ == other.vectors_;
}

std::string assemble_rag_prompt(const std::string& question,
                                const std::vector<std::string>& contexts) {
  std::string prompt;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    prompt += "Context " + std::to_string(i + 1) + ": " + contexts[i] + "\n";
  }
  if (!contexts.empty()) prompt += "\n";
  prompt += "Question: " + question + "\nAnswer:";
  return prompt;
}

}  // namespace mia::retrieval
