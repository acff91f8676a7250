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

#include <cstddef>
#include <string>
#include <vector>

namespace mia::retrieval {

// Text to unit vector. Implementations must be deterministic: the same
// text always embeds to the same vector.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<double> embed(const std::string& text) const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::string name() const = 0;
};

// Offline provider: tokens hashed into signed buckets, L2-normalized.
// No model weights, fully reproducible. Texts whose buckets cancel to a
// zero vector fall back to a single deterministic indicator bucket.
class HashedBowEmbedder : public Embedder {
 public:
  explicit HashedBowEmbedder(std::size_t dim = 256);
  std::vector<double> embed(const std::string& text) const override;
  std::size_t dimension() const override { return dim_; }
  std::string name() const override;

 private:
  std::size_t dim_;
};

double cosine(const std::vector<double>& a, const std::vector<double>& b);

struct Passage {
  std::string id;
  std::string text;
};

struct Hit {
  std::string id;
  double similarity;
  std::size_t index;  // position in the stored passage order
};

// Immutable passage store with precomputed unit embeddings. Retrieval is
// an exhaustive scan; corpora at harness scale are small and exactness
// keeps the oracle tests simple.
class RetrievalIndex {
 public:
  static RetrievalIndex build(const Embedder& embedder, const std::vector<Passage>& passages);

  // Exactly min(k, size) hits, cosine descending, ties broken by
  // ascending passage index. The query must be unit-norm.
  std::vector<Hit> retrieve_topk(const std::vector<double>& query, std::size_t k) const;

  // Versioned binary file {magic, version, dim, count, passages, vectors}
  // plus a plain-text ".ids.txt" sidecar. Round-trips are bit-identical.
  void save(const std::string& path) const;
  static RetrievalIndex load(const std::string& path);

  std::size_t size() const { return passages_.size(); }
  std::size_t dimension() const { return dim_; }
  const std::vector<Passage>& passages() const { return passages_; }
  const std::vector<double>& vector_at(std::size_t i) const { return vectors_[i]; }

  bool operator==(const RetrievalIndex& other) const;

 private:
  std::size_t dim_ = 0;
  std::vector<Passage> passages_;
  std::vector<std::vector<double>> vectors_;
};

// Numbered context block in retrieval order, then the question. The
// template is fixed so prompts are byte-stable across runs.
std::string assemble_rag_prompt(const std::string& question,
                                const std::vector<std::string>& contexts);

}  // namespace mia::retrieval
