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

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mia {

inline constexpr std::string_view kVersion = "0.1.0";

// Error hierarchy. Every throwing operation in the library uses one of
// these; the CLI maps ConfigError/InputError to exit code 1 and the rest
// to exit code 2.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration (bad parameter ranges, missing endpoints, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input data (bad dataset line, mismatched texts, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

// The endpoint cannot do what was asked of it (e.g. no echo scoring,
// no token moments). `feature()` names the missing capability.
class CapabilityError : public Error {
 public:
  CapabilityError(const std::string& feature, const std::string& msg)
      : Error(msg), feature_(feature) {}
  const std::string& feature() const { return feature_; }

 private:
  std::string feature_;
};

// A network-level failure after `attempts()` tries. Retryable by the caller.
class TransportError : public Error {
 public:
  TransportError(int attempts, const std::string& msg)
      : Error(msg), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

// A well-formed transport exchange carrying an invalid payload.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// FNV-1a. Used for config fingerprints and for fanning a master seed out
// into independent per-sample streams; not a cryptographic hash.
inline uint64_t fnv1a64(std::string_view data, uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t fnv1a64_combine(uint64_t h, std::string_view data) {
  return fnv1a64(data, h == 0 ? 0xcbf29ce484222325ULL : h);
}

// Derives a per-purpose seed from a master seed and a string key. Stable
// across platforms and runs, so parallel execution order never changes
// which stream a given sample sees.
inline uint64_t derive_seed(uint64_t master, std::string_view key) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (int i = 0; i < 8; ++i) {
    h ^= (master >> (8 * i)) & 0xff;
    h *= 0x100000001b3ULL;
  }
  return fnv1a64(key, h);
}

}  // namespace mia
