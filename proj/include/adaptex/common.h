/*
 * Copyright 2026 The Adaptex Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef ADAPTEX_COMMON_H_
#define ADAPTEX_COMMON_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace adaptex {

// Maps onto the CLI exit codes: usage -> 1, data -> 2, internal -> 3.
enum class ErrorKind { kUsage = 1, kData = 2, kInternal = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void ThrowData(const std::string& what) {
  throw Error(ErrorKind::kData, what);
}
[[noreturn]] inline void ThrowUsage(const std::string& what) {
  throw Error(ErrorKind::kUsage, what);
}

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent seed streams.
inline std::uint64_t MixSeed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t a,
                                std::uint64_t b = 0) {
  return MixSeed(MixSeed(MixSeed(seed) ^ a) ^ (b + 0x632be59bd9b4e019ULL));
}

inline double NormalCdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace adaptex

#endif  // ADAPTEX_COMMON_H_
