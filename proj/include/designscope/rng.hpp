// Copyright 2026 The DesignScope Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>

namespace designscope {

/// SplitMix64 finalizer; used to decorrelate (seed, index) pairs.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Deterministic random stream keyed by (master_seed, stream_index).
///
/// Identical keys give bit-identical sequences. `substream(k)` derives a child
/// keyed only by this stream's key and `k`, never by how many numbers have been
/// drawn, so work split across threads by index stays reproducible.
class RngStream {
 public:
  using engine_type = std::mt19937_64;

  explicit RngStream(std::uint64_t master_seed, std::uint64_t stream_index = 0)
      : master_seed_(master_seed),
        stream_index_(stream_index),
        engine_(splitmix64(master_seed ^ splitmix64(stream_index + 0x632BE59BD9B4E019ULL))) {}

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_index() const noexcept { return stream_index_; }

  RngStream substream(std::uint64_t k) const {
    return RngStream(splitmix64(master_seed_ * 0xD1B54A32D192ED03ULL + stream_index_), k);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

  /// Uniform on {0, ..., n-1}.
  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Number of failures before the first success of a Bernoulli(p) sequence.
  std::uint64_t geometric(double p) {
    return std::geometric_distribution<std::uint64_t>(p)(engine_);
  }

  engine_type& engine() noexcept { return engine_; }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  engine_type engine_;
};

}  // namespace designscope
