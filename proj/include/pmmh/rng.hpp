// Copyright 2026 The pmmh Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>

#include "pmmh/common.hpp"

namespace pmmh {

/// Philox4x32-10 counter-based generator.
///
/// Key = 64-bit seed (words key[0] = low 32 bits, key[1] = high 32 bits).
/// Counter = 128 bits: words [0],[1] hold a 64-bit position that increments
/// per invocation, words [2],[3] hold a 64-bit stream id. Distinct stream
/// ids under the same seed give statistically independent streams, which is
/// how chains, replicas and kernel roles get decoupled randomness.
struct Philox4x32 {
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static std::array<std::uint32_t, 4> block(
      std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t(kMul0) * ctr[0];
      const std::uint64_t p1 = std::uint64_t(kMul1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }
};

/// One random stream: a (seed, stream id) pair plus a position counter.
/// Each Philox invocation yields 128 bits, consumed as two 64-bit words.
/// All distributional transforms are fixed (53-bit uniforms, Box-Muller
/// normals, fixed-point index scaling), so a (seed, stream, position)
/// triple reproduces the same variate on any platform with IEEE doubles.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        stream_id_(stream_id) {}

  std::uint64_t next_u64() {
    if (buffered_) {
      buffered_ = false;
      return buffer_;
    }
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(position_),
        static_cast<std::uint32_t>(position_ >> 32),
        static_cast<std::uint32_t>(stream_id_),
        static_cast<std::uint32_t>(stream_id_ >> 32)};
    const auto out = Philox4x32::block(ctr, key_);
    ++position_;
    buffer_ = (std::uint64_t(out[3]) << 32) | out[2];
    buffered_ = true;
    return (std::uint64_t(out[1]) << 32) | out[0];
  }

  /// Uniform on [0, 1): 53 high bits scaled by 2^-53.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller. Pairs are generated together and the
  /// second is cached, so normals are consumed in a fixed order per stream.
  double normal() {
    if (have_spare_normal_) {
      have_spare_normal_ = false;
      return spare_normal_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 =
        (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_normal_ = r * std::sin(angle);
    have_spare_normal_ = true;
    return r * std::cos(angle);
  }

  Vector normal_vector(Eigen::Index dim) {
    Vector z(dim);
    for (Eigen::Index i = 0; i < dim; ++i) z[i] = normal();
    return z;
  }

  /// Uniform index in {0, ..., n-1} by 128-bit fixed-point scaling.
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw ContractViolation("uniform_index: n must be positive");
    const unsigned __int128 wide =
        static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::size_t>(wide >> 64);
  }

  std::uint64_t seed() const {
    return std::uint64_t(key_[0]) | (std::uint64_t(key_[1]) << 32);
  }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_id_ = 0;
  std::uint64_t position_ = 0;
  std::uint64_t buffer_ = 0;
  bool buffered_ = false;
  double spare_normal_ = 0.0;
  bool have_spare_normal_ = false;
};

/// Fixed stream-id roles. A chain with chain index c uses stream ids
/// c * kStreamsPerChain + role, so chains never share a stream.
enum StreamRole : std::uint64_t {
  kThetaStream = 0,
  kBlockStream = 1,
  kAcceptStream = 2,
  kInitStream = 3,
};
inline constexpr std::uint64_t kStreamsPerChain = 8;

/// Streams a single chain needs. Keeping the theta-proposal, block and
/// accept draws on separate streams means kernels that differ only in how
/// many blocks they draw (marginal vs MCWM) still see identical theta
/// proposals and accept uniforms.
struct ChainRng {
  RngStream theta;
  RngStream block;
  RngStream accept;
  RngStream init;

  ChainRng(std::uint64_t seed, std::uint64_t chain_index = 0)
      : theta(seed, chain_index * kStreamsPerChain + kThetaStream),
        block(seed, chain_index * kStreamsPerChain + kBlockStream),
        accept(seed, chain_index * kStreamsPerChain + kAcceptStream),
        init(seed, chain_index * kStreamsPerChain + kInitStream) {}
};

/// Pure function of (master seed, index) used to seed replicas, grid
/// entries and generated datasets: one Philox block keyed by the master
/// seed with the index in the counter's stream words.
inline std::uint64_t derive_seed(std::uint64_t master_seed,
                                 std::uint64_t index) {
  const std::array<std::uint32_t, 4> ctr = {
      0x5eed5eedu, 0u, static_cast<std::uint32_t>(index),
      static_cast<std::uint32_t>(index >> 32)};
  const std::array<std::uint32_t, 2> key = {
      static_cast<std::uint32_t>(master_seed),
      static_cast<std::uint32_t>(master_seed >> 32)};
  const auto out = Philox4x32::block(ctr, key);
  return (std::uint64_t(out[1]) << 32) | out[0];
}

}  // namespace pmmh
