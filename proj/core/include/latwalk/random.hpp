#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "latwalk/lattice.hpp"

namespace latwalk {

class WalkModel;

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
namespace philox {
using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

Counter block(Counter ctr, Key key);
}  // namespace philox

/// Sequential draws from one Philox stream. The stream is fully determined by
/// (seed, stream_id); draw i uses counter (i_lo, i_hi, id_lo, id_hi).
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        id_lo_(static_cast<std::uint32_t>(stream_id)),
        id_hi_(static_cast<std::uint32_t>(stream_id >> 32)) {}

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }
  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }
  /// Uniform on [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// `count` fresh bits (1 <= count <= 32), drawn from a 64-bit reservoir.
  std::uint32_t bits(int count) {
    if (bits_left_ < count) {
      reservoir_ = next_u64();
      bits_left_ = 64;
    }
    const auto out = static_cast<std::uint32_t>(reservoir_ & ((std::uint64_t{1} << count) - 1));
    reservoir_ >>= count;
    bits_left_ -= count;
    return out;
  }

 private:
  void refill() {
    buf_ = philox::block({static_cast<std::uint32_t>(draw_), static_cast<std::uint32_t>(draw_ >> 32), id_lo_, id_hi_},
                         key_);
    ++draw_;
    pos_ = 0;
  }

  philox::Key key_;
  std::uint32_t id_lo_, id_hi_;
  std::uint64_t draw_ = 0;
  philox::Counter buf_{};
  int pos_ = 4;
  std::uint64_t reservoir_ = 0;
  int bits_left_ = 0;
};

/// Draws steps of a walk. Dyadic laws (all masses multiples of 2^-b, b <= 12,
/// e.g. SRW with b = 2) use a direct lookup on b random bits; everything
/// else uses Walker's alias method with 32-bit thresholds.
class StepSampler {
 public:
  explicit StepSampler(const WalkModel& model);

  Point sample(PhiloxStream& rng) const {
    if (dyadic_bits_ > 0) return table_[rng.bits(dyadic_bits_)];
    const std::uint64_t u = rng.next_u64();
    const auto idx = static_cast<std::size_t>(((u >> 32) * n_) >> 32);
    return (u & 0xffffffffULL) < threshold_[idx] ? table_[idx] : table_[alias_[idx]];
  }

  bool dyadic() const { return dyadic_bits_ > 0; }

 private:
  int dyadic_bits_ = 0;
  std::uint64_t n_ = 0;
  std::vector<Point> table_;
  std::vector<std::uint64_t> threshold_;
  std::vector<std::uint32_t> alias_;
};

}  // namespace latwalk
