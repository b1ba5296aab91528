#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace goodwin {

// Philox4x32-10 counter-based block cipher (Salmon et al., SC'11).  Output is
// a pure function of (counter, key): draws are addressable by index, streams
// never share state, and parallel consumers need no locking.
struct Philox4x32 {
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static Block encrypt(Block ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round != 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t prod0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t prod1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(prod1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(prod1),
             static_cast<std::uint32_t>(prod0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(prod0)};
    }
    return ctr;
  }
};

// Addressable stream of standard normal draws for one simulated path.
// Counter layout: {draw/4, step, path_lo, path_hi}; key: the 64-bit seed
// split into words.  Each cipher block yields four uniforms, turned into
// four normals by two Box-Muller pairs; the draw index selects the lane.
// Because a draw is a pure function of (seed, path, step, draw), ensembles
// reproduce bit-for-bit under any worker count, and growing an ensemble
// never reshuffles the streams of already-assigned path indices.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t path_index)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        path_lo_(static_cast<std::uint32_t>(path_index)),
        path_hi_(static_cast<std::uint32_t>(path_index >> 32)) {}

  double normal(std::uint32_t step, std::uint32_t draw) const {
    const Philox4x32::Block out =
        Philox4x32::encrypt({draw / 4, step, path_lo_, path_hi_}, key_);
    const int lane = static_cast<int>(draw % 4);
    const double u1 = to_unit(out[lane < 2 ? 0 : 2]);
    const double u2 = to_unit(out[lane < 2 ? 1 : 3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return radius * (lane % 2 == 0 ? std::cos(angle) : std::sin(angle));
  }

 private:
  // offset keeps the uniform strictly inside (0,1) so the log stays finite
  static double to_unit(std::uint32_t bits) { return (bits + 0.5) * 0x1p-32; }

  Philox4x32::Key key_;
  std::uint32_t path_lo_;
  std::uint32_t path_hi_;
};

}  // namespace goodwin
