#pragma once

#include <cstdint>
#include <cmath>

namespace capsim {

// Philox4x32-10 counter-based generator (Salmon, Moraes, Dror, Shaw 2011).
// A stream is fully identified by (key, subsequence): the key carries the
// user seed, the subsequence selects an independent stream (one per
// replicate), and the block position advances as values are drawn.  Any
// draw can be regenerated from those three integers alone, so replicates
// are reproducible no matter how work is split across threads.
class Philox {
 public:
  using result_type = std::uint64_t;

  Philox() : Philox(0, 0) {}

  Philox(std::uint64_t key, std::uint64_t subsequence) {
    key_[0] = static_cast<std::uint32_t>(key);
    key_[1] = static_cast<std::uint32_t>(key >> 32);
    ctr_[0] = 0;
    ctr_[1] = 0;
    ctr_[2] = static_cast<std::uint32_t>(subsequence);
    ctr_[3] = static_cast<std::uint32_t>(subsequence >> 32);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~std::uint64_t{0}; }

  result_type operator()() {
    if (next_ == 2) refill();
    std::uint64_t lo = buf_[2 * next_];
    std::uint64_t hi = buf_[2 * next_ + 1];
    ++next_;
    return lo | (hi << 32);
  }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; safe under log().
  double uniform_pos() { return 1.0 - uniform(); }

  // Standard normal via Box-Muller; two uniforms per call, no cached spare,
  // so the draw count per call is fixed.
  double normal() {
    double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    double theta = 6.283185307179586476925286766559 * uniform();
    return r * std::cos(theta);
  }

  // One 4x32 block for the given counter words under the current key.
  // Exposed for the known-answer tests.
  void block(const std::uint32_t ctr_in[4], std::uint32_t out[4]) const {
    std::uint32_t c[4] = {ctr_in[0], ctr_in[1], ctr_in[2], ctr_in[3]};
    std::uint32_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
      std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
      std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      std::uint32_t n0 = hi1 ^ c[1] ^ k0;
      std::uint32_t n1 = lo1;
      std::uint32_t n2 = hi0 ^ c[3] ^ k1;
      std::uint32_t n3 = lo0;
      c[0] = n0;
      c[1] = n1;
      c[2] = n2;
      c[3] = n3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    out[0] = c[0];
    out[1] = c[1];
    out[2] = c[2];
    out[3] = c[3];
  }

 private:
  void refill() {
    block(ctr_, buf_);
    next_ = 0;
    if (++ctr_[0] == 0) ++ctr_[1];  // 64-bit position, never wraps in practice
  }

  std::uint32_t key_[2];
  std::uint32_t ctr_[4];
  std::uint32_t buf_[4] = {0, 0, 0, 0};
  int next_ = 2;
};

// Collapses (master seed, a, b) into one stream seed by encrypting the pair
// under the master key.  Used to hand every replicate of every experiment
// cell its own independent stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b) {
  Philox g(master, 0x5eedc0de5eedc0deULL);
  std::uint32_t ctr[4] = {
      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  std::uint32_t out[4];
  g.block(ctr, out);
  return out[0] | (std::uint64_t{out[1]} << 32);
}

}  // namespace capsim
