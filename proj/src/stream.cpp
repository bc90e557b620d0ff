#include "mdslab/stream.hpp"

namespace mdslab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t &hi,
                    std::uint32_t &lo) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

} // namespace

Philox4x32Counter philox4x32(Philox4x32Counter ctr, Philox4x32Key key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

Philox4x32Counter random_block(const StreamKey &key) noexcept {
  const Philox4x32Counter ctr{static_cast<std::uint32_t>(key.step),
                              static_cast<std::uint32_t>(key.step >> 32),
                              static_cast<std::uint32_t>(key.substream_id),
                              static_cast<std::uint32_t>(key.substream_id >> 32)};
  const Philox4x32Key k{static_cast<std::uint32_t>(key.master_seed),
                        static_cast<std::uint32_t>(key.master_seed >> 32)};
  return philox4x32(ctr, k);
}

} // namespace mdslab
