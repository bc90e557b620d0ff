#pragma once

#include <array>
#include <cstdint>

namespace mdslab {

/// Address of one block of random bits. Every variate in the library is a
/// pure function of its key, so replications can run in any order on any
/// number of threads and still reproduce bit for bit.
struct StreamKey {
  std::uint64_t master_seed = 0;
  std::uint64_t substream_id = 0; // replication index
  std::uint64_t step = 0;

  friend bool operator==(const StreamKey &, const StreamKey &) = default;
};

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

/// Philox4x32-10 block function (Salmon et al., Random123).
Philox4x32Counter philox4x32(Philox4x32Counter ctr, Philox4x32Key key) noexcept;

/// Four 32-bit words addressed by the key.
Philox4x32Counter random_block(const StreamKey &key) noexcept;

/// Uniform on the open interval (0,1): the midpoint of one of 2^52 equal
/// cells, built from two 32-bit words.
inline double open_uniform(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits =
      ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

/// Convenience view over one substream: block(k) is random_block of
/// {seed, substream, k}.
class Substream {
public:
  Substream(std::uint64_t master_seed, std::uint64_t substream_id) noexcept
      : seed_(master_seed), id_(substream_id) {}

  Philox4x32Counter block(std::uint64_t step) const noexcept {
    return random_block({seed_, id_, step});
  }
  std::uint64_t master_seed() const noexcept { return seed_; }
  std::uint64_t substream_id() const noexcept { return id_; }

private:
  std::uint64_t seed_;
  std::uint64_t id_;
};

} // namespace mdslab
