#pragma once

#include <cstdint>
#include <random>

namespace morpho {

using Rng = std::mt19937_64;

// Independent stream for replicate `index` under `master_seed`.
inline Rng make_stream(std::uint64_t master_seed, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x6d6f7270u};
  return Rng(seq);
}

}  // namespace morpho
