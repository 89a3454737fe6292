// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace subnyq {

using Rng = std::mt19937_64;

// Derives an independent, reproducible stream from a master seed, a stream
// name and up to two indices (e.g. SNR point and trial).
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::uint64_t a = 0, std::uint64_t b = 0) noexcept;

inline Rng make_stream(std::uint64_t master, std::string_view stream,
                       std::uint64_t a = 0, std::uint64_t b = 0) {
  return Rng(derive_seed(master, stream, a, b));
}

}  // namespace subnyq
