#pragma once

#include <cstdint>
#include <string_view>

namespace pbm::util {

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a(std::string_view s);

/// Independent stream seed for a named sub-task of a run.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag);

/// Uniform double in [0, 1) from the top 53 bits.
inline double unit_double(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

}  // namespace pbm::util
