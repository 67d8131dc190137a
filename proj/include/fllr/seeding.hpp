#pragma once

#include <cstdint>
#include <initializer_list>

namespace fllr {

/// Counter-based substream seed: splitmix64 folded over `path`. Every random
/// stream in the library is seeded from (master seed, stream tag, indices) so
/// parallel and sequential runs draw identical numbers.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// Stream tags.
enum class Stream : std::uint64_t { data = 1, split = 2, tuning = 3, bootstrap = 4 };

inline std::uint64_t tag(Stream s) { return static_cast<std::uint64_t>(s); }

}  // namespace fllr
