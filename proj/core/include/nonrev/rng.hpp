#pragma once

#include <cstdint>

namespace nonrev {

/// One round of the splitmix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of the noise substream owned by `index` under `master`:
/// splitmix64(splitmix64(master) ^ splitmix64(index + 0x9e3779b97f4a7c15)).
/// Fixed for the lifetime of the library; chain results depend only on it.
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index);

}  // namespace nonrev
