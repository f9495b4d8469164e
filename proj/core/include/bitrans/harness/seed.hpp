#pragma once

#include <cstdint>
#include <string_view>

#include "bitrans/ndcore/rng.hpp"

namespace bitrans::harness {

/// Seed for the sub-stream `label` of a run; see nd::derive_seed for the
/// mixing function and its constants.
inline std::uint64_t split_seed(std::uint64_t master, std::string_view label) {
  return nd::derive_seed(master, label);
}

}  // namespace bitrans::harness
