#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace roomclear {

/// Discrete state used by the tabular learners.
using StateKey = std::vector<std::int32_t>;

struct StateKeyHash
{
  std::size_t operator()(StateKey const &key) const noexcept
  {
    std::uint64_t h = 1469598103934665603ull;
    for (auto v : key) {
      h ^= static_cast<std::uint32_t>(v);
      h *= 1099511628211ull;
      h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
  }
};

/// true = action may be taken.
using ActionMask = Eigen::Array<bool, Eigen::Dynamic, 1>;

inline ActionMask all_actions(int count) { return ActionMask::Constant(count, true); }

} // namespace roomclear
