#pragma once

#include <cstdint>
#include <vector>

namespace evflow::detail {

// Exact 1D area-resampling weights from n source cells to m <= n target
// cells. On a lattice of n*m units, target j spans [j*n, (j+1)*n) and source i
// spans [i*m, (i+1)*m); the weight is the integer overlap length. Weights
// for one target sum to n.
struct AreaTap {
  std::uint32_t src;
  std::uint32_t weight;
};

inline std::vector<std::vector<AreaTap>> area_weights(std::uint32_t n, std::uint32_t m) {
  std::vector<std::vector<AreaTap>> taps(m);
  const std::uint64_t nn = n;
  const std::uint64_t mm = m;
  for (std::uint64_t j = 0; j < mm; ++j) {
    const std::uint64_t lo = j * nn;
    const std::uint64_t hi = lo + nn;
    for (std::uint64_t i = lo / mm; i < nn && i * mm < hi; ++i) {
      const std::uint64_t s_lo = i * mm;
      const std::uint64_t s_hi = s_lo + mm;
      const std::uint64_t overlap = (hi < s_hi ? hi : s_hi) - (lo > s_lo ? lo : s_lo);
      if (overlap > 0) taps[j].push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(overlap)});
    }
  }
  return taps;
}

}  // namespace evflow::detail
