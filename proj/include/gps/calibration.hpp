#pragma once

#include <cstddef>
#include <cstdint>

/// Fixed overheads fitted to the published latency figures (32-bit challenge, 16-bit
/// adder, 4-bit LUT). The structural simulators count algorithmic steps; these terms
/// account for control and pipeline registers the step count does not see.
namespace gps::calibration {

inline constexpr std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

/// Control cycles of the serial datapath on top of its word-add cycles.
inline constexpr std::uint64_t kSerialControlOverhead = 68;

/// Pipeline depth of the parallel KCM datapath.
inline constexpr std::uint64_t parallel_pipeline_depth(std::size_t s_bits) {
  return ceil_div(s_bits, 32) + 4;
}

/// Cycles the hybrid datapath spends beyond its lookup-accumulate and final-add steps.
inline constexpr std::uint64_t hybrid_overhead(std::size_t s_bits) {
  return 3 * ceil_div(s_bits, 16) + 15;
}

/// 320 us at 8 MHz.
inline constexpr std::uint64_t kResponseBudgetCycles = 2560;

}  // namespace gps::calibration
