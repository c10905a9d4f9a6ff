#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gps/biguint.hpp"
#include "gps/datapath.hpp"

namespace gps::cost {

enum class CostArch { serial, parallel, hybrid, full_lut, fixed_key_lut };

std::string_view to_string(CostArch arch);
CostArch parse_cost_arch(std::string_view name);
CostArch from_datapath(datapath::Arch arch);

/// Memory of a two-operand multiplication table: 2^(c+s) * (c+s) bits.
BigUint lut_cost_variable(std::size_t c_bits, std::size_t s_bits);

/// Table indexed by the challenge only, the key being fixed: 2^c * (c+s) bits.
BigUint lut_cost_fixed_key(std::size_t c_bits, std::size_t s_bits);

struct MemoryAndAdders {
  BigUint memory_bits;
  std::uint64_t adder_count = 0;
  std::uint64_t adder_bits = 0;

  friend bool operator==(const MemoryAndAdders&, const MemoryAndAdders&) = default;
};

/// ceil(c/l) tables of 2^l entries, each |s|+l bits wide, summed by ceil(c/l)-1 adders.
MemoryAndAdders kcm_cost(std::size_t c_bits, std::size_t s_bits, std::size_t lut_bits);

/// One shared table of 2^l * (|s|+l) bits and a single accumulating adder.
MemoryAndAdders hybrid_cost(std::size_t c_bits, std::size_t s_bits, std::size_t lut_bits);

/// Registers holding n_V, s, r and y (one carry bit wider), plus one w-bit adder.
MemoryAndAdders serial_cost(std::size_t c_bits, std::size_t s_bits, std::size_t word_bits);

/// Linear area model y = slope*|s| + intercept in core cells.
struct AreaFit {
  CostArch arch;
  double slope = 0;
  double intercept = 0;  ///< least squares over the reference rows, one decimal
};

/// Reference rows of the published area/latency/throughput comparison for a 32-bit
/// challenge, 16-bit adder and 4-bit LUTs.
struct ReferenceRow {
  std::size_t s_bits;
  std::array<std::uint64_t, 3> area;           ///< serial, parallel, hybrid
  std::array<std::uint64_t, 3> latency;        ///< cycles
  std::array<double, 3> throughput;            ///< bytes per cycle as printed
};

std::span<const ReferenceRow> reference_table();

/// Serial area for adder widths 8/16/32 (rows) and secrets 128/256/512 (columns).
struct AdderAreaRow {
  std::size_t word_bits;
  std::array<std::uint64_t, 3> area;
};
std::span<const AdderAreaRow> reference_adder_table();

inline constexpr std::array<std::size_t, 3> kReferenceSecretSizes{128, 256, 512};

const AreaFit& area_fit(CostArch arch);

/// Throws ConfigError for architectures without a published area model.
double area_estimate(CostArch arch, std::size_t s_bits);

/// Closed-form latency (cycles). `width` is the serial word size or the LUT width.
std::uint64_t latency_estimate(CostArch arch, std::size_t s_bits, std::size_t c_bits, std::size_t width);

struct CostReport {
  CostArch arch;
  std::size_t s_bits = 0;
  std::size_t c_bits = 0;
  BigUint memory_bits;
  std::uint64_t adder_count = 0;
  std::uint64_t adder_bits = 0;
  std::optional<std::uint64_t> latency_cycles;
  std::optional<datapath::Rational> throughput_bytes_per_cycle;
  std::optional<double> area_estimate_cells;
};

/// `width` is the serial word size for serial and the LUT width for the KCM variants.
CostReport cost_report(CostArch arch, std::size_t s_bits, std::size_t c_bits, std::size_t width);

enum class Format { text, kv };

Format parse_format(std::string_view name);

struct Table2Options {
  std::size_t c_bits = 32;
  std::size_t word_bits = 16;
  std::size_t lut_bits = 4;
  std::vector<std::size_t> secret_sizes{kReferenceSecretSizes.begin(), kReferenceSecretSizes.end()};
};

/// Area / latency / throughput blocks for the three architectures, with the reference
/// values and area-fit residuals alongside.
void render_table2(std::ostream& out, Format fmt, const Table2Options& opts = {});

/// Serial latency and register bits for 8/16/32-bit adders, quoting the reference areas.
void render_adder_table(std::ostream& out, Format fmt, std::size_t c_bits = 32);

/// Coupon footprint note for `count` stored coupons.
std::string coupon_storage_note(std::uint64_t count);

/// One `--check` finding.
struct Drift {
  std::string what;
  std::string expected;
  std::string actual;
};

/// Compares the reproduced latency, throughput and area figures against their
/// committed expectations. Empty when nothing drifted.
std::vector<Drift> check_reproduction();

}  // namespace gps::cost
