#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gps/biguint.hpp"
#include "gps/params.hpp"

/// Bit-accurate, cycle-accounting models of the prover response y = r + n_v*s.
///
/// None of these models multiplies big integers: products come from shifted additions
/// (serial) or from tables built by repeated addition (KCM).
namespace gps::datapath {

enum class Arch { serial, parallel, hybrid };

std::string_view to_string(Arch arch);
/// Throws ConfigError.
Arch parse_arch(std::string_view name);

struct SerialConfig {
  std::size_t word_bits = 16;
  bool record_trace = true;

  void validate() const;
  friend bool operator==(const SerialConfig&, const SerialConfig&) = default;
};

struct KcmConfig {
  std::size_t lut_bits = 4;
  /// Hybrid only: split the final r addition into word_bits chunks, one per cycle.
  std::optional<std::size_t> chunked_final_add;
  bool record_trace = true;

  void validate() const;
  friend bool operator==(const KcmConfig&, const KcmConfig&) = default;
};

struct ArchConfig {
  SerialConfig serial;
  KcmConfig kcm;
  friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

enum class StepKind { add, skip, lookup, tree_add, accumulate, final_add };

std::string_view to_string(StepKind kind);

/// One datapath step. `digit` is the challenge bit/digit index being processed and
/// `chunk` the word index for chunked adds (or the tree slot for adder-tree steps).
/// For word-wide adds `result` is the word written back; for full-width steps it is
/// the whole accumulator.
struct TraceStep {
  std::uint64_t cycle = 0;
  StepKind kind = StepKind::add;
  std::size_t digit = 0;
  std::size_t chunk = 0;
  BigUint operand;
  BigUint result;
  unsigned carry_in = 0;
  unsigned carry_out = 0;
};

struct DatapathResult {
  BigUint value;
  /// Cycles counted by the structural model; equals the number of distinct trace cycles.
  std::uint64_t step_cycles = 0;
  /// Calibrated control/pipeline overhead.
  std::uint64_t overhead_cycles = 0;
  std::vector<TraceStep> trace;

  std::uint64_t cycles() const { return step_cycles + overhead_cycles; }
};

/// One line per step: `<cycle>:<step-kind>:<operand-hex>:<acc-hex>`.
void dump_trace(std::ostream& out, const std::vector<TraceStep>& trace);

/// Throws ConfigError when s, n_v or r exceed their widths.
void check_operands(const Widths& widths, const BigUint& s, const BigUint& n_v, const BigUint& r);

// ---- serial shift-and-add ---------------------------------------------------

/// Challenge bits MSB first; per bit, the accumulator is shifted left and each secret
/// word is added (or a zero word, when the bit is clear) in one cycle. Then r is added
/// word by word through the same adder.
DatapathResult serial_respond(const SerialConfig& cfg, const BigUint& s, const BigUint& n_v,
                              const BigUint& r, const Widths& widths);

/// Recomputes a serial trace bit by bit with a ripple-carry adder and checks every
/// recorded word and carry. Returns the reconstructed value, or nullopt on mismatch.
std::optional<BigUint> replay_serial_trace(const std::vector<TraceStep>& trace, std::size_t word_bits,
                                           const Widths& widths);

// ---- KCM --------------------------------------------------------------------

/// Multiples of a constant: entries[d] = d * constant for d < radix.
class KcmTable {
 public:
  /// Radix 2^lut_bits, the hardware form.
  static KcmTable binary(const BigUint& constant, std::size_t lut_bits);
  /// Any radix >= 2; radix 10 reproduces the decimal walk-through of the method.
  static KcmTable with_radix(const BigUint& constant, unsigned radix);

  const BigUint& constant() const { return constant_; }
  unsigned radix() const { return radix_; }
  /// ell for binary tables, 0 otherwise.
  std::size_t lut_bits() const { return lut_bits_; }
  const BigUint& operator[](std::size_t digit) const { return entries_.at(digit); }
  std::size_t size() const { return entries_.size(); }
  /// Width of each stored entry: |constant| + ell (binary tables).
  std::size_t entry_bits(std::size_t constant_bits) const { return constant_bits + lut_bits_; }

 private:
  KcmTable(BigUint constant, unsigned radix, std::size_t lut_bits);

  BigUint constant_;
  unsigned radix_;
  std::size_t lut_bits_;
  std::vector<BigUint> entries_;
};

/// All rows of a parallel KCM hold identical tables, so one table is shared.
struct KcmTables {
  std::shared_ptr<const KcmTable> table;
  std::size_t count = 0;
};

KcmTables build_kcm_tables(const BigUint& s, std::size_t lut_bits, std::size_t c_bits);

/// Digits of `value` in base 2^lut_bits, most significant first, zero-padded at the
/// high end to ceil(c_bits/lut_bits) digits.
std::vector<unsigned> split_digits(const BigUint& value, std::size_t lut_bits, std::size_t c_bits);

struct PartialProduct {
  unsigned digit = 0;
  std::size_t position = 0;  ///< power of the radix
  BigUint entry;             ///< table[digit]
  BigUint shifted;           ///< entry * radix^position
};

struct KcmDecomposition {
  std::vector<PartialProduct> partials;  ///< most significant digit first
  BigUint product;
};

/// Product constant * operand as a sum of positioned table entries, for any radix.
KcmDecomposition kcm_decompose(const KcmTable& table, const BigUint& operand);

/// Parallel KCM: one lookup per digit in the first cycle, a pairwise adder tree (one
/// level per cycle) and a final addition of r.
DatapathResult kcm_parallel_respond(const KcmConfig& cfg, const KcmTables& tables, const BigUint& n_v,
                                    const BigUint& r, const Widths& widths);

/// Hybrid KCM: MSD first, acc = (acc << ell) + table[digit] each cycle, then r is added
/// by the same adder.
DatapathResult kcm_hybrid_respond(const KcmConfig& cfg, const KcmTable& table, const BigUint& n_v,
                                  const BigUint& r, const Widths& widths);

// ---- dispatch and streaming -------------------------------------------------

/// Precomputed per-key state for one architecture.
class Responder {
 public:
  Responder(Arch arch, ArchConfig cfg, const BigUint& s, const Widths& widths);

  DatapathResult respond(const BigUint& n_v, const BigUint& r) const;

  Arch arch() const { return arch_; }
  const ArchConfig& config() const { return cfg_; }

 private:
  Arch arch_;
  ArchConfig cfg_;
  BigUint s_;
  Widths widths_;
  KcmTables tables_;
};

/// Step cycles the structural model will take, without running it.
std::uint64_t structural_steps(Arch arch, const Widths& widths, const ArchConfig& cfg);

/// Calibrated latency of one response.
std::uint64_t calibrated_latency(Arch arch, const Widths& widths, const ArchConfig& cfg);

/// Cycles to produce `count` back-to-back responses. Parallel is pipelined (one new
/// result per cycle after the first); serial and hybrid run them one after the other.
std::uint64_t stream_cycles(Arch arch, const Widths& widths, const ArchConfig& cfg, std::uint64_t count);

struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

Rational make_rational(std::uint64_t num, std::uint64_t den);

/// Bytes of response produced per cycle in streaming mode, with (s+c+80)/8 output
/// bytes per response.
Rational stream_throughput(Arch arch, const Widths& widths, const ArchConfig& cfg);

}  // namespace gps::datapath
