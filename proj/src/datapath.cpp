#include "gps/datapath.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "gps/calibration.hpp"
#include "gps/errors.hpp"

namespace gps::datapath {

using calibration::ceil_div;

namespace {

using Words = std::vector<std::uint64_t>;

Words to_words(const BigUint& v, std::size_t w, std::size_t count) {
  const BigUint mask = pow2(w) - 1;
  Words out(count, 0);
  BigUint rest = v;
  for (std::size_t k = 0; k < count && !rest.is_zero(); ++k) {
    out[k] = static_cast<std::uint64_t>(rest & mask);
    rest >>= w;
  }
  return out;
}

BigUint from_words(const Words& words, std::size_t w) {
  BigUint v = 0;
  for (auto it = words.rbegin(); it != words.rend(); ++it) {
    v <<= w;
    v |= *it;
  }
  return v;
}

// Shift register: whole accumulator moves one bit left, no cycle cost.
void shift_left_one(Words& acc, std::size_t w) {
  const std::uint64_t mask = (std::uint64_t{1} << w) - 1;
  std::uint64_t in = 0;
  for (auto& word : acc) {
    const std::uint64_t out = word >> (w - 1);
    word = ((word << 1) | in) & mask;
    in = out;
  }
}

void propagate_carry(Words& acc, std::size_t from, std::uint64_t carry, std::size_t w) {
  const std::uint64_t mask = (std::uint64_t{1} << w) - 1;
  for (std::size_t k = from; carry != 0 && k < acc.size(); ++k) {
    const std::uint64_t sum = acc[k] + carry;
    acc[k] = sum & mask;
    carry = sum >> w;
  }
}

std::size_t ceil_log2(std::size_t v) {
  std::size_t levels = 0;
  while ((std::size_t{1} << levels) < v) ++levels;
  return levels;
}

// x * k for a small k by shifted additions.
BigUint times_small(const BigUint& x, unsigned k) {
  BigUint out = 0;
  for (unsigned bit = 0; (k >> bit) != 0; ++bit) {
    if ((k >> bit) & 1u) out += x << bit;
  }
  return out;
}

bool is_pow2(unsigned v) { return v != 0 && (v & (v - 1)) == 0; }

std::size_t log2_exact(unsigned v) {
  std::size_t l = 0;
  while ((1u << l) < v) ++l;
  return l;
}

}  // namespace

std::string_view to_string(Arch arch) {
  switch (arch) {
    case Arch::serial: return "serial";
    case Arch::parallel: return "parallel";
    case Arch::hybrid: return "hybrid";
  }
  return "?";
}

Arch parse_arch(std::string_view name) {
  if (name == "serial") return Arch::serial;
  if (name == "parallel") return Arch::parallel;
  if (name == "hybrid") return Arch::hybrid;
  throw ConfigError("unknown architecture '" + std::string(name) + "'");
}

std::string_view to_string(StepKind kind) {
  switch (kind) {
    case StepKind::add: return "add";
    case StepKind::skip: return "skip";
    case StepKind::lookup: return "lookup";
    case StepKind::tree_add: return "tree";
    case StepKind::accumulate: return "acc";
    case StepKind::final_add: return "final";
  }
  return "?";
}

void SerialConfig::validate() const {
  if (word_bits != 8 && word_bits != 16 && word_bits != 32) {
    throw ConfigError("serial word size must be 8, 16 or 32 bits");
  }
}

void KcmConfig::validate() const {
  if (lut_bits < 2 || lut_bits > 8) throw ConfigError("LUT width must be in [2, 8]");
  if (chunked_final_add) {
    const auto w = *chunked_final_add;
    if (w != 8 && w != 16 && w != 32) throw ConfigError("chunked final add width must be 8, 16 or 32");
  }
}

void dump_trace(std::ostream& out, const std::vector<TraceStep>& trace) {
  for (const auto& st : trace) {
    out << st.cycle << ':' << to_string(st.kind) << ':' << to_hex(st.operand) << ':' << to_hex(st.result)
        << '\n';
  }
}

void check_operands(const Widths& widths, const BigUint& s, const BigUint& n_v, const BigUint& r) {
  if (widths.s_bits == 0 || widths.c_bits == 0) throw ConfigError("operand widths must be positive");
  if (widths.d_bits < widths.s_bits + widths.c_bits) throw ConfigError("d_bits must cover s_bits + c_bits");
  if (s < 0 || bit_length(s) > widths.s_bits) throw ConfigError("secret wider than s_bits");
  if (n_v < 0 || bit_length(n_v) > widths.c_bits) throw ConfigError("challenge wider than c_bits");
  if (r < 0 || bit_length(r) > widths.d_bits) throw ConfigError("commitment wider than d_bits");
}

// ---- serial -----------------------------------------------------------------

DatapathResult serial_respond(const SerialConfig& cfg, const BigUint& s, const BigUint& n_v,
                              const BigUint& r, const Widths& widths) {
  cfg.validate();
  check_operands(widths, s, n_v, r);

  const std::size_t w = cfg.word_bits;
  const std::uint64_t mask = (std::uint64_t{1} << w) - 1;
  const std::size_t s_words = ceil_div(widths.s_bits, w);
  const std::size_t d_words = ceil_div(widths.d_bits, w);

  const Words secret = to_words(s, w, s_words);
  const Words commitment = to_words(r, w, d_words);
  Words acc(d_words + 1, 0);

  DatapathResult res;
  std::uint64_t cycle = 0;
  auto record = [&](StepKind kind, std::size_t digit, std::size_t chunk, std::uint64_t op, std::uint64_t word,
                    unsigned cin, unsigned cout) {
    if (cfg.record_trace) res.trace.push_back({cycle, kind, digit, chunk, op, word, cin, cout});
    ++cycle;
  };

  for (std::size_t j = widths.c_bits; j-- > 0;) {
    shift_left_one(acc, w);
    const bool bit = test_bit(n_v, j);
    std::uint64_t carry = 0;
    for (std::size_t k = 0; k < s_words; ++k) {
      const std::uint64_t op = bit ? secret[k] : 0;
      const std::uint64_t sum = acc[k] + op + carry;
      const auto cin = static_cast<unsigned>(carry);
      acc[k] = sum & mask;
      carry = sum >> w;
      record(bit ? StepKind::add : StepKind::skip, j, k, op, acc[k], cin, static_cast<unsigned>(carry));
    }
    propagate_carry(acc, s_words, carry, w);
  }

  std::uint64_t carry = 0;
  for (std::size_t k = 0; k < d_words; ++k) {
    const std::uint64_t sum = acc[k] + commitment[k] + carry;
    const auto cin = static_cast<unsigned>(carry);
    acc[k] = sum & mask;
    carry = sum >> w;
    record(StepKind::final_add, 0, k, commitment[k], acc[k], cin, static_cast<unsigned>(carry));
  }
  propagate_carry(acc, d_words, carry, w);

  res.value = from_words(acc, w);
  res.step_cycles = cycle;
  res.overhead_cycles = calibration::kSerialControlOverhead;
  return res;
}

std::optional<BigUint> replay_serial_trace(const std::vector<TraceStep>& trace, std::size_t word_bits,
                                           const Widths& widths) {
  const std::size_t w = word_bits;
  const std::size_t s_words = ceil_div(widths.s_bits, w);
  const std::size_t d_words = ceil_div(widths.d_bits, w);
  std::vector<std::uint8_t> bits((d_words + 1) * w, 0);

  auto bit_of = [](const BigUint& v, std::size_t i) -> std::uint8_t { return test_bit(v, i) ? 1 : 0; };
  auto ripple_from = [&](std::size_t pos, std::uint8_t carry) {
    for (std::size_t i = pos; carry != 0 && i < bits.size(); ++i) {
      const std::uint8_t sum = bits[i] + carry;
      bits[i] = sum & 1u;
      carry = sum >> 1;
    }
  };

  std::uint8_t carry = 0;
  for (const auto& st : trace) {
    const bool mul_step = st.kind == StepKind::add || st.kind == StepKind::skip;
    if (!mul_step && st.kind != StepKind::final_add) return std::nullopt;
    if (st.chunk == 0) {
      carry = 0;
      if (mul_step) {
        for (std::size_t i = bits.size(); i-- > 1;) bits[i] = bits[i - 1];
        bits[0] = 0;
      }
    }
    if (st.carry_in != carry) return std::nullopt;
    if (st.kind == StepKind::skip && !st.operand.is_zero()) return std::nullopt;
    const std::size_t base = st.chunk * w;
    BigUint word = 0;
    for (std::size_t i = 0; i < w; ++i) {
      const std::uint8_t sum = bits[base + i] + bit_of(st.operand, i) + carry;
      bits[base + i] = sum & 1u;
      carry = sum >> 1;
      if (bits[base + i]) boost::multiprecision::bit_set(word, static_cast<unsigned>(i));
    }
    if (word != st.result || st.carry_out != carry) return std::nullopt;
    const std::size_t last_chunk = mul_step ? s_words - 1 : d_words - 1;
    if (st.chunk == last_chunk) ripple_from(base + w, carry);
  }

  BigUint v = 0;
  for (std::size_t i = bits.size(); i-- > 0;) {
    v <<= 1;
    v |= bits[i];
  }
  return v;
}

// ---- KCM --------------------------------------------------------------------

KcmTable::KcmTable(BigUint constant, unsigned radix, std::size_t lut_bits)
    : constant_(std::move(constant)), radix_(radix), lut_bits_(lut_bits) {
  entries_.reserve(radix_);
  BigUint multiple = 0;
  for (unsigned d = 0; d < radix_; ++d) {
    entries_.push_back(multiple);
    multiple += constant_;
  }
}

KcmTable KcmTable::binary(const BigUint& constant, std::size_t lut_bits) {
  if (lut_bits < 1 || lut_bits > 16) throw ConfigError("LUT width must be in [1, 16]");
  return KcmTable(constant, 1u << lut_bits, lut_bits);
}

KcmTable KcmTable::with_radix(const BigUint& constant, unsigned radix) {
  if (radix < 2 || radix > (1u << 16)) throw ConfigError("radix must be in [2, 65536]");
  return KcmTable(constant, radix, is_pow2(radix) ? log2_exact(radix) : 0);
}

KcmTables build_kcm_tables(const BigUint& s, std::size_t lut_bits, std::size_t c_bits) {
  if (lut_bits < 2) throw ConfigError("LUT width must be >= 2");
  return {std::make_shared<const KcmTable>(KcmTable::binary(s, lut_bits)), ceil_div(c_bits, lut_bits)};
}

std::vector<unsigned> split_digits(const BigUint& value, std::size_t lut_bits, std::size_t c_bits) {
  const std::size_t count = ceil_div(c_bits, lut_bits);
  std::vector<unsigned> digits(count, 0);
  const BigUint mask = pow2(lut_bits) - 1;
  BigUint rest = value;
  for (std::size_t i = count; i-- > 0;) {
    digits[i] = static_cast<unsigned>(rest & mask);
    rest >>= lut_bits;
  }
  return digits;
}

KcmDecomposition kcm_decompose(const KcmTable& table, const BigUint& operand) {
  std::vector<unsigned> digits;  // least significant first
  BigUint rest = operand;
  do {
    digits.push_back(static_cast<unsigned>(rest % table.radix()));
    rest /= table.radix();
  } while (!rest.is_zero());

  KcmDecomposition out;
  for (std::size_t pos = digits.size(); pos-- > 0;) {
    PartialProduct pp;
    pp.digit = digits[pos];
    pp.position = pos;
    pp.entry = table[pp.digit];
    if (table.lut_bits() != 0) {
      pp.shifted = pp.entry << (table.lut_bits() * pos);
    } else {
      pp.shifted = pp.entry;
      for (std::size_t k = 0; k < pos; ++k) pp.shifted = times_small(pp.shifted, table.radix());
    }
    out.product += pp.shifted;
    out.partials.push_back(std::move(pp));
  }
  return out;
}

namespace {

void check_table(const KcmConfig& cfg, const KcmTable& table, const Widths& widths, const BigUint& n_v,
                 const BigUint& r) {
  cfg.validate();
  if (table.lut_bits() != cfg.lut_bits || table.radix() != (1u << cfg.lut_bits)) {
    throw ConfigError("KCM table width does not match configuration");
  }
  check_operands(widths, table.constant(), n_v, r);
}

}  // namespace

DatapathResult kcm_parallel_respond(const KcmConfig& cfg, const KcmTables& tables, const BigUint& n_v,
                                    const BigUint& r, const Widths& widths) {
  if (!tables.table) throw ConfigError("missing KCM table");
  const KcmTable& table = *tables.table;
  check_table(cfg, table, widths, n_v, r);
  const std::size_t ell = cfg.lut_bits;
  const auto digits = split_digits(n_v, ell, widths.c_bits);
  if (tables.count != digits.size()) throw ConfigError("KCM table count does not match challenge width");

  DatapathResult res;
  std::uint64_t cycle = 0;
  auto record = [&](StepKind kind, std::size_t digit, std::size_t chunk, const BigUint& op, const BigUint& acc) {
    if (cfg.record_trace) res.trace.push_back({cycle, kind, digit, chunk, op, acc, 0, 0});
  };

  // All lookups happen together; positioning is wiring.
  std::vector<BigUint> level;
  level.reserve(digits.size());
  for (std::size_t i = 0; i < digits.size(); ++i) {
    const std::size_t pos = digits.size() - 1 - i;
    level.push_back(table[digits[i]] << (ell * pos));
    record(StepKind::lookup, i, i, digits[i], level.back());
  }
  ++cycle;

  while (level.size() > 1) {
    std::vector<BigUint> next;
    next.reserve((level.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
      next.push_back(level[i] + level[i + 1]);
      record(StepKind::tree_add, 0, i / 2, level[i + 1], next.back());
    }
    if (level.size() % 2 == 1) next.push_back(level.back());
    level = std::move(next);
    ++cycle;
  }

  res.value = level.front() + r;
  record(StepKind::final_add, 0, 0, r, res.value);
  ++cycle;

  res.step_cycles = cycle;
  const std::uint64_t depth = calibration::parallel_pipeline_depth(widths.s_bits);
  res.overhead_cycles = depth > cycle ? depth - cycle : 0;
  return res;
}

DatapathResult kcm_hybrid_respond(const KcmConfig& cfg, const KcmTable& table, const BigUint& n_v,
                                  const BigUint& r, const Widths& widths) {
  check_table(cfg, table, widths, n_v, r);
  const std::size_t ell = cfg.lut_bits;
  const auto digits = split_digits(n_v, ell, widths.c_bits);

  DatapathResult res;
  std::uint64_t cycle = 0;
  BigUint acc = 0;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    acc = (acc << ell) + table[digits[i]];
    if (cfg.record_trace) res.trace.push_back({cycle, StepKind::accumulate, i, 0, table[digits[i]], acc, 0, 0});
    ++cycle;
  }

  if (cfg.chunked_final_add) {
    const std::size_t w = *cfg.chunked_final_add;
    const std::size_t chunks = ceil_div(widths.d_bits, w);
    const BigUint mask = pow2(w) - 1;
    BigUint value = 0;
    unsigned carry = 0;
    for (std::size_t k = 0; k < chunks; ++k) {
      const BigUint a = (acc >> (k * w)) & mask;
      const BigUint b = (r >> (k * w)) & mask;
      const BigUint sum = a + b + carry;
      const unsigned cin = carry;
      const BigUint word = sum & mask;
      carry = static_cast<unsigned>(sum >> w);
      value |= word << (k * w);
      if (cfg.record_trace) res.trace.push_back({cycle, StepKind::final_add, 0, k, b, word, cin, carry});
      ++cycle;
    }
    if (carry) value |= pow2(chunks * w);
    res.value = std::move(value);
  } else {
    res.value = acc + r;
    if (cfg.record_trace) res.trace.push_back({cycle, StepKind::final_add, 0, 0, r, res.value, 0, 0});
    ++cycle;
  }

  res.step_cycles = cycle;
  res.overhead_cycles = calibration::hybrid_overhead(widths.s_bits);
  return res;
}

// ---- dispatch ---------------------------------------------------------------

Responder::Responder(Arch arch, ArchConfig cfg, const BigUint& s, const Widths& widths)
    : arch_(arch), cfg_(std::move(cfg)), s_(s), widths_(widths) {
  if (arch_ == Arch::serial) {
    cfg_.serial.validate();
  } else {
    cfg_.kcm.validate();
    tables_ = build_kcm_tables(s_, cfg_.kcm.lut_bits, widths_.c_bits);
  }
}

DatapathResult Responder::respond(const BigUint& n_v, const BigUint& r) const {
  switch (arch_) {
    case Arch::serial: return serial_respond(cfg_.serial, s_, n_v, r, widths_);
    case Arch::parallel: return kcm_parallel_respond(cfg_.kcm, tables_, n_v, r, widths_);
    case Arch::hybrid: return kcm_hybrid_respond(cfg_.kcm, *tables_.table, n_v, r, widths_);
  }
  throw ConfigError("unknown architecture");
}

std::uint64_t structural_steps(Arch arch, const Widths& widths, const ArchConfig& cfg) {
  switch (arch) {
    case Arch::serial: {
      const std::size_t w = cfg.serial.word_bits;
      return widths.c_bits * ceil_div(widths.s_bits, w) + ceil_div(widths.d_bits, w);
    }
    case Arch::parallel:
      return 2 + ceil_log2(ceil_div(widths.c_bits, cfg.kcm.lut_bits));
    case Arch::hybrid: {
      const std::uint64_t final_add =
          cfg.kcm.chunked_final_add ? ceil_div(widths.d_bits, *cfg.kcm.chunked_final_add) : 1;
      return ceil_div(widths.c_bits, cfg.kcm.lut_bits) + final_add;
    }
  }
  return 0;
}

std::uint64_t calibrated_latency(Arch arch, const Widths& widths, const ArchConfig& cfg) {
  const std::uint64_t steps = structural_steps(arch, widths, cfg);
  switch (arch) {
    case Arch::serial: return steps + calibration::kSerialControlOverhead;
    case Arch::parallel: return std::max(steps, calibration::parallel_pipeline_depth(widths.s_bits));
    case Arch::hybrid: return steps + calibration::hybrid_overhead(widths.s_bits);
  }
  return 0;
}

std::uint64_t stream_cycles(Arch arch, const Widths& widths, const ArchConfig& cfg, std::uint64_t count) {
  if (count == 0) return 0;
  const std::uint64_t latency = calibrated_latency(arch, widths, cfg);
  if (arch == Arch::parallel) return latency + (count - 1);
  return latency * count;
}

Rational make_rational(std::uint64_t num, std::uint64_t den) {
  if (den == 0) throw DomainError("rational with zero denominator");
  const std::uint64_t g = std::gcd(num, den);
  return {num / (g ? g : 1), den / (g ? g : 1)};
}

Rational stream_throughput(Arch arch, const Widths& widths, const ArchConfig& cfg) {
  const std::uint64_t output_bits = widths.s_bits + widths.c_bits + kCommitmentSlackBits;
  const std::uint64_t cycles_per_result = arch == Arch::parallel ? 1 : calibrated_latency(arch, widths, cfg);
  return make_rational(output_bits, 8 * cycles_per_result);
}

}  // namespace gps::datapath
