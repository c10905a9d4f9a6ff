#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "gps/arith.hpp"
#include "gps/calibration.hpp"
#include "gps/datapath.hpp"
#include "gps/errors.hpp"

using gps::BigUint;
using gps::Widths;
using namespace gps::datapath;

namespace {

BigUint expected_response(const BigUint& r, const BigUint& n_v, const BigUint& s) {
  return r + gps::arith::mul_oracle(n_v, s);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

constexpr std::array<std::size_t, 3> kSecretSizes{128, 256, 512};

}  // namespace

TEST_CASE("serial: shift-and-add worked example 41 x 6") {
  SerialConfig cfg{8};
  const auto res = serial_respond(cfg, 41, 6, 0, {6, 3, 89});
  CHECK(res.value == 246);

  // Partial products MSB first: 101001, 101001, 000000.
  REQUIRE(res.trace.size() >= 3);
  CHECK(res.trace[0].kind == StepKind::add);
  CHECK(res.trace[0].operand == 41);
  CHECK(res.trace[0].result == 41);
  CHECK(res.trace[1].kind == StepKind::add);
  CHECK(res.trace[1].result == 123);
  CHECK(res.trace[2].kind == StepKind::skip);
  CHECK(res.trace[2].operand == 0);
  CHECK(res.trace[2].result == 0b11110110);

  std::ostringstream dump;
  dump_trace(dump, res.trace);
  CHECK(dump.str() == read_file(GPS_GOLDEN_DIR "/shift_add_41x6_trace.txt"));
  CHECK(res.step_cycles == res.trace.size());
}

TEST_CASE("serial: cycle counts at the reference sizes") {
  SerialConfig cfg{16};
  const std::array<std::uint64_t, 3> expected{339, 603, 1131};
  for (std::size_t i = 0; i < kSecretSizes.size(); ++i) {
    const Widths w = Widths::for_secret(kSecretSizes[i], 32);
    const auto res = serial_respond(cfg, 1, 1, 1, w);
    CHECK(res.cycles() == expected[i]);
    CHECK(res.step_cycles == 32 * (kSecretSizes[i] / 16) + w.d_bits / 16);
    CHECK(res.overhead_cycles == 68);
    CHECK(res.step_cycles == res.trace.size());
  }
}

TEST_CASE("serial: zero-selected words still cost a cycle") {
  SerialConfig cfg{16};
  const Widths w = Widths::for_secret(128, 32);
  const auto zero = serial_respond(cfg, gps::pow2(127), 0, 5, w);
  const auto ones = serial_respond(cfg, gps::pow2(127), gps::pow2(32) - 1, 5, w);
  CHECK(zero.value == 5);
  CHECK(zero.cycles() == ones.cycles());
}

TEST_CASE("serial: random toy inputs match the oracle, traces replay") {
  std::mt19937_64 rng(10);
  const Widths w = Widths::for_secret(16, 8);
  for (std::size_t word : {8u, 16u, 32u}) {
    SerialConfig cfg{word};
    for (int i = 0; i < 300; ++i) {
      const BigUint s = gps::random_bits(rng, w.s_bits);
      const BigUint n_v = gps::random_bits(rng, w.c_bits);
      const BigUint r = gps::random_bits(rng, w.d_bits);
      const auto res = serial_respond(cfg, s, n_v, r, w);
      REQUIRE(res.value == expected_response(r, n_v, s));
      const auto replayed = replay_serial_trace(res.trace, word, w);
      REQUIRE(replayed.has_value());
      REQUIRE(*replayed == res.value);
    }
  }
}

TEST_CASE("serial: trace replay detects tampering") {
  SerialConfig cfg{8};
  const Widths w = Widths::for_secret(16, 8);
  auto res = serial_respond(cfg, 0xbeef, 0xa5, 0x1234, w);
  REQUIRE(replay_serial_trace(res.trace, 8, w).has_value());

  auto bad_word = res.trace;
  bad_word[3].result ^= 1;
  CHECK_FALSE(replay_serial_trace(bad_word, 8, w).has_value());

  auto bad_carry = res.trace;
  for (auto& st : bad_carry) {
    if (st.carry_out) {
      st.carry_out = 0;
      break;
    }
  }
  CHECK_FALSE(replay_serial_trace(bad_carry, 8, w).has_value());
}

TEST_CASE("serial: configuration errors") {
  const Widths w = Widths::for_secret(16, 8);
  CHECK_THROWS_AS(serial_respond(SerialConfig{12}, 1, 1, 1, w), gps::ConfigError);
  CHECK_THROWS_AS(serial_respond(SerialConfig{16}, gps::pow2(16), 1, 1, w), gps::ConfigError);
  CHECK_THROWS_AS(serial_respond(SerialConfig{16}, 1, gps::pow2(8), 1, w), gps::ConfigError);
  CHECK_THROWS_AS(serial_respond(SerialConfig{16}, 1, 1, gps::pow2(104), w), gps::ConfigError);
}

TEST_CASE("serial: widths that are not word multiples are zero-extended") {
  std::mt19937_64 rng(12);
  const Widths w{20, 12, 112};
  for (int i = 0; i < 200; ++i) {
    const BigUint s = gps::random_bits(rng, 20), n_v = gps::random_bits(rng, 12), r = gps::random_bits(rng, 112);
    const auto res = serial_respond(SerialConfig{16}, s, n_v, r, w);
    REQUIRE(res.value == expected_response(r, n_v, s));
    REQUIRE(res.step_cycles == 12 * 2 + 7);
  }
}

TEST_CASE("KCM tables") {
  SUBCASE("decimal walk-through: 953 x 482") {
    const auto table = KcmTable::with_radix(953, 10);
    CHECK(table[4] == 3812);
    CHECK(table[8] == 7624);
    CHECK(table[2] == 1906);
    CHECK(table[0] == 0);
    const auto dec = kcm_decompose(table, 482);
    REQUIRE(dec.partials.size() == 3);
    CHECK(dec.partials[0].entry == 3812);
    CHECK(dec.partials[0].shifted == 381200);
    CHECK(dec.partials[1].entry == 7624);
    CHECK(dec.partials[1].shifted == 76240);
    CHECK(dec.partials[2].entry == 1906);
    CHECK(dec.product == 459346);
  }

  SUBCASE("binary table entries") {
    const auto table = KcmTable::binary(0b101001, 2);
    CHECK(table.size() == 4);
    CHECK(table[0] == 0);
    CHECK(table[1] == 41);
    CHECK(table[3] == gps::arith::mul_oracle(3, 41));
    CHECK(table[3] == 123);
  }

  SUBCASE("entry[d] = d*s and fits in |s|+l bits") {
    std::mt19937_64 rng(13);
    for (std::size_t ell = 2; ell <= 8; ++ell) {
      const BigUint s = gps::random_bits(rng, 128);
      const auto table = KcmTable::binary(s, ell);
      REQUIRE(table.size() == (std::size_t{1} << ell));
      for (unsigned d = 0; d < table.size(); ++d) {
        REQUIRE(table[d] == gps::arith::mul_oracle(d, s));
        REQUIRE(gps::bit_length(table[d]) <= 128 + ell);
      }
    }
  }

  SUBCASE("shared tables") {
    const auto tables = build_kcm_tables(953, 4, 32);
    CHECK(tables.count == 8);
    CHECK((*tables.table)[15] == 15 * 953);
    CHECK(build_kcm_tables(953, 4, 30).count == 8);
    CHECK_THROWS_AS(build_kcm_tables(953, 1, 32), gps::ConfigError);
  }

  SUBCASE("binary decomposition") {
    const auto dec = kcm_decompose(KcmTable::binary(953, 4), 482);
    CHECK(dec.product == 459346);
    CHECK(dec.partials.size() == 3);  // 482 = 0x1e2
  }
}

TEST_CASE("digit split reconstructs the challenge") {
  std::mt19937_64 rng(14);
  for (std::size_t ell = 2; ell <= 8; ++ell) {
    for (int i = 0; i < 100; ++i) {
      const BigUint v = gps::random_bits(rng, 32);
      const auto digits = split_digits(v, ell, 32);
      REQUIRE(digits.size() == (32 + ell - 1) / ell);
      BigUint back = 0;
      for (unsigned d : digits) {
        REQUIRE(d < (1u << ell));
        back = (back << ell) | d;
      }
      REQUIRE(back == v);
    }
  }
}

TEST_CASE("parallel KCM: latency and values") {
  const KcmConfig cfg{};
  const std::array<std::uint64_t, 3> expected{8, 12, 20};
  std::mt19937_64 rng(15);
  for (std::size_t i = 0; i < kSecretSizes.size(); ++i) {
    const Widths w = Widths::for_secret(kSecretSizes[i], 32);
    const BigUint s = gps::random_bits(rng, w.s_bits);
    const BigUint n_v = gps::random_bits(rng, 32), r = gps::random_bits(rng, w.d_bits);
    const auto res = kcm_parallel_respond(cfg, build_kcm_tables(s, 4, 32), n_v, r, w);
    CHECK(res.cycles() == expected[i]);
    CHECK(res.step_cycles == 5);  // lookup + 3 tree levels + final add
    CHECK(res.value == expected_response(r, n_v, s));
    CHECK(res.trace.back().cycle + 1 == res.step_cycles);
  }

  SUBCASE("953 x 482 through the binary datapath") {
    const Widths w{10, 12, 102};
    const auto res = kcm_parallel_respond(cfg, build_kcm_tables(953, 4, 12), 482, 0, w);
    CHECK(res.value == 459346);
    CHECK(res.trace[0].kind == StepKind::lookup);
  }

  SUBCASE("mismatched table") {
    const Widths w = Widths::for_secret(16, 8);
    CHECK_THROWS_AS(kcm_parallel_respond(KcmConfig{3}, build_kcm_tables(5, 4, 8), 1, 1, w), gps::ConfigError);
    CHECK_THROWS_AS(kcm_parallel_respond(cfg, build_kcm_tables(5, 4, 12), 1, 1, w), gps::ConfigError);
    CHECK_THROWS_AS(kcm_parallel_respond(KcmConfig{9}, build_kcm_tables(5, 4, 8), 1, 1, w), gps::ConfigError);
  }
}

TEST_CASE("hybrid KCM: latency and values") {
  const KcmConfig cfg{};
  const std::array<std::uint64_t, 3> expected{48, 72, 120};
  std::mt19937_64 rng(16);
  for (std::size_t i = 0; i < kSecretSizes.size(); ++i) {
    const Widths w = Widths::for_secret(kSecretSizes[i], 32);
    const BigUint s = gps::random_bits(rng, w.s_bits);
    const BigUint n_v = gps::random_bits(rng, 32), r = gps::random_bits(rng, w.d_bits);
    const auto res = kcm_hybrid_respond(cfg, KcmTable::binary(s, 4), n_v, r, w);
    CHECK(res.cycles() == expected[i]);
    CHECK(res.step_cycles == 9);
    CHECK(res.step_cycles == res.trace.size());
    CHECK(res.value == expected_response(r, n_v, s));
  }

  SUBCASE("single nonzero top digit") {
    const Widths w = Widths::for_secret(128, 32);
    const BigUint s = gps::from_hex("deadbeefcafebabe0123456789abcdef");
    const auto table = KcmTable::binary(s, 4);
    for (unsigned d = 1; d < 16; ++d) {
      const BigUint n_v = BigUint(d) << 28;
      const auto res = kcm_hybrid_respond(cfg, table, n_v, 0, w);
      REQUIRE(res.value == (table[d] << (32 - 4)));
      REQUIRE(res.trace[0].result == table[d]);
    }
  }

  SUBCASE("exhaustive s=6 bits, c=4 bits, l=2") {
    const Widths w = Widths::for_secret(6, 4);
    const KcmConfig small{2};
    std::mt19937_64 r_rng(17);
    for (unsigned s = 0; s < 64; ++s) {
      const auto table = KcmTable::binary(s, 2);
      for (unsigned n_v = 0; n_v < 16; ++n_v) {
        const BigUint r = gps::random_bits(r_rng, w.d_bits);
        REQUIRE(kcm_hybrid_respond(small, table, n_v, r, w).value == expected_response(r, n_v, s));
      }
    }
  }

  SUBCASE("chunked final add") {
    const Widths w = Widths::for_secret(128, 32);
    KcmConfig chunked{};
    chunked.chunked_final_add = 16;
    const BigUint s = gps::random_bits(rng, 128), n_v = gps::random_bits(rng, 32);
    const BigUint r = gps::pow2(240) - 1;  // forces a carry out of the top chunk
    const auto res = kcm_hybrid_respond(chunked, KcmTable::binary(s, 4), n_v, r, w);
    CHECK(res.value == expected_response(r, n_v, s));
    CHECK(res.step_cycles == 8 + 15);
    CHECK(res.cycles() == calibrated_latency(Arch::hybrid, w, ArchConfig{{}, chunked}));
  }
}

TEST_CASE("architectures agree on every input (exhaustive at s=6, c=4)") {
  const Widths w = Widths::for_secret(6, 4);
  ArchConfig cfg;
  cfg.serial.word_bits = 8;
  cfg.kcm.lut_bits = 2;
  std::mt19937_64 rng(18);
  for (unsigned s = 0; s < 64; ++s) {
    std::vector<Responder> responders;
    for (Arch a : {Arch::serial, Arch::parallel, Arch::hybrid}) responders.emplace_back(a, cfg, s, w);
    for (unsigned n_v = 0; n_v < 16; ++n_v) {
      const BigUint r = gps::random_bits(rng, w.d_bits);
      const BigUint want = expected_response(r, n_v, s);
      for (const auto& resp : responders) REQUIRE(resp.respond(n_v, r).value == want);
    }
  }
}

TEST_CASE("simulated cycles equal the calibrated formulas") {
  std::mt19937_64 rng(19);
  for (std::size_t s_bits : {16u, 128u, 180u, 256u, 512u}) {
    for (std::size_t c_bits : {8u, 16u, 20u, 32u}) {
      const Widths w = Widths::for_secret(s_bits, c_bits);
      const BigUint s = gps::random_bits(rng, s_bits), n_v = gps::random_bits(rng, c_bits);
      const BigUint r = gps::random_bits(rng, w.d_bits);
      for (std::size_t word : {8u, 16u, 32u}) {
        for (std::size_t ell : {2u, 4u, 8u}) {
          ArchConfig cfg;
          cfg.serial.word_bits = word;
          cfg.kcm.lut_bits = ell;
          for (Arch a : {Arch::serial, Arch::parallel, Arch::hybrid}) {
            const auto res = Responder(a, cfg, s, w).respond(n_v, r);
            REQUIRE(res.step_cycles == structural_steps(a, w, cfg));
            REQUIRE(res.cycles() == calibrated_latency(a, w, cfg));
          }
        }
      }
    }
  }
}

TEST_CASE("stream throughput") {
  const ArchConfig cfg;
  const Widths w128 = Widths::for_secret(128, 32);
  const Widths w256 = Widths::for_secret(256, 32);
  const Widths w512 = Widths::for_secret(512, 32);
  CHECK(stream_throughput(Arch::serial, w128, cfg) == make_rational(30, 339));
  CHECK(stream_throughput(Arch::serial, w128, cfg).value() == doctest::Approx(0.0885).epsilon(0.001));
  CHECK(stream_throughput(Arch::hybrid, w256, cfg) == make_rational(46, 72));
  CHECK(stream_throughput(Arch::hybrid, w256, cfg).value() == doctest::Approx(0.639).epsilon(0.001));
  CHECK(stream_throughput(Arch::parallel, w128, cfg) == make_rational(30, 1));
  CHECK(stream_throughput(Arch::parallel, w512, cfg) == make_rational(78, 1));

  CHECK(stream_cycles(Arch::parallel, w128, cfg, 100) == 8 + 99);
  CHECK(stream_cycles(Arch::serial, w128, cfg, 3) == 3 * 339);
  CHECK(stream_cycles(Arch::hybrid, w128, cfg, 0) == 0);
}

TEST_CASE("trace recording can be disabled without changing results") {
  const Widths w = Widths::for_secret(128, 32);
  ArchConfig on, off;
  off.serial.record_trace = false;
  off.kcm.record_trace = false;
  const BigUint s = gps::from_hex("0123456789abcdef0123456789abcdef");
  for (Arch a : {Arch::serial, Arch::parallel, Arch::hybrid}) {
    const auto x = Responder(a, on, s, w).respond(0xabcdef01, 77);
    const auto y = Responder(a, off, s, w).respond(0xabcdef01, 77);
    CHECK(x.value == y.value);
    CHECK(x.cycles() == y.cycles());
    CHECK(y.trace.empty());
  }
}

TEST_CASE("arch names") {
  CHECK(parse_arch("hybrid") == Arch::hybrid);
  CHECK(to_string(Arch::parallel) == "parallel");
  CHECK_THROWS_AS(parse_arch("systolic"), gps::ConfigError);
}
