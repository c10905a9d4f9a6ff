// gps: key/coupon generation, verifier server, prover client, datapath benchmark and
// table reproduction.
//
// Exit codes: 0 success/accept, 1 usage or internal error, 2 protocol reject,
// 3 transport failure.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gps/arith.hpp"
#include "gps/calibration.hpp"
#include "gps/costmodel.hpp"
#include "gps/datapath.hpp"
#include "gps/errors.hpp"
#include "gps/params.hpp"
#include "gps/protocol.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitReject = 2;
constexpr int kExitTransport = 3;

struct Common {
  std::string profile;
  std::optional<std::uint64_t> seed;
  std::string format = "text";
  std::string out;
};

/// Uses the explicit seed or draws one and echoes it so the run can be repeated.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed, std::string_view what) {
  if (seed) return *seed;
  std::random_device rd;
  const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) | rd();
  std::cerr << "# " << what << " seed=" << s << "\n";
  return s;
}

std::string default_profile() {
  if (const char* env = std::getenv("GPS_PROFILE"); env != nullptr && *env != '\0') return env;
  return "toy";
}

gps::KeyFile load_key(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gps::ConfigError("cannot read key file " + path);
  return gps::read_key_file(in);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw gps::ConfigError("cannot write " + path);
  return out;
}

std::string fmt_double(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

// ---- keygen -----------------------------------------------------------------

struct KeygenArgs {
  Common common;
  std::optional<std::size_t> prime_bits;
  std::optional<std::string> id;
};

int cmd_keygen(const KeygenArgs& a) {
  const auto& preset = gps::find_preset(a.common.profile);
  gps::Rng rng(resolve_seed(a.common.seed, "keygen"));
  const gps::ParameterProfile profile = gps::make_profile(preset.name, a.prime_bits.value_or(preset.prime_bits), rng);
  gps::KeyPair key = gps::keygen(profile, rng);
  if (a.id) key.id = gps::prover_id_from_hex(*a.id);
  auto out = open_out(a.common.out);
  gps::write_key_file(out, profile, key);
  if (!out.flush()) throw gps::ConfigError("write failed: " + a.common.out);
  std::cout << "id=" << gps::prover_id_to_hex(key.id) << "\n";
  return kExitOk;
}

// ---- coupons ----------------------------------------------------------------

struct CouponArgs {
  Common common;
  std::string key;
  std::uint64_t count = 20;
  std::optional<std::string> seed_hex;
};

int cmd_coupons(const CouponArgs& a) {
  const gps::KeyFile kf = load_key(a.key);
  gps::CouponSeed seed;
  if (a.seed_hex) {
    seed.seed = gps::seed_from_hex(*a.seed_hex);
  } else {
    gps::Rng expand(resolve_seed(a.common.seed, "coupons"));
    const std::uint64_t hi = expand(), lo = expand();
    for (int i = 0; i < 8; ++i) {
      seed.seed[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(hi >> (56 - 8 * i));
      seed.seed[static_cast<std::size_t>(8 + i)] = static_cast<std::uint8_t>(lo >> (56 - 8 * i));
    }
  }
  seed.count = a.count;
  const auto coupons = gps::make_coupons(kf.profile, kf.key, seed, a.count);
  auto out = open_out(a.common.out);
  gps::write_coupon_file(out, kf.profile, coupons);
  if (!out.flush()) throw gps::ConfigError("write failed: " + a.common.out);
  std::cout << "coupons=" << coupons.size() << " seed=" << gps::seed_to_hex(seed.seed) << "\n";
  return kExitOk;
}

// ---- serve ------------------------------------------------------------------

struct ServeArgs {
  Common common;
  std::vector<std::string> keys;
  std::string host = "127.0.0.1";
  std::uint16_t port = 7300;
  std::optional<std::string> port_file;
  std::uint64_t max_connections = 0;
  int timeout_ms = 5000;
  std::string verifier_id = "verifier";
};

int cmd_serve(const ServeArgs& a) {
  auto directory = std::make_shared<gps::proto::ProverDirectory>();
  std::optional<gps::ParameterProfile> profile;
  for (const auto& path : a.keys) {
    const gps::KeyFile kf = load_key(path);
    if (profile && (profile->n != kf.profile.n || profile->g != kf.profile.g || profile->name != kf.profile.name)) {
      throw gps::ConfigError("key files disagree on the public parameters: " + path);
    }
    profile = kf.profile;
    (*directory)[kf.key.id] = kf.key.i_pub;
  }

  gps::proto::VerifierServer::Options opts;
  opts.host = a.host;
  opts.port = a.port;
  opts.timeout = std::chrono::milliseconds(a.timeout_ms);
  opts.seed = resolve_seed(a.common.seed, "serve");
  opts.max_connections = a.max_connections;
  gps::proto::VerifierServer server(*profile, directory, opts);

  std::cout << "verifier=" << a.verifier_id << " listening=" << a.host << ":" << server.port()
            << " provers=" << directory->size() << std::endl;
  if (a.port_file) {
    // Written to a temporary name first so readers never see a partial file.
    const std::string tmp = *a.port_file + ".tmp";
    {
      auto pf = open_out(tmp);
      pf << server.port() << "\n";
    }
    std::rename(tmp.c_str(), a.port_file->c_str());
  }

  const bool kv = gps::cost::parse_format(a.common.format) == gps::cost::Format::kv;
  server.run([&](std::uint64_t conn, const gps::proto::VerifierOutcome& o, const std::string& error) {
    const std::string id = o.prover ? gps::prover_id_to_hex(*o.prover) : "-";
    const std::string verdict = o.accepted ? "accept" : "reject";
    const std::string reason = error.empty() ? o.reason : error;
    if (kv) {
      std::cout << "connection=" << conn << " id=" << id << " verdict=" << verdict << "\n";
    } else {
      std::cout << "round " << conn << ": prover " << id << " " << verdict << " (" << reason << ")\n";
    }
    std::cout.flush();
  });
  std::cout << "served=" << (server.accepted() + server.rejected()) << " accepted=" << server.accepted()
            << " rejected=" << server.rejected() << std::endl;
  return kExitOk;
}

// ---- auth -------------------------------------------------------------------

struct AuthArgs {
  Common common;
  std::string key;
  std::string coupons;
  std::optional<std::uint64_t> coupon_index;
  std::optional<std::string> index_file;
  std::string arch = "serial";
  std::size_t word_bits = 16;
  std::size_t lut_bits = 4;
  std::optional<std::size_t> chunked_final_add;
  std::string host = "127.0.0.1";
  std::uint16_t port = 7300;
  int timeout_ms = 5000;
};

std::uint64_t read_index_file(const std::string& path) {
  std::ifstream in(path);
  std::uint64_t idx = 0;
  if (in && !(in >> idx)) throw gps::FormatError("index file " + path + " does not hold an integer");
  return idx;
}

int cmd_auth(const AuthArgs& a) {
  const gps::KeyFile kf = load_key(a.key);
  std::ifstream cin_file(a.coupons);
  if (!cin_file) throw gps::ConfigError("cannot read coupon file " + a.coupons);
  gps::CouponFile cf = gps::read_coupon_file(cin_file);
  if (cf.profile_name != kf.profile.name || cf.n != kf.profile.n || cf.g != kf.profile.g) {
    throw gps::ConfigError("coupon file was issued for different public parameters");
  }

  std::uint64_t index = a.coupon_index.value_or(0);
  if (a.index_file) index = read_index_file(*a.index_file);

  gps::datapath::ArchConfig cfg;
  cfg.serial.word_bits = a.word_bits;
  cfg.kcm.lut_bits = a.lut_bits;
  cfg.kcm.chunked_final_add = a.chunked_final_add;
  const auto arch = gps::datapath::parse_arch(a.arch);

  gps::proto::ProverSession session(kf.profile, kf.key, gps::proto::CouponSource(std::move(cf.coupons)), arch, cfg,
                                    index);
  std::unique_ptr<gps::proto::TcpTransport> link;
  try {
    link = gps::proto::TcpTransport::connect(a.host, a.port, std::chrono::milliseconds(a.timeout_ms));
  } catch (const gps::TransportError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTransport;
  }

  gps::proto::ProverOutcome outcome;
  try {
    outcome = gps::proto::run_prover(*link, session);
  } catch (const gps::TransportError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTransport;
  }
  if (a.index_file) {
    auto out = open_out(*a.index_file);
    out << session.next_index() << "\n";
  }

  const auto& dp = session.last_datapath();
  const bool kv = gps::cost::parse_format(a.common.format) == gps::cost::Format::kv;
  const std::string verdict = outcome.accepted ? "accept" : "reject";
  if (kv) {
    std::cout << "verdict=" << verdict << " arch=" << a.arch << " coupon=" << *session.current_index();
    if (dp) std::cout << " step_cycles=" << dp->step_cycles << " cycles=" << dp->cycles();
    std::cout << "\n";
  } else {
    std::cout << "prover " << gps::prover_id_to_hex(kf.key.id) << " coupon " << *session.current_index() << ": "
              << verdict << "\n";
    if (dp) {
      std::cout << "  " << a.arch << " datapath: " << dp->step_cycles << " step cycles + " << dp->overhead_cycles
                << " overhead = " << dp->cycles() << " cycles\n";
    }
  }
  return outcome.accepted ? kExitOk : kExitReject;
}

// ---- bench ------------------------------------------------------------------

struct BenchArgs {
  Common common;
  std::optional<std::size_t> challenge_bits;
  std::size_t word_bits = 16;
  std::size_t lut_bits = 4;
  std::uint64_t iterations = 100;
};

int cmd_bench(const BenchArgs& a) {
  using namespace gps::datapath;
  const auto& preset = gps::find_preset(a.common.profile);
  const gps::Widths widths = gps::Widths::for_secret(preset.s_bits, a.challenge_bits.value_or(preset.c_bits));
  ArchConfig cfg;
  cfg.serial.word_bits = a.word_bits;
  cfg.serial.record_trace = false;
  cfg.kcm.lut_bits = a.lut_bits;
  cfg.kcm.record_trace = false;
  if (a.iterations == 0) throw gps::ConfigError("--iterations must be >= 1");

  gps::Rng rng(resolve_seed(a.common.seed, "bench"));
  const gps::BigUint s = gps::random_bits(rng, widths.s_bits);
  std::vector<std::pair<gps::BigUint, gps::BigUint>> inputs;
  for (std::uint64_t i = 0; i < a.iterations; ++i) {
    gps::BigUint n_v = gps::random_bits(rng, widths.c_bits);
    gps::BigUint r = gps::random_bits(rng, widths.d_bits);
    inputs.emplace_back(std::move(n_v), std::move(r));
  }

  const bool kv = gps::cost::parse_format(a.common.format) == gps::cost::Format::kv;
  if (!kv) {
    std::cout << "profile " << preset.name << ": s=" << widths.s_bits << " c=" << widths.c_bits << " d=" << widths.d_bits
              << " bits, w=" << a.word_bits << ", l=" << a.lut_bits << ", " << a.iterations << " responses\n";
    std::cout << std::left << std::setw(10) << "arch" << std::right << std::setw(8) << "steps" << std::setw(9)
              << "latency" << std::setw(12) << "bytes/cyc" << std::setw(10) << "mem bits" << std::setw(10)
              << "adders" << std::setw(10) << "area" << std::setw(10) << "<=2560" << std::setw(16)
              << "host us/resp" << "\n";
  }

  bool all_equal = true;
  for (Arch arch : {Arch::serial, Arch::parallel, Arch::hybrid}) {
    const Responder responder(arch, cfg, s, widths);
    std::uint64_t steps = 0, cycles = 0;
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& [n_v, r] : inputs) {
      const DatapathResult res = responder.respond(n_v, r);
      steps = res.step_cycles;
      cycles = res.cycles();
      if (res.value != r + gps::arith::mul_oracle(n_v, s)) all_equal = false;
    }
    const auto t1 = std::chrono::steady_clock::now();
    const double host_us =
        std::chrono::duration<double, std::micro>(t1 - t0).count() / static_cast<double>(inputs.size());

    const auto carch = gps::cost::from_datapath(arch);
    const auto rep = gps::cost::cost_report(carch, widths.s_bits, widths.c_bits,
                                            arch == Arch::serial ? a.word_bits : a.lut_bits);
    const double tp = stream_throughput(arch, widths, cfg).value();
    const bool within_budget = cycles <= gps::calibration::kResponseBudgetCycles;
    const std::string name(to_string(arch));
    if (kv) {
      auto line = [&](std::string_view metric, const std::string& value) {
        std::cout << "arch=" << name << " s_bits=" << widths.s_bits << " metric=" << metric << " value=" << value
                  << "\n";
      };
      line("step_cycles", std::to_string(steps));
      line("latency_cycles", std::to_string(cycles));
      line("throughput_bytes_per_cycle", fmt_double(tp, 6));
      line("memory_bits", rep.memory_bits.str());
      line("adder_count", std::to_string(rep.adder_count));
      line("adder_bits", std::to_string(rep.adder_bits));
      line("area_estimate", fmt_double(*rep.area_estimate_cells, 1));
      line("within_320us_budget", within_budget ? "1" : "0");
      line("host_us_per_response", fmt_double(host_us, 3));
    } else {
      std::cout << std::left << std::setw(10) << name << std::right << std::setw(8) << steps << std::setw(9) << cycles
                << std::setw(12) << fmt_double(tp, 3) << std::setw(10) << rep.memory_bits.str() << std::setw(10)
                << (std::to_string(rep.adder_count) + "x" + std::to_string(rep.adder_bits)) << std::setw(10)
                << fmt_double(*rep.area_estimate_cells, 0) << std::setw(10) << (within_budget ? "pass" : "FAIL")
                << std::setw(16) << fmt_double(host_us, 2) << "\n";
    }
  }
  if (!kv) {
    std::cout << "latency is modelled target cycles at 8 MHz (budget 2560 = 320 us); host us/resp is simulation time\n";
  }
  if (!all_equal) {
    std::cerr << "error: datapath result disagrees with the reference product\n";
    return kExitUsage;
  }
  return kExitOk;
}

// ---- report -----------------------------------------------------------------

struct ReportArgs {
  Common common;
  bool check = false;
};

int cmd_report(const ReportArgs& a) {
  const auto fmt = gps::cost::parse_format(a.common.format);
  gps::cost::render_table2(std::cout, fmt);
  if (fmt == gps::cost::Format::text) std::cout << "\n";
  gps::cost::render_adder_table(std::cout, fmt);
  if (fmt == gps::cost::Format::text) {
    std::cout << "\nCoupon footprint: " << gps::cost::coupon_storage_note(20) << "\n";
  }
  if (!a.check) return kExitOk;
  const auto drift = gps::cost::check_reproduction();
  for (const auto& d : drift) {
    std::cerr << "drift: " << d.what << " expected " << d.expected << " got " << d.actual << "\n";
  }
  if (fmt == gps::cost::Format::text) std::cout << "check: " << (drift.empty() ? "ok" : "DRIFT") << "\n";
  return drift.empty() ? kExitOk : kExitUsage;
}

void add_common(CLI::App* cmd, Common& c, bool with_profile, bool with_out) {
  if (with_profile) {
    c.profile = default_profile();
    cmd->add_option("--profile", c.profile, "Parameter profile (toy, s128, s256, s512, std180); env GPS_PROFILE");
  }
  cmd->add_option("--seed", c.seed, "Seed for randomized steps (drawn and echoed when omitted)");
  cmd->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"text", "kv"}));
  if (with_out) cmd->add_option("--out", c.out, "Output file")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GPS zero-knowledge authentication with coupons: keys, coupons, verifier, prover, datapath models"};
  app.require_subcommand(1);

  KeygenArgs keygen;
  auto* k = app.add_subcommand("keygen", "Generate public parameters and a prover key pair");
  add_common(k, keygen.common, true, true);
  k->add_option("--prime-bits", keygen.prime_bits, "Bits per prime factor of n (default per profile)");
  k->add_option("--id", keygen.id, "Prover identifier, 8 hex digits (default random)");

  CouponArgs coupons;
  auto* c = app.add_subcommand("coupons", "Issue coupons (r_i, g^r_i mod n) for a key");
  add_common(c, coupons.common, false, true);
  c->add_option("--key", coupons.key, "Key file")->required();
  c->add_option("--count", coupons.count, "Number of coupons")->check(CLI::PositiveNumber);
  auto* seed_hex = c->add_option("--coupon-seed-hex", coupons.seed_hex, "Full 128-bit coupon seed (hex)");
  seed_hex->excludes(c->get_option("--seed"));

  ServeArgs serve;
  auto* s = app.add_subcommand("serve", "Run the verifier on TCP");
  add_common(s, serve.common, false, false);
  s->add_option("--key", serve.keys, "Prover key file (repeatable); only id and I are used")->required();
  s->add_option("--host", serve.host, "IPv4 listen address");
  s->add_option("--port", serve.port, "TCP port (0 = ephemeral)");
  s->add_option("--port-file", serve.port_file, "Write the bound port to this file");
  s->add_option("--max-connections", serve.max_connections, "Exit after this many rounds (0 = forever)");
  s->add_option("--timeout-ms", serve.timeout_ms, "Per-frame receive timeout");
  s->add_option("--verifier-id", serve.verifier_id, "Verifier identity (Id_V), logged only");

  AuthArgs auth;
  auto* au = app.add_subcommand("auth", "Run one authentication round as the prover");
  add_common(au, auth.common, false, false);
  au->add_option("--key", auth.key, "Key file")->required();
  au->add_option("--coupons", auth.coupons, "Coupon file")->required();
  auto* idx = au->add_option("--coupon-index", auth.coupon_index, "Coupon to spend (default 0)");
  au->add_option("--index-file", auth.index_file, "Read the next coupon index here and store the following one")
      ->excludes(idx);
  au->add_option("--arch", auth.arch, "Datapath architecture")->check(CLI::IsMember({"serial", "parallel", "hybrid"}));
  au->add_option("--word-bits", auth.word_bits, "Serial adder width")->check(CLI::IsMember({8, 16, 32}));
  au->add_option("--lut-bits", auth.lut_bits, "KCM LUT input width")->check(CLI::Range(2, 8));
  au->add_option("--chunked-final-add", auth.chunked_final_add, "Hybrid: word width of a chunked final add")
      ->check(CLI::IsMember({8, 16, 32}));
  au->add_option("--host", auth.host, "Verifier host");
  au->add_option("--port", auth.port, "Verifier port");
  au->add_option("--timeout-ms", auth.timeout_ms, "Per-frame receive timeout");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Simulate the three datapaths and report cycles, throughput and cost");
  add_common(b, bench.common, true, false);
  b->add_option("--challenge-bits", bench.challenge_bits, "Challenge width (default per profile)")
      ->check(CLI::PositiveNumber);
  b->add_option("--word-bits", bench.word_bits, "Serial adder width")->check(CLI::IsMember({8, 16, 32}));
  b->add_option("--lut-bits", bench.lut_bits, "KCM LUT input width")->check(CLI::Range(2, 8));
  b->add_option("--iterations", bench.iterations, "Responses per architecture");

  ReportArgs report;
  auto* r = app.add_subcommand("report", "Reproduce the area/latency/throughput and adder-width tables");
  add_common(r, report.common, false, false);
  r->add_flag("--check", report.check, "Exit nonzero if any reproduced value drifts from its expectation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*k) return cmd_keygen(keygen);
    if (*c) return cmd_coupons(coupons);
    if (*s) return cmd_serve(serve);
    if (*au) return cmd_auth(auth);
    if (*b) return cmd_bench(bench);
    if (*r) return cmd_report(report);
  } catch (const gps::TransportError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTransport;
  } catch (const gps::ProtocolError& e) {
    std::cerr << "protocol error: " << e.what() << "\n";
    return kExitReject;
  } catch (const gps::FramingError& e) {
    std::cerr << "framing error: " << e.what() << "\n";
    return kExitReject;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
