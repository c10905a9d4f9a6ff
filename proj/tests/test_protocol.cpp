#include <doctest.h>

#include <fstream>
#include <map>
#include <thread>

#include "gps/arith.hpp"
#include "gps/errors.hpp"
#include "gps/message.hpp"
#include "gps/protocol.hpp"
#include "gps/transport.hpp"

using gps::BigUint;
using namespace gps::proto;
using namespace std::chrono_literals;

namespace {

struct Fixture {
  gps::ParameterProfile profile;
  gps::KeyPair key;
  gps::CouponSeed seed;
  std::shared_ptr<ProverDirectory> directory = std::make_shared<ProverDirectory>();

  explicit Fixture(std::uint64_t count = 20) {
    gps::Rng rng(0x5eed);
    profile = gps::make_profile("toy", 32, rng);
    key = gps::keygen(profile, rng);
    seed = {gps::seed_from_hex("c0ffee"), count};
    (*directory)[key.id] = key.i_pub;
  }

  ProverSession prover(gps::datapath::Arch arch = gps::datapath::Arch::serial) const {
    return ProverSession(profile, key, CouponSource(profile, seed), arch);
  }
  VerifierSession verifier() const { return VerifierSession(profile, directory); }
};

std::map<std::string, std::string> read_golden(const std::string& name) {
  std::ifstream in(std::string(GPS_GOLDEN_DIR) + "/" + name);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

Frame bytes(std::initializer_list<int> v) { return Frame(v.begin(), v.end()); }

}  // namespace

TEST_CASE("codec: exact bytes") {
  CHECK(encode(Commitment{{1, 2, 3, 4}, 0x0100}) == bytes({0x01, 1, 2, 3, 4, 0, 0, 0, 2, 0x01, 0x00}));
  CHECK(encode(Challenge{0}) == bytes({0x02, 0, 0, 0, 0}));
  CHECK(encode(Challenge{0xd6}) == bytes({0x02, 0, 0, 0, 1, 0xd6}));
  CHECK(encode(Response{0x123456}) == bytes({0x03, 0, 0, 0, 3, 0x12, 0x34, 0x56}));
  CHECK(encode(Verdict{true}) == bytes({0x04, 0x01}));
  CHECK(encode(Verdict{false}) == bytes({0x04, 0x00}));
  CHECK(kind_of(Verdict{}) == MessageKind::verdict);
  CHECK(to_string(MessageKind::challenge) == "CHALLENGE");
}

TEST_CASE("codec: random round trips") {
  gps::Rng rng(21);
  for (int i = 0; i < 500; ++i) {
    const BigUint v = gps::random_bits(rng, 1 + rng() % 2000);
    gps::ProverId id{};
    for (auto& b : id) b = static_cast<std::uint8_t>(rng());
    for (const Message& m : {Message{Commitment{id, v}}, Message{Challenge{v}}, Message{Response{v}},
                             Message{Verdict{(rng() & 1) != 0}}}) {
      const Frame f = encode(m);
      REQUIRE(decode(f) == m);
      // The stream reader finds the same frame boundary.
      std::size_t pos = 0;
      Frame padded = f;
      padded.push_back(0xee);
      const Frame read = read_frame([&](std::span<std::uint8_t> out) {
        if (pos + out.size() > padded.size()) throw gps::TransportError("short");
        std::copy_n(padded.begin() + pos, out.size(), out.begin());
        pos += out.size();
      });
      REQUIRE(read == f);
      REQUIRE(pos == f.size());
    }
  }
}

TEST_CASE("codec: malformed frames are rejected") {
  CHECK_THROWS_AS(decode(bytes({})), gps::FramingError);
  CHECK_THROWS_AS(decode(bytes({0x09})), gps::FramingError);
  CHECK_THROWS_AS(decode(bytes({0x04})), gps::FramingError);
  CHECK_THROWS_AS(decode(bytes({0x04, 0x02})), gps::FramingError);
  CHECK_THROWS_AS(decode(bytes({0x04, 0x01, 0x00})), gps::FramingError);
  CHECK_THROWS_AS(decode(bytes({0x02, 0, 0, 0, 2, 0x01})), gps::FramingError);
  CHECK_THROWS_AS(decode(bytes({0x02, 0, 0, 0, 2, 0x00, 0x01})), gps::FramingError);  // leading zero
  CHECK_THROWS_AS(decode(bytes({0x03, 0, 0, 0, 1, 0x00})), gps::FramingError);        // zero spelled out
  CHECK_THROWS_AS(decode(bytes({0x01, 1, 2, 3})), gps::FramingError);
  CHECK_THROWS_AS(decode(bytes({0x03, 0, 0, 0x10, 0x01})), gps::FramingError);  // 4097 bytes

  const auto no_data = [](std::span<std::uint8_t> out) {
    if (!out.empty()) {
      out[0] = 0x7f;
      std::fill(out.begin() + 1, out.end(), 0);
    }
  };
  CHECK_THROWS_AS(read_frame(no_data), gps::FramingError);
}

TEST_CASE("prover: coupons are consumed in order and never reused") {
  Fixture fx;
  auto prover = fx.prover();
  gps::Rng rng(1);
  for (std::uint64_t i = 0; i < 20; ++i) {
    auto verifier = fx.verifier();
    const Message c = prover.commit();
    CHECK(prover.current_index() == i);
    CHECK(std::get<Commitment>(c).x == gps::make_coupon(fx.profile, fx.seed.seed, i).x);
    CHECK_THROWS_AS(prover.commit(), gps::ProtocolError);  // already committed
    const Message y = prover.respond(verifier.on_commitment(c, rng));
    CHECK(std::get<Verdict>(verifier.on_response(y)).accept);
    CHECK(prover.state() == ProverState::done);
    prover.new_round();
  }
  CHECK_THROWS_AS(prover.commit(), gps::OutOfCoupons);
  CHECK(prover.state() == ProverState::idle);
}

TEST_CASE("prover: out-of-range challenge") {
  Fixture fx;
  auto prover = fx.prover();
  prover.commit();
  CHECK_THROWS_AS(prover.respond(Challenge{fx.profile.challenge_bound()}), gps::ProtocolError);
  CHECK(prover.state() == ProverState::done);
  CHECK_THROWS_AS(prover.respond(Challenge{1}), gps::ProtocolError);
}

TEST_CASE("verifier: unknown prover is rejected without a challenge") {
  Fixture fx;
  auto verifier = fx.verifier();
  gps::Rng rng(2);
  const Message reply = verifier.on_commitment(Commitment{{9, 9, 9, 9}, 5}, rng);
  REQUIRE(std::holds_alternative<Verdict>(reply));
  CHECK_FALSE(std::get<Verdict>(reply).accept);
  CHECK(verifier.state() == VerifierState::decided);
  CHECK(verifier.reason().find("unknown prover") != std::string::npos);
}

TEST_CASE("verifier: response checks") {
  Fixture fx;
  gps::Rng rng(3);
  for (int round = 0; round < 10; ++round) {
    auto prover = fx.prover();
    for (int k = 0; k < round; ++k) {
      prover.commit();
      prover.respond(Challenge{0});
      prover.new_round();
    }
    const Message c = prover.commit();
    auto verifier = fx.verifier();
    const Message ch = verifier.on_commitment(c, rng);
    const BigUint y = std::get<Response>(prover.respond(ch)).y;
    const BigUint n_v = std::get<Challenge>(ch).n_v;
    const BigUint x = std::get<Commitment>(c).x;

    CHECK(verify_response(fx.profile, fx.key.i_pub, x, n_v, y));
    CHECK_FALSE(verify_response(fx.profile, fx.key.i_pub, x, n_v, y + 1));
    CHECK_FALSE(verify_response(fx.profile, fx.key.i_pub, x, (n_v + 1) % fx.profile.challenge_bound(), y));
    // Out-of-range y is refused even though it satisfies the congruence.
    const BigUint order_multiple = y + fx.profile.response_bound();
    CHECK_FALSE(verify_response(fx.profile, fx.key.i_pub, x, n_v, order_multiple));

    auto bounded = fx.verifier();
    bounded.on_commitment(c, rng);
    const auto at_bound = std::get<Verdict>(bounded.on_response(Response{fx.profile.response_bound()}));
    CHECK_FALSE(at_bound.accept);
    CHECK(bounded.reason().find("outside") != std::string::npos);

    // Every single-bit flip of y is rejected.
    for (std::size_t bit = 0; bit < fx.profile.d_bits + 2; ++bit) {
      REQUIRE_FALSE(verify_response(fx.profile, fx.key.i_pub, x, n_v, y ^ gps::pow2(bit)));
    }
  }
}

TEST_CASE("golden toy round") {
  const auto g = read_golden("toy_round.txt");
  Fixture fx;
  CHECK(gps::to_hex(fx.profile.n) == g.at("n"));
  CHECK(gps::to_hex(fx.key.s) == g.at("s"));
  CHECK(gps::to_hex(fx.key.i_pub) == g.at("I"));

  ProverSession prover(fx.profile, fx.key, CouponSource(fx.profile, fx.seed), gps::datapath::Arch::serial, {}, 3);
  auto verifier = fx.verifier();
  gps::Rng rng(42);
  const Message c = prover.commit();
  CHECK(gps::to_hex(std::get<Commitment>(c).x) == g.at("x"));
  const Message ch = verifier.on_commitment(c, rng);
  CHECK(gps::to_hex(std::get<Challenge>(ch).n_v) == g.at("n_v"));
  const Message y = prover.respond(ch);
  CHECK(gps::to_hex(std::get<Response>(y).y) == g.at("y"));
  CHECK(gps::from_hex(g.at("y")) == gps::from_hex(g.at("r")) + gps::from_hex(g.at("n_v")) * fx.key.s);
  CHECK(std::get<Verdict>(verifier.on_response(y)).accept);
}

TEST_CASE("every architecture yields the same response") {
  Fixture fx;
  for (std::uint64_t n_v : {0ull, 1ull, 0x5aull, 0xffull}) {
    std::vector<BigUint> ys;
    for (auto arch : {gps::datapath::Arch::serial, gps::datapath::Arch::parallel, gps::datapath::Arch::hybrid}) {
      auto prover = fx.prover(arch);
      prover.commit();
      ys.push_back(std::get<Response>(prover.respond(Challenge{n_v})).y);
      REQUIRE(prover.last_datapath().has_value());
    }
    CHECK(ys[0] == ys[1]);
    CHECK(ys[1] == ys[2]);
  }
}

TEST_CASE("in-memory rounds") {
  Fixture fx;
  for (auto arch : {gps::datapath::Arch::serial, gps::datapath::Arch::parallel, gps::datapath::Arch::hybrid}) {
    auto prover = fx.prover(arch);
    gps::Rng rng(7);
    for (int i = 0; i < 8; ++i) {
      auto verifier = fx.verifier();
      const RoundResult res = run_round(prover, verifier, rng);
      CHECK(res.error.empty());
      CHECK(res.accepted);
      REQUIRE(res.transcript.size() == 4);
      CHECK(res.transcript[0].direction == Direction::to_verifier);
      CHECK(res.transcript[1].direction == Direction::to_prover);
      CHECK(decode(res.transcript[3].frame) == Message{Verdict{true}});
      prover.new_round();
    }
    CHECK(prover.next_index() == 8);
  }
}

TEST_CASE("tampered response frames never verify") {
  Fixture fx;
  auto prover = fx.prover();
  gps::Rng rng(8);
  const Message c = prover.commit();
  auto probe = fx.verifier();
  const Message ch = probe.on_commitment(c, rng);
  const Frame good = encode(prover.respond(ch));
  for (std::size_t bit = 0; bit < good.size() * 8; ++bit) {
    Frame bad = good;
    bad[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    auto verifier = fx.verifier();
    gps::Rng same(8);
    verifier.on_commitment(c, same);
    bool accepted = false;
    try {
      accepted = std::get<Verdict>(verifier.on_response(decode(bad))).accept;
    } catch (const gps::FramingError&) {
    }
    REQUIRE_FALSE(accepted);
  }
}

TEST_CASE("verifier timeout resets the session") {
  Fixture fx;
  auto [prover_end, verifier_end] = make_memory_pair(50ms);
  auto verifier = fx.verifier();
  auto prover = fx.prover();
  const Frame c = encode(prover.commit());
  prover_end->send(c);
  gps::Rng rng(9);
  CHECK_THROWS_AS(run_verifier(*verifier_end, verifier, rng), gps::TransportError);
  CHECK(verifier.state() == VerifierState::idle);
  CHECK_FALSE(verifier.pending_challenge().has_value());
}

TEST_CASE("garbage from the prover ends the round with a reject") {
  Fixture fx;
  auto [prover_end, verifier_end] = make_memory_pair(500ms);
  auto verifier = fx.verifier();
  auto prover = fx.prover();
  gps::Rng rng(10);
  std::thread t([&] {
    prover_end->send(encode(prover.commit()));
    prover_end->receive();
    prover_end->send(bytes({0x03, 0, 0, 0, 1, 0x00}));
  });
  const auto out = run_verifier(*verifier_end, verifier, rng);
  t.join();
  CHECK_FALSE(out.accepted);
  CHECK(out.reason.find("framing") != std::string::npos);
}

TEST_CASE("TCP round against the verifier server") {
  Fixture fx;
  VerifierServer::Options opts;
  opts.port = 0;
  opts.max_connections = 3;
  opts.seed = 11;
  VerifierServer server(fx.profile, fx.directory, opts);
  std::thread serve([&] { server.run(); });

  auto prover = fx.prover(gps::datapath::Arch::hybrid);
  for (int i = 0; i < 2; ++i) {
    auto link = TcpTransport::connect("127.0.0.1", server.port());
    CHECK(run_prover(*link, prover).accepted);
    prover.new_round();
  }
  // An impostor using someone else's public key but a wrong secret.
  gps::KeyPair impostor = fx.key;
  impostor.s = fx.key.s ^ 1;
  ProverSession bad(fx.profile, impostor, CouponSource(fx.profile, fx.seed));
  auto link = TcpTransport::connect("127.0.0.1", server.port());
  CHECK_FALSE(run_prover(*link, bad).accepted);

  serve.join();
  CHECK(server.accepted() == 2);
  CHECK(server.rejected() == 1);
}

TEST_CASE("connecting to a closed port is a transport error") {
  std::uint16_t port;
  {
    TcpListener l("127.0.0.1", 0);
    port = l.port();
  }
  CHECK_THROWS_AS(TcpTransport::connect("127.0.0.1", port, 200ms), gps::TransportError);
}
