#include "gps/protocol.hpp"

#include <exception>
#include <mutex>
#include <thread>

#include "gps/arith.hpp"
#include "gps/errors.hpp"

namespace gps::proto {

// ---- coupons ----------------------------------------------------------------

CouponSource::CouponSource(std::vector<Coupon> coupons) : store_(std::move(coupons)) {}

CouponSource::CouponSource(ParameterProfile profile, CouponSeed seed)
    : store_(std::make_pair(std::move(profile), seed)) {}

std::uint64_t CouponSource::size() const {
  if (const auto* list = std::get_if<std::vector<Coupon>>(&store_)) return list->size();
  return std::get<1>(store_).second.count;
}

Coupon CouponSource::at(std::uint64_t index) const {
  if (index >= size()) throw OutOfCoupons("coupon store exhausted at index " + std::to_string(index));
  if (const auto* list = std::get_if<std::vector<Coupon>>(&store_)) return (*list)[index];
  const auto& [profile, seed] = std::get<1>(store_);
  return make_coupon(profile, seed.seed, index);
}

// ---- prover -----------------------------------------------------------------

ProverSession::ProverSession(ParameterProfile profile, KeyPair key, CouponSource coupons, datapath::Arch arch,
                             datapath::ArchConfig cfg, std::uint64_t first_index)
    : profile_(std::move(profile)),
      key_(std::move(key)),
      coupons_(std::move(coupons)),
      responder_(arch, std::move(cfg), key_.s, profile_.widths()),
      next_index_(first_index) {}

void ProverSession::new_round() {
  if (state_ == ProverState::committed) throw ProtocolError("round in progress");
  state_ = ProverState::idle;
  current_.reset();
  coupon_.reset();
}

Message ProverSession::commit() {
  if (state_ != ProverState::idle) throw ProtocolError("commit requires an idle session");
  Coupon c = coupons_.at(next_index_);
  current_ = next_index_;
  ++next_index_;
  Commitment msg{key_.id, c.x};
  coupon_ = std::move(c);
  state_ = ProverState::committed;
  return msg;
}

Message ProverSession::respond(const Message& challenge) {
  return respond(challenge, responder_.arch(), responder_.config());
}

Message ProverSession::respond(const Message& challenge, datapath::Arch arch, const datapath::ArchConfig& cfg) {
  if (state_ != ProverState::committed) throw ProtocolError("respond requires a committed session");
  const auto* ch = std::get_if<Challenge>(&challenge);
  if (ch == nullptr) {
    state_ = ProverState::done;
    throw ProtocolError("expected CHALLENGE, got " + std::string(to_string(kind_of(challenge))));
  }
  if (ch->n_v < 0 || ch->n_v >= profile_.challenge_bound()) {
    state_ = ProverState::done;
    throw ProtocolError("challenge outside [0, C[");
  }
  if (arch == responder_.arch() && cfg == responder_.config()) {
    last_ = responder_.respond(ch->n_v, coupon_->r);
  } else {
    last_ = datapath::Responder(arch, cfg, key_.s, profile_.widths()).respond(ch->n_v, coupon_->r);
  }
  state_ = ProverState::done;
  return Response{last_->value};
}

// ---- verifier ---------------------------------------------------------------

bool verify_response(const ParameterProfile& profile, const BigUint& i_pub, const BigUint& x, const BigUint& n_v,
                     const BigUint& y) {
  if (y < 0 || y >= profile.response_bound()) return false;
  const BigUint lhs = (arith::modexp(profile.g, y, profile.n) * arith::modexp(i_pub, n_v, profile.n)) % profile.n;
  return lhs == x;
}

VerifierSession::VerifierSession(ParameterProfile profile, std::shared_ptr<const ProverDirectory> provers)
    : profile_(std::move(profile)), provers_(std::move(provers)) {
  if (!provers_) throw ConfigError("verifier needs a prover directory");
}

void VerifierSession::reset() {
  state_ = VerifierState::idle;
  prover_.reset();
  x_.reset();
  n_v_.reset();
  verdict_.reset();
  reason_.clear();
}

Message VerifierSession::decide(bool accept, std::string reason) {
  state_ = VerifierState::decided;
  verdict_ = accept;
  reason_ = std::move(reason);
  return Verdict{accept};
}

Message VerifierSession::on_commitment(const Message& commitment, Rng& rng) {
  if (state_ != VerifierState::idle) throw ProtocolError("commitment received outside an idle session");
  const auto* c = std::get_if<Commitment>(&commitment);
  if (c == nullptr) return decide(false, "expected COMMITMENT");
  prover_ = c->id;
  if (provers_->find(c->id) == provers_->end()) return decide(false, "unknown prover " + prover_id_to_hex(c->id));
  x_ = c->x;
  n_v_ = random_bits(rng, profile_.c_bits);
  state_ = VerifierState::challenged;
  return Challenge{*n_v_};
}

Message VerifierSession::on_response(const Message& response) {
  if (state_ != VerifierState::challenged) throw ProtocolError("response received without a pending challenge");
  const auto* r = std::get_if<Response>(&response);
  if (r == nullptr) return decide(false, "expected RESPONSE");
  if (r->y >= profile_.response_bound()) return decide(false, "response outside [0, D+Phi[");
  const BigUint& i_pub = provers_->at(*prover_);
  if (!verify_response(profile_, i_pub, *x_, *n_v_, r->y)) return decide(false, "verification equation failed");
  return decide(true, "ok");
}

// ---- round drivers ----------------------------------------------------------

namespace {

Message receive_message(Transport& link, std::vector<TranscriptEntry>* log) {
  Frame f = link.receive();
  Message m = decode(f);
  if (log) log->push_back({Direction::to_prover, std::move(f)});
  return m;
}

void send_message(Transport& link, const Message& m, Direction dir, std::vector<TranscriptEntry>* log) {
  Frame f = encode(m);
  link.send(f);
  if (log) log->push_back({dir, std::move(f)});
}

}  // namespace

ProverOutcome run_prover(Transport& link, ProverSession& session) {
  ProverOutcome out;
  send_message(link, session.commit(), Direction::to_verifier, &out.transcript);
  const Message reply = receive_message(link, &out.transcript);
  if (const auto* v = std::get_if<Verdict>(&reply)) {
    out.accepted = v->accept;
    return out;
  }
  send_message(link, session.respond(reply), Direction::to_verifier, &out.transcript);
  const Message verdict = receive_message(link, &out.transcript);
  const auto* v = std::get_if<Verdict>(&verdict);
  if (v == nullptr) throw ProtocolError("expected VERDICT");
  out.accepted = v->accept;
  return out;
}

VerifierOutcome run_verifier(Transport& link, VerifierSession& session, Rng& rng) {
  VerifierOutcome out;
  auto finish = [&] {
    out.accepted = session.verdict().value_or(false);
    out.reason = session.reason();
    return out;
  };
  try {
    Message first;
    try {
      first = decode(link.receive());
    } catch (const FramingError& e) {
      link.close();
      out.reason = std::string("framing error: ") + e.what();
      return out;
    }
    if (const auto* c = std::get_if<Commitment>(&first)) out.prover = c->id;
    const Message reply = session.on_commitment(first, rng);
    send_message(link, reply, Direction::to_prover, nullptr);
    if (session.state() == VerifierState::decided) return finish();

    Message second;
    try {
      second = decode(link.receive());
    } catch (const FramingError& e) {
      session.on_response(Verdict{false});  // any non-RESPONSE decides reject
      link.close();
      finish();
      out.reason = std::string("framing error: ") + e.what();
      return out;
    }
    send_message(link, session.on_response(second), Direction::to_prover, nullptr);
    return finish();
  } catch (const TransportError&) {
    session.reset();
    throw;
  }
}

RoundResult run_round(ProverSession& prover, VerifierSession& verifier, Rng& verifier_rng,
                      std::chrono::milliseconds timeout) {
  auto [prover_end, verifier_end] = make_memory_pair(timeout);
  std::exception_ptr verifier_error;
  std::thread verifier_thread([&, link = verifier_end.get()] {
    try {
      run_verifier(*link, verifier, verifier_rng);
    } catch (...) {
      verifier_error = std::current_exception();
    }
  });

  RoundResult result;
  try {
    ProverOutcome p = run_prover(*prover_end, prover);
    result.accepted = p.accepted;
    result.transcript = std::move(p.transcript);
  } catch (const std::exception& e) {
    result.error = e.what();
    prover_end->close();
  }
  verifier_thread.join();
  if (verifier_error && result.error.empty()) {
    try {
      std::rethrow_exception(verifier_error);
    } catch (const std::exception& e) {
      result.error = e.what();
    }
  }
  if (!result.error.empty()) {
    result.accepted = false;
    if (verifier.state() != VerifierState::decided) verifier.reset();
  }
  return result;
}

// ---- TCP server -------------------------------------------------------------

VerifierServer::VerifierServer(ParameterProfile profile, std::shared_ptr<const ProverDirectory> provers, Options opts)
    : profile_(std::move(profile)), provers_(std::move(provers)), opts_(std::move(opts)),
      listener_(opts_.host, opts_.port) {}

void VerifierServer::run(const Logger& log) {
  std::mutex log_mu;
  std::vector<std::thread> workers;
  for (std::uint64_t conn = 0; opts_.max_connections == 0 || conn < opts_.max_connections; ++conn) {
    std::shared_ptr<TcpTransport> link = listener_.accept(opts_.timeout);
    workers.emplace_back([this, conn, link, &log, &log_mu] {
      std::seed_seq seq{static_cast<std::uint32_t>(opts_.seed), static_cast<std::uint32_t>(opts_.seed >> 32),
                        static_cast<std::uint32_t>(conn), static_cast<std::uint32_t>(conn >> 32)};
      Rng rng(seq);
      VerifierSession session(profile_, provers_);
      VerifierOutcome outcome;
      std::string error;
      try {
        outcome = run_verifier(*link, session, rng);
      } catch (const std::exception& e) {
        error = e.what();
      }
      (outcome.accepted ? accepted_ : rejected_).fetch_add(1);
      link->close();
      if (log) {
        std::lock_guard lock(log_mu);
        log(conn, outcome, error);
      }
    });
  }
  for (auto& t : workers) t.join();
}

}  // namespace gps::proto
