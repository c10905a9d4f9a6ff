#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gps/datapath.hpp"
#include "gps/message.hpp"
#include "gps/params.hpp"
#include "gps/transport.hpp"

namespace gps::proto {

/// Coupons either held explicitly or regenerated from a seed on demand.
class CouponSource {
 public:
  explicit CouponSource(std::vector<Coupon> coupons);
  CouponSource(ParameterProfile profile, CouponSeed seed);

  std::uint64_t size() const;
  /// Throws OutOfCoupons past the end.
  Coupon at(std::uint64_t index) const;

 private:
  std::variant<std::vector<Coupon>, std::pair<ParameterProfile, CouponSeed>> store_;
};

enum class ProverState { idle, committed, done };

class ProverSession {
 public:
  ProverSession(ParameterProfile profile, KeyPair key, CouponSource coupons, datapath::Arch arch = datapath::Arch::serial,
                datapath::ArchConfig cfg = {}, std::uint64_t first_index = 0);

  ProverState state() const { return state_; }
  /// Index of the next unused coupon.
  std::uint64_t next_index() const { return next_index_; }
  /// Coupon bound to the current round (valid once committed).
  std::optional<std::uint64_t> current_index() const { return current_; }
  const ParameterProfile& profile() const { return profile_; }
  const KeyPair& key() const { return key_; }

  /// Done -> Idle, ready for the next round.
  void new_round();

  /// Emits (Id_P, x_i) for the next unused coupon. Throws OutOfCoupons (state stays Idle)
  /// or ProtocolError when not Idle.
  Message commit();

  /// y = r_i + n_V*s through the session's datapath. An out-of-range challenge throws
  /// ProtocolError and leaves the session Done.
  Message respond(const Message& challenge);
  Message respond(const Message& challenge, datapath::Arch arch, const datapath::ArchConfig& cfg);

  /// Datapath run behind the last response (cycles, trace).
  const std::optional<datapath::DatapathResult>& last_datapath() const { return last_; }

 private:
  ParameterProfile profile_;
  KeyPair key_;
  CouponSource coupons_;
  datapath::Responder responder_;
  ProverState state_ = ProverState::idle;
  std::uint64_t next_index_;
  std::optional<std::uint64_t> current_;
  std::optional<Coupon> coupon_;
  std::optional<datapath::DatapathResult> last_;
};

using ProverDirectory = std::map<ProverId, BigUint>;

enum class VerifierState { idle, challenged, decided };

/// g^y * I^n_V mod n == x and y < D + Phi.
bool verify_response(const ParameterProfile& profile, const BigUint& i_pub, const BigUint& x, const BigUint& n_v,
                     const BigUint& y);

class VerifierSession {
 public:
  VerifierSession(ParameterProfile profile, std::shared_ptr<const ProverDirectory> provers);

  VerifierState state() const { return state_; }
  std::optional<bool> verdict() const { return verdict_; }
  const std::optional<BigUint>& pending_challenge() const { return n_v_; }
  const std::string& reason() const { return reason_; }

  /// CHALLENGE for a known prover, VERDICT(reject) otherwise.
  Message on_commitment(const Message& commitment, Rng& rng);
  /// Always a VERDICT; failed checks are a reject, not an error.
  Message on_response(const Message& response);

  /// Back to Idle, dropping any pending round.
  void reset();

 private:
  Message decide(bool accept, std::string reason);

  ParameterProfile profile_;
  std::shared_ptr<const ProverDirectory> provers_;
  VerifierState state_ = VerifierState::idle;
  std::optional<ProverId> prover_;
  std::optional<BigUint> x_;
  std::optional<BigUint> n_v_;
  std::optional<bool> verdict_;
  std::string reason_;
};

enum class Direction { to_verifier, to_prover };

struct TranscriptEntry {
  Direction direction;
  Frame frame;
};

struct ProverOutcome {
  bool accepted = false;
  std::vector<TranscriptEntry> transcript;
};

/// Prover side of one round over `link`. Throws TransportError, FramingError or
/// ProtocolError.
ProverOutcome run_prover(Transport& link, ProverSession& session);

struct VerifierOutcome {
  bool accepted = false;
  std::optional<ProverId> prover;
  std::string reason;
};

/// Verifier side of one round. On transport failure the session is reset to Idle and
/// the error is rethrown; malformed frames end the round with a reject.
VerifierOutcome run_verifier(Transport& link, VerifierSession& session, Rng& rng);

struct RoundResult {
  bool accepted = false;
  std::vector<TranscriptEntry> transcript;
  std::string error;  ///< empty unless the round was aborted
};

/// Drives a full four-message round between two sessions over an in-memory link.
RoundResult run_round(ProverSession& prover, VerifierSession& verifier, Rng& verifier_rng,
                      std::chrono::milliseconds timeout = kDefaultTimeout);

/// Verifier TCP endpoint: one round per connection, one thread per connection.
class VerifierServer {
 public:
  struct Options {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
    std::chrono::milliseconds timeout = kDefaultTimeout;
    std::uint64_t seed = 0;
    /// Stop after this many connections; 0 serves forever.
    std::uint64_t max_connections = 0;
  };

  using Logger = std::function<void(std::uint64_t connection, const VerifierOutcome&, const std::string& error)>;

  VerifierServer(ParameterProfile profile, std::shared_ptr<const ProverDirectory> provers, Options opts);

  std::uint16_t port() const { return listener_.port(); }

  /// Accepts connections until max_connections have been served.
  void run(const Logger& log = {});

  std::uint64_t accepted() const { return accepted_.load(); }
  std::uint64_t rejected() const { return rejected_.load(); }

 private:
  ParameterProfile profile_;
  std::shared_ptr<const ProverDirectory> provers_;
  Options opts_;
  TcpListener listener_;
  std::atomic<std::uint64_t> accepted_{0};
  std::atomic<std::uint64_t> rejected_{0};
};

}  // namespace gps::proto
