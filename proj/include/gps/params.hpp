#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gps/biguint.hpp"
#include "gps/prng.hpp"

namespace gps {

using Rng = std::mt19937_64;

/// |D| - |S| - |C|.
inline constexpr std::size_t kCommitmentSlackBits = 80;

/// Bit widths of the secret, challenge and commitment operands.
struct Widths {
  std::size_t s_bits = 0;
  std::size_t c_bits = 0;
  std::size_t d_bits = 0;

  static constexpr Widths for_secret(std::size_t s_bits, std::size_t c_bits) {
    return {s_bits, c_bits, s_bits + c_bits + kCommitmentSlackBits};
  }
  friend bool operator==(const Widths&, const Widths&) = default;
};

struct ProfilePreset {
  std::string_view name;
  std::size_t s_bits;
  std::size_t c_bits;
  std::size_t prime_bits;  ///< default; n has 2*prime_bits bits
};

std::span<const ProfilePreset> profile_presets();

/// Throws ConfigError for an unknown name.
const ProfilePreset& find_preset(std::string_view name);

/// Public parameters for one security level. S = 2^s_bits and C = 2^c_bits.
struct ParameterProfile {
  std::string name;
  std::size_t s_bits = 0;
  std::size_t c_bits = 0;
  std::size_t d_bits = 0;
  std::size_t n_bits = 0;
  BigUint n;
  BigUint g;
  BigUint phi;

  Widths widths() const { return {s_bits, c_bits, d_bits}; }
  BigUint secret_bound() const { return pow2(s_bits); }
  BigUint challenge_bound() const { return pow2(c_bits); }
  BigUint commitment_bound() const { return pow2(d_bits); }
  /// D + Phi; honest responses are strictly below this.
  BigUint response_bound() const { return commitment_bound() + phi; }

  /// Throws ConfigError when any invariant is broken.
  void validate() const;
};

inline constexpr unsigned kMillerRabinRounds = 40;
inline constexpr unsigned kDefaultGenerator = 2;

/// n = p*q for two distinct probable primes of prime_bits bits each (top two bits set,
/// so n has exactly 2*prime_bits bits). p and q do not outlive the call.
ParameterProfile make_profile(std::string_view name, std::size_t prime_bits, Rng& rng);

/// Rebuilds a profile from a preset name and a known modulus/base (file loading).
ParameterProfile profile_from_modulus(std::string_view name, BigUint n, BigUint g);

/// (C-1)*(S-1) for power-of-two bounds.
BigUint phi_for(std::size_t s_bits, std::size_t c_bits);

/// Id_P, 4 bytes.
using ProverId = std::array<std::uint8_t, 4>;

std::string prover_id_to_hex(const ProverId& id);
ProverId prover_id_from_hex(std::string_view hex);

struct KeyPair {
  BigUint s;
  BigUint i_pub;  ///< g^-s mod n
  ProverId id{};
};

KeyPair keygen(const ParameterProfile& profile, Rng& rng);

/// Key pair for a given secret (I = g^-s mod n). Throws InversionError when g^s is not
/// invertible mod n and DomainError when s >= S.
KeyPair keypair_from_secret(const ParameterProfile& profile, BigUint s, ProverId id);

struct Coupon {
  std::uint64_t index = 0;
  BigUint r;
  BigUint x;  ///< g^r mod n

  friend bool operator==(const Coupon&, const Coupon&) = default;
};

struct CouponSeed {
  Seed128 seed{};
  std::uint64_t count = 0;
};

/// Coupon `index` regenerated from the seed: r is the first d_bits bits of
/// prng_expand(seed, index).
Coupon make_coupon(const ParameterProfile& profile, const Seed128& seed, std::uint64_t index);

/// Coupons 0..count-1. The key pair is not needed for the arithmetic; it is taken so the
/// call site reads as the trusted entity issuing coupons for a given prover.
std::vector<Coupon> make_coupons(const ParameterProfile& profile, const KeyPair& keypair,
                                 const CouponSeed& seed, std::uint64_t count);

// Text file formats.

struct CouponFile {
  std::string profile_name;
  BigUint n;
  BigUint g;
  std::vector<Coupon> coupons;
};

void write_key_file(std::ostream& out, const ParameterProfile& profile, const KeyPair& key);

struct KeyFile {
  ParameterProfile profile;
  KeyPair key;
};

KeyFile read_key_file(std::istream& in);

void write_coupon_file(std::ostream& out, const ParameterProfile& profile,
                       std::span<const Coupon> coupons);
CouponFile read_coupon_file(std::istream& in);

}  // namespace gps
