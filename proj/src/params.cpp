#include "gps/params.hpp"

#include <array>
#include <istream>
#include <ostream>
#include <sstream>

#include <boost/multiprecision/miller_rabin.hpp>

#include "gps/arith.hpp"
#include "gps/errors.hpp"

namespace gps {

namespace {

constexpr std::array<ProfilePreset, 5> kPresets{{
    {"toy", 16, 8, 32},
    {"s128", 128, 32, 512},
    {"s256", 256, 32, 512},
    {"s512", 512, 32, 512},
    {"std180", 180, 32, 512},
}};

constexpr std::size_t kMaxPrimeCandidates = 100000;

BigUint random_prime(std::size_t bits, Rng& rng) {
  for (std::size_t attempt = 0; attempt < kMaxPrimeCandidates; ++attempt) {
    BigUint c = random_bits(rng, bits);
    boost::multiprecision::bit_set(c, static_cast<unsigned>(bits - 1));
    boost::multiprecision::bit_set(c, static_cast<unsigned>(bits - 2));
    boost::multiprecision::bit_set(c, 0);
    if (boost::multiprecision::miller_rabin_test(c, kMillerRabinRounds, rng)) return c;
  }
  throw GenerationError("no probable prime of " + std::to_string(bits) + " bits after " +
                        std::to_string(kMaxPrimeCandidates) + " candidates");
}

}  // namespace

std::span<const ProfilePreset> profile_presets() { return kPresets; }

const ProfilePreset& find_preset(std::string_view name) {
  for (const auto& p : kPresets) {
    if (p.name == name) return p;
  }
  throw ConfigError("unknown profile '" + std::string(name) + "'");
}

BigUint phi_for(std::size_t s_bits, std::size_t c_bits) {
  return (pow2(c_bits) - 1) * (pow2(s_bits) - 1);
}

void ParameterProfile::validate() const {
  if (d_bits != s_bits + c_bits + kCommitmentSlackBits) {
    throw ConfigError("profile " + name + ": d_bits must equal s_bits + c_bits + 80");
  }
  if (phi != phi_for(s_bits, c_bits)) throw ConfigError("profile " + name + ": bad phi");
  if (n <= 1 || !test_bit(n, 0)) throw ConfigError("profile " + name + ": n must be odd and > 1");
  if (bit_length(n) != n_bits) throw ConfigError("profile " + name + ": n_bits mismatch");
  if (g <= 1 || g >= n) throw ConfigError("profile " + name + ": g must satisfy 1 < g < n");
  if (arith::gcd(g, n) != 1) throw ConfigError("profile " + name + ": gcd(g, n) != 1");
}

ParameterProfile make_profile(std::string_view name, std::size_t prime_bits, Rng& rng) {
  if (prime_bits < 8) throw ConfigError("prime_bits must be >= 8");
  find_preset(name);
  BigUint p = random_prime(prime_bits, rng);
  BigUint q;
  do {
    q = random_prime(prime_bits, rng);
  } while (q == p);
  BigUint n = p * q;
  return profile_from_modulus(name, std::move(n), kDefaultGenerator);
}

ParameterProfile profile_from_modulus(std::string_view name, BigUint n, BigUint g) {
  const ProfilePreset& preset = find_preset(name);
  ParameterProfile prof;
  prof.name = std::string(name);
  prof.s_bits = preset.s_bits;
  prof.c_bits = preset.c_bits;
  prof.d_bits = preset.s_bits + preset.c_bits + kCommitmentSlackBits;
  prof.n_bits = bit_length(n);
  prof.n = std::move(n);
  prof.g = std::move(g);
  prof.phi = phi_for(prof.s_bits, prof.c_bits);
  prof.validate();
  return prof;
}

std::string prover_id_to_hex(const ProverId& id) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  for (std::uint8_t b : id) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xf]);
  }
  return out;
}

ProverId prover_id_from_hex(std::string_view hex) {
  if (hex.size() != 8) throw FormatError("prover id must be 8 hex digits");
  const auto bytes = to_bytes_be(from_hex(hex));
  ProverId id{};
  std::copy(bytes.begin(), bytes.end(), id.end() - static_cast<std::ptrdiff_t>(bytes.size()));
  return id;
}

KeyPair keypair_from_secret(const ParameterProfile& profile, BigUint s, ProverId id) {
  if (s >= profile.secret_bound()) throw DomainError("secret out of range [0, S[");
  const BigUint gs = arith::modexp(profile.g, s, profile.n);
  KeyPair kp;
  kp.i_pub = arith::modinv(gs, profile.n);
  kp.s = std::move(s);
  kp.id = id;
  return kp;
}

KeyPair keygen(const ParameterProfile& profile, Rng& rng) {
  BigUint s = random_bits(rng, profile.s_bits);
  ProverId id{};
  const std::uint64_t raw = rng();
  for (std::size_t i = 0; i < id.size(); ++i) id[i] = static_cast<std::uint8_t>(raw >> (8 * i));
  return keypair_from_secret(profile, std::move(s), id);
}

Coupon make_coupon(const ParameterProfile& profile, const Seed128& seed, std::uint64_t index) {
  Coupon c;
  c.index = index;
  c.r = prng_expand(seed, index).take_bits(profile.d_bits);
  c.x = arith::modexp(profile.g, c.r, profile.n);
  return c;
}

std::vector<Coupon> make_coupons(const ParameterProfile& profile, const KeyPair& /*keypair*/,
                                 const CouponSeed& seed, std::uint64_t count) {
  if (count < 1) throw ConfigError("coupon count must be >= 1");
  std::vector<Coupon> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) out.push_back(make_coupon(profile, seed.seed, i));
  return out;
}

// ---- file formats ----------------------------------------------------------

namespace {

std::string expect_field(std::istream& in, std::string_view key) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("missing line '" + std::string(key) + "='");
  const std::string prefix = std::string(key) + "=";
  if (line.rfind(prefix, 0) != 0) {
    throw FormatError("expected '" + prefix + "...', got '" + line + "'");
  }
  return line.substr(prefix.size());
}

void write_profile_lines(std::ostream& out, const ParameterProfile& p) {
  out << "n=" << to_hex(p.n) << "\n";
  out << "g=" << to_hex(p.g) << "\n";
}

}  // namespace

void write_key_file(std::ostream& out, const ParameterProfile& profile, const KeyPair& key) {
  out << "GPSKEY v1\n";
  out << "id=" << prover_id_to_hex(key.id) << "\n";
  out << "s=" << to_hex(key.s) << "\n";
  out << "I=" << to_hex(key.i_pub) << "\n";
  out << "profile=" << profile.name << "\n";
  write_profile_lines(out, profile);
}

KeyFile read_key_file(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header != "GPSKEY v1") {
    throw FormatError("not a GPSKEY v1 file");
  }
  KeyFile kf;
  kf.key.id = prover_id_from_hex(expect_field(in, "id"));
  kf.key.s = from_hex(expect_field(in, "s"));
  kf.key.i_pub = from_hex(expect_field(in, "I"));
  const std::string name = expect_field(in, "profile");
  BigUint n = from_hex(expect_field(in, "n"));
  BigUint g = from_hex(expect_field(in, "g"));
  kf.profile = profile_from_modulus(name, std::move(n), std::move(g));
  if (kf.key.s >= kf.profile.secret_bound()) throw FormatError("key file: s out of range");
  if (kf.key.i_pub >= kf.profile.n) throw FormatError("key file: I out of range");
  return kf;
}

void write_coupon_file(std::ostream& out, const ParameterProfile& profile,
                       std::span<const Coupon> coupons) {
  out << "GPSCOUPONS v1 " << profile.name << "\n";
  write_profile_lines(out, profile);
  for (const auto& c : coupons) {
    out << "i=" << c.index << " r=" << to_hex(c.r) << " x=" << to_hex(c.x) << "\n";
  }
}

CouponFile read_coupon_file(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw FormatError("empty coupon file");
  std::istringstream hs(header);
  std::string magic, version;
  CouponFile cf;
  hs >> magic >> version >> cf.profile_name;
  if (magic != "GPSCOUPONS" || version != "v1" || cf.profile_name.empty()) {
    throw FormatError("not a GPSCOUPONS v1 file");
  }
  cf.n = from_hex(expect_field(in, "n"));
  cf.g = from_hex(expect_field(in, "g"));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string fi, fr, fx, extra;
    ls >> fi >> fr >> fx;
    if (fi.rfind("i=", 0) != 0 || fr.rfind("r=", 0) != 0 || fx.rfind("x=", 0) != 0 || (ls >> extra)) {
      throw FormatError("malformed coupon line '" + line + "'");
    }
    Coupon c;
    try {
      c.index = std::stoull(fi.substr(2));
    } catch (const std::exception&) {
      throw FormatError("bad coupon index in '" + line + "'");
    }
    c.r = from_hex(fr.substr(2));
    c.x = from_hex(fx.substr(2));
    cf.coupons.push_back(std::move(c));
  }
  return cf;
}

}  // namespace gps
