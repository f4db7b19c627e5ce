#include "exf/rational.hpp"

#include <gmp.h>

#include <ostream>

#include "exf/errors.hpp"

namespace exf {

Rat::Rat(BigInt num, BigInt den) : Rat(rat_normalize(RawRat{std::move(num), std::move(den)})) {}

Rat rat_normalize(const RawRat& x) {
  if (x.den.sign() <= 0) throw DomainError("rational denominator must be >= 1, got " + x.den.str());
  if (x.num.is_zero()) return Rat(BigInt(0), BigInt(1), Rat::Canonical{});
  BigInt g = int_gcd(x.num, x.den);
  if (g == BigInt(1)) return Rat(x.num, x.den, Rat::Canonical{});
  mpz_class n, d;
  mpz_divexact(n.get_mpz_t(), x.num.mpz().get_mpz_t(), g.mpz().get_mpz_t());
  mpz_divexact(d.get_mpz_t(), x.den.mpz().get_mpz_t(), g.mpz().get_mpz_t());
  return Rat(BigInt(std::move(n)), BigInt(std::move(d)), Rat::Canonical{});
}

Rat Rat::parse(std::string_view text) {
  auto slash = text.find('/');
  if (slash == std::string_view::npos) return Rat(BigInt::parse(text));
  BigInt num = BigInt::parse(text.substr(0, slash));
  BigInt den = BigInt::parse(text.substr(slash + 1));
  if (den.sign() <= 0) throw DomainError("rational denominator must be >= 1 in '" + std::string(text) + "'");
  if (int_gcd(num, den) != BigInt(1)) {
    throw DomainError("non-canonical rational '" + std::string(text) + "'");
  }
  return Rat(std::move(num), std::move(den), Canonical{});
}

std::string Rat::str() const {
  if (is_integer()) return num_.str();
  return num_.str() + "/" + den_.str();
}

double Rat::to_double() const {
  mpq_class q(num_.mpz(), den_.mpz());
  return q.get_d();
}

Rat Rat::operator-() const { return Rat(-num_, den_, Canonical{}); }

Rat operator+(const Rat& x, const Rat& y) { return rat_arith(RatOp::add, x, y); }
Rat operator-(const Rat& x, const Rat& y) { return rat_arith(RatOp::add, x, -y); }
Rat operator*(const Rat& x, const Rat& y) { return rat_arith(RatOp::mul, x, y); }
Rat operator/(const Rat& x, const Rat& y) { return rat_arith(RatOp::div, x, y); }

std::strong_ordering operator<=>(const Rat& x, const Rat& y) {
  switch (rat_cmp(x, y)) {
    case Cmp::lt: return std::strong_ordering::less;
    case Cmp::gt: return std::strong_ordering::greater;
    default: return std::strong_ordering::equal;
  }
}

std::ostream& operator<<(std::ostream& os, const Rat& x) { return os << x.str(); }

RawRat rat_add_raw(const Rat& x, const Rat& y) {
  return {x.num() * y.den() + x.den() * y.num(), x.den() * y.den()};
}

RawRat rat_mul_raw(const Rat& x, const Rat& y) { return {x.num() * y.num(), x.den() * y.den()}; }

RawRat rat_div_raw(const Rat& x, const Rat& y) {
  if (y.is_zero()) throw DomainError("rational division by zero");
  RawRat r{x.num() * y.den(), x.den() * y.num()};
  if (r.den.sign() < 0) {
    r.num = -r.num;
    r.den = -r.den;
  }
  return r;
}

Rat rat_arith(RatOp op, const Rat& x, const Rat& y) {
  switch (op) {
    case RatOp::add: return rat_normalize(rat_add_raw(x, y));
    case RatOp::mul: return rat_normalize(rat_mul_raw(x, y));
    case RatOp::div: return rat_normalize(rat_div_raw(x, y));
  }
  throw DomainError("unknown rational operation");
}

Cmp rat_cmp(const Rat& x, const Rat& y) {
  if (x.sign() != y.sign()) return to_cmp(x.sign() - y.sign());
  return int_cmp(x.num() * y.den(), y.num() * x.den());
}

namespace {

// B = prod b_j and the rescaled numerators a_i * B / b_i.
std::pair<BigInt, std::vector<BigInt>> common_denominator(std::span<const Rat> xs) {
  std::vector<BigInt> dens;
  dens.reserve(xs.size());
  for (const auto& x : xs) dens.push_back(x.den());
  BigInt big_b = int_prod(dens);
  std::vector<BigInt> scaled;
  scaled.reserve(xs.size());
  for (const auto& x : xs) {
    if (x.is_integer()) {
      scaled.push_back(x.num() * big_b);
      continue;
    }
    mpz_class q;
    mpz_divexact(q.get_mpz_t(), big_b.mpz().get_mpz_t(), x.den().mpz().get_mpz_t());
    scaled.push_back(x.num() * BigInt(std::move(q)));
  }
  return {std::move(big_b), std::move(scaled)};
}

}  // namespace

RawRat rat_sum_raw(std::span<const Rat> xs) {
  if (xs.empty()) throw DomainError("rat_sum of an empty list");
  auto [big_b, scaled] = common_denominator(xs);
  return {int_sum(scaled), std::move(big_b)};
}

Rat rat_sum(std::span<const Rat> xs) { return rat_normalize(rat_sum_raw(xs)); }

Rat rat_max(std::span<const Rat> xs) {
  if (xs.empty()) throw DomainError("rat_max of an empty list");
  auto [big_b, scaled] = common_denominator(xs);
  return rat_normalize({int_max(scaled), std::move(big_b)});
}

Rat rat_prod(std::span<const Rat> xs) {
  if (xs.empty()) throw DomainError("rat_prod of an empty list");
  std::vector<BigInt> nums, dens;
  nums.reserve(xs.size());
  dens.reserve(xs.size());
  for (const auto& x : xs) {
    nums.push_back(x.num());
    dens.push_back(x.den());
  }
  return rat_normalize({int_prod(nums), int_prod(dens)});
}

std::pair<BigInt, BigInt> rat_bits(const Rat& x) {
  return {BigInt(x.num().bit_length()), BigInt(x.den().bit_length())};
}

Rat pow2_rat(long k) {
  if (k >= 0) return Rat(BigInt::pow2(static_cast<std::size_t>(k)));
  return Rat(BigInt(1), BigInt::pow2(static_cast<std::size_t>(-k)));
}

BigInt rat_floor(const Rat& x) { return int_trunc_div(x.num(), x.den()); }

Rat rat_truncate(const Rat& x, std::size_t bits) {
  const auto den_bits = x.den().bit_length();
  const bool den_is_pow2 = mpz_scan1(x.den().mpz().get_mpz_t(), 0) + 1 == den_bits;
  if (den_is_pow2 && den_bits <= bits + 1) return x;
  return Rat(int_trunc_div(x.num() << bits, x.den()), BigInt::pow2(bits));
}

Rat rat_sqrt_lower(const Rat& x, std::size_t bits) {
  if (x.sign() < 0) throw DomainError("sqrt of a negative rational");
  // sqrt(a/b) = sqrt(a b) / b
  BigInt s = int_isqrt((x.num() * x.den()) << (2 * bits));
  return Rat(s, x.den() << bits);
}

Rat rat_sqrt_upper(const Rat& x, std::size_t bits) {
  if (x.sign() < 0) throw DomainError("sqrt of a negative rational");
  BigInt scaled = (x.num() * x.den()) << (2 * bits);
  BigInt s = int_isqrt(scaled);
  if (s * s != scaled) s += BigInt(1);
  return Rat(s, x.den() << bits);
}

}  // namespace exf
