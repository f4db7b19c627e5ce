#include "exf/bigint.hpp"

#include <ostream>

#include "exf/errors.hpp"

namespace exf {

BigInt BigInt::parse(std::string_view text) {
  std::string_view digits = text;
  bool negative = false;
  if (!digits.empty() && digits.front() == '-') {
    negative = true;
    digits.remove_prefix(1);
  }
  if (digits.empty()) throw DomainError("empty integer literal");
  for (char c : digits) {
    if (c < '0' || c > '9') throw DomainError("invalid integer literal '" + std::string(text) + "'");
  }
  if (digits.size() > 1 && digits.front() == '0') {
    throw DomainError("leading zeros in integer literal '" + std::string(text) + "'");
  }
  if (negative && digits == "0") throw DomainError("'-0' is not a canonical integer");
  mpz_class v(std::string(digits), 10);
  return BigInt(negative ? mpz_class(-v) : v);
}

BigInt BigInt::pow2(std::size_t k) {
  mpz_class v;
  mpz_setbit(v.get_mpz_t(), k);
  return BigInt(std::move(v));
}

long BigInt::to_long() const {
  if (!fits_long()) throw OverflowError("integer does not fit in 64 bits: " + str());
  return v_.get_si();
}

BigInt operator>>(const BigInt& a, std::size_t k) {
  mpz_class r;
  mpz_fdiv_q_2exp(r.get_mpz_t(), a.v_.get_mpz_t(), k);
  return BigInt(std::move(r));
}

std::ostream& operator<<(std::ostream& os, const BigInt& x) { return os << x.str(); }

BigInt int_add(const BigInt& a, const BigInt& b) { return a + b; }

Cmp int_cmp(const BigInt& a, const BigInt& b) { return to_cmp(cmp(a.mpz(), b.mpz())); }

BigInt int_max(std::span<const BigInt> xs) {
  if (xs.empty()) throw DomainError("int_max of an empty list");
  const BigInt* best = &xs.front();
  for (const auto& x : xs.subspan(1)) {
    if (int_cmp(x, *best) == Cmp::gt) best = &x;
  }
  return *best;
}

BigInt int_floor_log2(const BigInt& x) {
  if (x.sign() <= 0) throw DomainError("floor_log2 requires x >= 1, got " + x.str());
  return BigInt(static_cast<long>(x.bit_length()) - 1);
}

BigInt int_sum(std::span<const BigInt> xs) {
  mpz_class acc;
  for (const auto& x : xs) acc += x.mpz();
  return BigInt(std::move(acc));
}

BigInt int_mul(const BigInt& a, const BigInt& b) { return a * b; }

BigInt int_prod(std::span<const BigInt> xs) {
  mpz_class acc(1);
  for (const auto& x : xs) acc *= x.mpz();
  return BigInt(std::move(acc));
}

BigInt int_trunc_div(const BigInt& a, const BigInt& b) {
  if (b.sign() <= 0) throw DomainError("truncated division requires divisor >= 1, got " + b.str());
  mpz_class q;
  mpz_fdiv_q(q.get_mpz_t(), a.mpz().get_mpz_t(), b.mpz().get_mpz_t());
  return BigInt(std::move(q));
}

BigInt int_floor_mod(const BigInt& a, const BigInt& b) {
  if (b.sign() <= 0) throw DomainError("floor modulus requires divisor >= 1, got " + b.str());
  mpz_class r;
  mpz_fdiv_r(r.get_mpz_t(), a.mpz().get_mpz_t(), b.mpz().get_mpz_t());
  return BigInt(std::move(r));
}

BigInt int_gcd(const BigInt& a, const BigInt& b) {
  mpz_class g;
  mpz_gcd(g.get_mpz_t(), a.mpz().get_mpz_t(), b.mpz().get_mpz_t());
  return BigInt(std::move(g));
}

BigInt int_isqrt(const BigInt& x) {
  if (x.sign() < 0) throw DomainError("isqrt of a negative integer");
  mpz_class r;
  mpz_sqrt(r.get_mpz_t(), x.mpz().get_mpz_t());
  return BigInt(std::move(r));
}

}  // namespace exf
