#pragma once

#include <compare>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "exf/bigint.hpp"

namespace exf {

// An unreduced pair <a|b> exactly as the cross-multiplication formulas
// produce it. `den` is positive.
struct RawRat {
  BigInt num;
  BigInt den;
};

// Exact rational num/den, always canonical: den >= 1, gcd(|num|, den) = 1,
// zero is 0/1.
class Rat {
 public:
  Rat() : num_(0), den_(1) {}
  template <std::integral T>
  Rat(T v) : num_(v), den_(1) {}  // NOLINT(google-explicit-constructor)
  Rat(BigInt v) : num_(std::move(v)), den_(1) {}  // NOLINT(google-explicit-constructor)
  // Reduces; throws DomainError when den <= 0.
  Rat(BigInt num, BigInt den);

  // "a/b" or "a" with decimal integers. Rejects non-canonical forms
  // (den <= 0, common factors, leading zeros, "+").
  static Rat parse(std::string_view text);
  // "a" when den == 1, otherwise "a/b".
  std::string str() const;

  const BigInt& num() const { return num_; }
  const BigInt& den() const { return den_; }
  int sign() const { return num_.sign(); }
  bool is_zero() const { return num_.is_zero(); }
  bool is_integer() const { return den_ == BigInt(1); }
  double to_double() const;
  Rat abs() const { return sign() < 0 ? -*this : *this; }

  Rat operator-() const;
  friend Rat operator+(const Rat& x, const Rat& y);
  friend Rat operator-(const Rat& x, const Rat& y);
  friend Rat operator*(const Rat& x, const Rat& y);
  friend Rat operator/(const Rat& x, const Rat& y);
  Rat& operator+=(const Rat& o) { return *this = *this + o; }
  Rat& operator-=(const Rat& o) { return *this = *this - o; }
  Rat& operator*=(const Rat& o) { return *this = *this * o; }

  friend bool operator==(const Rat& x, const Rat& y) {
    return x.num_ == y.num_ && x.den_ == y.den_;
  }
  friend std::strong_ordering operator<=>(const Rat& x, const Rat& y);

 private:
  struct Canonical {};
  Rat(BigInt num, BigInt den, Canonical) : num_(std::move(num)), den_(std::move(den)) {}
  friend Rat rat_normalize(const RawRat& x);

  BigInt num_;
  BigInt den_;
};

std::ostream& operator<<(std::ostream& os, const Rat& x);

enum class RatOp { add, mul, div };

// Unreduced results of the cross-multiplication formulas.
//   <a1|b1> + <a2|b2> = <a1 b2 + b1 a2 | b1 b2>
//   <a1|b1> * <a2|b2> = <a1 a2 | b1 b2>
//   <a1|b1> / <a2|b2> = <a1 b2 | b1 a2>   (sign moved to the numerator)
RawRat rat_add_raw(const Rat& x, const Rat& y);
RawRat rat_mul_raw(const Rat& x, const Rat& y);
RawRat rat_div_raw(const Rat& x, const Rat& y);

Rat rat_normalize(const RawRat& x);
Rat rat_arith(RatOp op, const Rat& x, const Rat& y);
Cmp rat_cmp(const Rat& x, const Rat& y);

// n-ary sum and maximum over the common denominator B = prod b_j:
//   sum <a_i|b_i> = < sum a_i B/b_i | B >.
// Empty lists are a DomainError.
RawRat rat_sum_raw(std::span<const Rat> xs);
Rat rat_sum(std::span<const Rat> xs);
Rat rat_max(std::span<const Rat> xs);
// <prod a_i | prod b_i>
Rat rat_prod(std::span<const Rat> xs);

// Bit lengths of |num| and den.
std::pair<BigInt, BigInt> rat_bits(const Rat& x);

Rat pow2_rat(long k);
BigInt rat_floor(const Rat& x);
// floor(x * 2^bits) / 2^bits
Rat rat_truncate(const Rat& x, std::size_t bits);
// Rational enclosure of sqrt(x), x >= 0, with width <= 2^-bits / den(x).
Rat rat_sqrt_lower(const Rat& x, std::size_t bits);
Rat rat_sqrt_upper(const Rat& x, std::size_t bits);

}  // namespace exf
