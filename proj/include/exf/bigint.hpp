#pragma once

#include <gmpxx.h>

#include <compare>
#include <concepts>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

namespace exf {

static_assert(sizeof(long) == 8, "BigInt assumes LP64");

enum class Cmp { lt = -1, eq = 0, gt = 1 };

inline Cmp to_cmp(int c) { return c < 0 ? Cmp::lt : (c > 0 ? Cmp::gt : Cmp::eq); }

// Arbitrary-precision signed integer. Immutable value type over GMP's mpz.
// Zero has sign 0 and bit length 0.
class BigInt {
 public:
  BigInt() = default;
  template <std::signed_integral T>
  BigInt(T v) : v_(static_cast<long>(v)) {}  // NOLINT(google-explicit-constructor)
  template <std::unsigned_integral T>
  BigInt(T v) : v_(static_cast<unsigned long>(v)) {}  // NOLINT(google-explicit-constructor)
  explicit BigInt(mpz_class v) : v_(std::move(v)) {}

  // Decimal: optional '-', digits, no leading zeros (except "0"), no "-0".
  static BigInt parse(std::string_view text);
  static BigInt pow2(std::size_t k);

  std::string str() const { return v_.get_str(10); }
  int sign() const { return sgn(v_); }
  bool is_zero() const { return sign() == 0; }
  bool is_odd() const { return mpz_odd_p(v_.get_mpz_t()) != 0; }
  // Number of bits of |x|; 0 for zero.
  std::size_t bit_length() const {
    return is_zero() ? 0 : mpz_sizeinbase(v_.get_mpz_t(), 2);
  }
  BigInt abs() const {
    mpz_class r;
    mpz_abs(r.get_mpz_t(), v_.get_mpz_t());
    return BigInt(std::move(r));
  }
  bool fits_long() const { return v_.fits_slong_p(); }
  long to_long() const;
  double to_double() const { return v_.get_d(); }
  const mpz_class& mpz() const { return v_; }

  BigInt operator-() const { return BigInt(mpz_class(-v_)); }
  friend BigInt operator+(const BigInt& a, const BigInt& b) { return BigInt(mpz_class(a.v_ + b.v_)); }
  friend BigInt operator-(const BigInt& a, const BigInt& b) { return BigInt(mpz_class(a.v_ - b.v_)); }
  friend BigInt operator*(const BigInt& a, const BigInt& b) { return BigInt(mpz_class(a.v_ * b.v_)); }
  friend BigInt operator<<(const BigInt& a, std::size_t k) { return BigInt(mpz_class(a.v_ << k)); }
  // Floor shift (rounds toward -inf for negatives).
  friend BigInt operator>>(const BigInt& a, std::size_t k);
  BigInt& operator+=(const BigInt& o) { v_ += o.v_; return *this; }
  BigInt& operator-=(const BigInt& o) { v_ -= o.v_; return *this; }
  BigInt& operator*=(const BigInt& o) { v_ *= o.v_; return *this; }

  friend bool operator==(const BigInt& a, const BigInt& b) { return cmp(a.v_, b.v_) == 0; }
  friend std::strong_ordering operator<=>(const BigInt& a, const BigInt& b) {
    int c = cmp(a.v_, b.v_);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

 private:
  mpz_class v_;
};

std::ostream& operator<<(std::ostream& os, const BigInt& x);

BigInt int_add(const BigInt& a, const BigInt& b);
Cmp int_cmp(const BigInt& a, const BigInt& b);
// Throws DomainError on an empty list.
BigInt int_max(std::span<const BigInt> xs);
// floor(log2 x) for x >= 1; DomainError otherwise.
BigInt int_floor_log2(const BigInt& x);
BigInt int_sum(std::span<const BigInt> xs);
BigInt int_mul(const BigInt& a, const BigInt& b);
BigInt int_prod(std::span<const BigInt> xs);
// floor(a / b) for b >= 1, also for negative a; DomainError when b <= 0.
BigInt int_trunc_div(const BigInt& a, const BigInt& b);
// Floor remainder matching int_trunc_div: a - b*floor(a/b), in [0, b).
BigInt int_floor_mod(const BigInt& a, const BigInt& b);
BigInt int_gcd(const BigInt& a, const BigInt& b);
// floor(sqrt x) for x >= 0.
BigInt int_isqrt(const BigInt& x);

}  // namespace exf
