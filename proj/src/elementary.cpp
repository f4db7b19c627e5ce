#include "exf/elementary.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <shared_mutex>

#include "exf/errors.hpp"

namespace exf {

namespace {

// 1733/2500 = 0.6932 > log 2; bounds the reduced exp argument.
const Rat& exp_radius() {
  static const Rat radius(BigInt(1733), BigInt(2500));
  return radius;
}

Rat compute_log2(long bits) {
  const long n = bits + 1;
  // Common denominator D = 2^(n-1) lcm(1..n-1); term i is D / (i 2^i).
  mpz_class lcm(1);
  for (long i = 2; i < n; ++i) mpz_lcm_ui(lcm.get_mpz_t(), lcm.get_mpz_t(), static_cast<unsigned long>(i));
  mpz_class sum(0);
  for (long i = 1; i < n; ++i) {
    mpz_class term = lcm / static_cast<unsigned long>(i);
    term <<= static_cast<mp_bitcnt_t>(n - 1 - i);
    sum += term;
  }
  mpz_class den = lcm << static_cast<mp_bitcnt_t>(n - 1);
  return Rat(BigInt(std::move(sum)), BigInt(std::move(den)));
}

long ceil_log2_above(const Rat& x) {
  // Smallest b with 2^b >= ceil(|x|) + 2.
  const BigInt a = rat_floor(x.abs()) + BigInt(3);
  return static_cast<long>(a.bit_length());
}

}  // namespace

Rat log2_const(long bits) {
  if (bits < 1) throw DomainError("log2_const requires bits >= 1");
  static std::shared_mutex mutex;
  static std::map<long, Rat> cache;
  {
    std::shared_lock lock(mutex);
    if (auto it = cache.find(bits); it != cache.end()) return it->second;
  }
  Rat value = compute_log2(bits);
  std::unique_lock lock(mutex);
  return cache.emplace(bits, std::move(value)).first->second;
}

SeriesPlan plan_sqrt(long target_bits) {
  if (target_bits < 0) throw DomainError("negative target precision");
  // 4 (3/4)^N <= 2^-t  <=>  4 * 3^N * 2^t <= 4^N
  mpz_class lhs = mpz_class(4) << static_cast<mp_bitcnt_t>(target_bits);
  mpz_class rhs(1);
  long n = 0;
  while (lhs > rhs) {
    lhs *= 3;
    rhs <<= 2;
    ++n;
  }
  n = std::max(n, 1L);
  mpz_class three_n, four_n;
  mpz_ui_pow_ui(three_n.get_mpz_t(), 3, static_cast<unsigned long>(n));
  mpz_ui_pow_ui(four_n.get_mpz_t(), 4, static_cast<unsigned long>(n));
  Rat bound(BigInt(mpz_class(three_n * 4)), BigInt(std::move(four_n)));
  return {n, target_bits, std::move(bound)};
}

SeriesPlan plan_exp(const Rat& radius, long target_bits) {
  if (radius.sign() < 0 || radius >= Rat(1)) throw DomainError("exp series radius must lie in [0, 1)");
  const Rat target = pow2_rat(-target_bits);
  // tail after N terms <= 2 radius^N / N!
  Rat term(1);
  long n = 0;
  Rat tail = Rat(2) * term;
  while (tail > target) {
    ++n;
    term = term * radius / Rat(n);
    tail = Rat(2) * term;
  }
  return {std::max(n, 1L), target_bits, tail};
}

Rat sqrt_series(const Rat& r, const SeriesPlan& plan) {
  // Horner in integers: acc = 1 + c_{i+1}/c_i * t * acc, c_{i+1}/c_i = (1 - 2i) / (2 (i + 1)).
  const Rat t = r - Rat(1);
  const mpz_class& u = t.num().mpz();
  const mpz_class& v = t.den().mpz();
  mpz_class num(1), den(1);
  for (long i = plan.terms - 2; i >= 0; --i) {
    mpz_class step = v * (2 * (i + 1));
    mpz_class next_num = den * step + mpz_class(u * (1 - 2 * i)) * num;
    den *= step;
    num = std::move(next_num);
  }
  return Rat(BigInt(std::move(num)), BigInt(std::move(den)));
}

Rat exp_series(const Rat& r, const SeriesPlan& plan) {
  const mpz_class& u = r.num().mpz();
  const mpz_class& v = r.den().mpz();
  mpz_class num(1), den(1);
  for (long i = plan.terms - 2; i >= 0; --i) {
    mpz_class step = v * (i + 1);
    mpz_class next_num = den * step + u * num;
    den *= step;
    num = std::move(next_num);
  }
  return Rat(BigInt(std::move(num)), BigInt(std::move(den)));
}

SqrtReduction range_reduce_sqrt(const PFloat& x) {
  if (x.sign() <= 0) throw DomainError("sqrt range reduction requires x > 0");
  const auto p = static_cast<std::size_t>(x.p());
  BigInt k = x.e() + BigInt(x.p());
  if (!k.is_odd()) return {Rat(x.m(), BigInt::pow2(p)), k};
  return {Rat(x.m(), BigInt::pow2(p + 1)), k + BigInt(1)};
}

SqrtReduction range_reduce_sqrt(const Rat& x) {
  if (x.sign() <= 0) throw DomainError("sqrt range reduction requires x > 0");
  const BigInt& a = x.num();
  const BigInt& b = x.den();
  long k = 0;
  if (a >= b) {
    // 2^(k-1) <= a/b < 2^k
    k = int_floor_log2(int_trunc_div(a, b)).to_long() + 1;
  } else {
    // 2^-(j+1) < a/b <= 2^-j with j = floor(log2 floor(b/a))
    k = -int_floor_log2(int_trunc_div(b, a)).to_long();
  }
  if (k % 2 != 0) ++k;
  return {x * pow2_rat(-k), BigInt(k)};
}

PFloat f_sqrt(const PFloat& x) {
  const int p = x.p();
  if (x.sign() < 0) throw DomainError("sqrt of a negative float");
  if (x.is_zero()) return PFloat::zero(p);
  const auto pz = static_cast<std::size_t>(p);
  const auto [r, k] = range_reduce_sqrt(x);

  // |y - sqrt r| <= 2^(-p-3)
  const Rat y = sqrt_series(r, plan_sqrt(p + 3));

  // sqrt r lies in [1/2, 1): candidates j 2^-p, breakpoints (2j+1) 2^(-p-1).
  const BigInt lo = BigInt::pow2(pz - 1);
  const BigInt hi = BigInt::pow2(pz) - BigInt(1);
  BigInt j = rat_floor(y * Rat(BigInt::pow2(pz)));
  j = std::clamp(j, lo, hi);
  // Compare breakpoint^2 = (2j+1)^2 / 2^(2p+2) against r exactly.
  const BigInt odd = (j << 1) + BigInt(1);
  const Cmp c = int_cmp(odd * odd * r.den(), r.num() << (2 * pz + 2));
  BigInt sig = j;
  if (c == Cmp::lt || (c == Cmp::eq && j.is_odd())) sig += BigInt(1);
  return round_p(UnnormFloat{sig, (k >> 1) - BigInt(p)}, p);
}

PFloat f_exp(const PFloat& x) {
  const int p = x.p();
  if (x.is_zero()) return PFloat::one(p);
  // |x| < 2^top
  const BigInt top = x.e() + BigInt(x.m().bit_length());
  if (top > BigInt(p + 2)) {
    throw OverflowError(x.sign() > 0 ? "exp overflow: result exponent beyond 2^p"
                                     : "exp underflow: result exponent below -2^p");
  }
  // exp x is within 2^(-2p-7) of 1 and rounds to it.
  if (top < BigInt(-2 * p - 8)) return PFloat::one(p);
  // An approximation with relative error 2^(-2p-3) still lands within
  // 2^-p after the final rounding.
  return round_p(exp_rational(x.to_rat(), 2L * p + 3), p);
}

Rat sqrt_rational(const Rat& x, long rel_bits) {
  if (x.sign() < 0) throw DomainError("sqrt of a negative rational");
  if (x.is_zero()) return Rat(0);
  const auto [r, k] = range_reduce_sqrt(x);
  // Truncating r costs at most 2^(-t-4); the series another 2^(-t-2).
  const Rat r_short = rat_truncate(r, static_cast<std::size_t>(rel_bits + 4));
  const Rat y = sqrt_series(r_short, plan_sqrt(rel_bits + 2));
  return y * pow2_rat((k >> 1).to_long());
}

Rat exp_rational(const Rat& x, long rel_bits) {
  if (x.is_zero()) return Rat(1);
  const auto trunc_bits = static_cast<std::size_t>(rel_bits + 8);
  const Rat x_short = rat_truncate(x, trunc_bits);
  // |k| 2^-bits <= 2^(-t-5)
  const long bits = rel_bits + ceil_log2_above(x_short) + 6;
  const Rat log2 = log2_const(bits);
  const BigInt k = rat_floor(x_short / log2);
  if (k.bit_length() > 40) throw OverflowError("exp argument too large: " + x.str());
  // r in [0, log2) exactly; truncation keeps it there.
  const Rat r = rat_truncate(x_short - Rat(k) * log2, trunc_bits);
  const Rat series = exp_series(r, plan_exp(exp_radius(), rel_bits + 3));
  return series * pow2_rat(k.to_long());
}

}  // namespace exf
