#include "exf/pfloat.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <ostream>
#include <sstream>

#include "exf/errors.hpp"

namespace exf {

namespace {

// Exponents beyond this are never materialized as rationals.
constexpr long kMaxMaterializedExponent = 1L << 24;

std::size_t ceil_log2(std::size_t n) { return n <= 1 ? 0 : BigInt(n - 1).bit_length(); }

}  // namespace

void check_precision(int p) {
  if (p < 2) throw DomainError("precision must be at least 2 bits, got " + std::to_string(p));
}

bool exponent_in_range(const BigInt& e, int p) {
  const auto bits = static_cast<std::size_t>(p);
  if (e.sign() >= 0) return e.bit_length() <= bits;
  return (-e - BigInt(1)).bit_length() <= bits;
}

PFloat PFloat::make(BigInt m, BigInt e, int p) {
  check_precision(p);
  if (m.is_zero()) {
    if (!e.is_zero()) throw DomainError("zero must be <0|0>");
    return PFloat(std::move(m), std::move(e), p);
  }
  if (m.bit_length() != static_cast<std::size_t>(p)) {
    throw DomainError("significand " + m.str() + " is not a normalized " + std::to_string(p) + "-bit value");
  }
  if (!exponent_in_range(e, p)) throw OverflowError("exponent " + e.str() + " outside [-2^p, 2^p)");
  return PFloat(std::move(m), std::move(e), p);
}

PFloat PFloat::zero(int p) {
  check_precision(p);
  return PFloat(BigInt(0), BigInt(0), p);
}

PFloat PFloat::one(int p) { return make(BigInt::pow2(static_cast<std::size_t>(p - 1)), BigInt(1 - p), p); }

Rat PFloat::to_rat() const {
  if (is_zero()) return Rat(0);
  if (!e_.fits_long() || std::labs(e_.to_long()) > kMaxMaterializedExponent) {
    throw OverflowError("exponent " + e_.str() + " too large for an exact rational");
  }
  long e = e_.to_long();
  if (e >= 0) return Rat(m_ << static_cast<std::size_t>(e));
  return Rat(m_, BigInt::pow2(static_cast<std::size_t>(-e)));
}

double PFloat::to_double() const {
  if (is_zero()) return 0.0;
  // Scale the top 64 bits only so huge exponents degrade to inf/0.
  long shift = static_cast<long>(m_.bit_length()) - 64;
  BigInt top = shift > 0 ? (m_.abs() >> static_cast<std::size_t>(shift)) : m_.abs();
  double v = top.to_double();
  double e = e_.to_double() + static_cast<double>(std::max(shift, 0L));
  double out = std::ldexp(v, e > 1e6 ? 1000000 : (e < -1e6 ? -1000000 : static_cast<int>(e)));
  return m_.sign() < 0 ? -out : out;
}

std::string PFloat::str() const {
  std::ostringstream os;
  os << "{" << m_ << ", " << e_ << ", " << p_ << "}";
  return os.str();
}

std::ostream& operator<<(std::ostream& os, const PFloat& x) { return os << x.str(); }

PFloat round_scaled(const BigInt& num, const BigInt& den, const BigInt& exp2, int p, int tail) {
  check_precision(p);
  if (den.sign() <= 0) throw DomainError("round_scaled requires a positive denominator");
  if (num.is_zero()) return PFloat::zero(p);
  const int sign = num.sign();
  const BigInt mag = num.abs();

  // t = floor(log2(mag / den))
  long t = static_cast<long>(mag.bit_length()) - static_cast<long>(den.bit_length());
  const bool below = t >= 0 ? mag < (den << static_cast<std::size_t>(t))
                            : (mag << static_cast<std::size_t>(-t)) < den;
  if (below) --t;

  // Scale by 2^s so the quotient lands in [2^(p-1), 2^p).
  const long s = static_cast<long>(p) - 1 - t;
  const BigInt scaled_num = s >= 0 ? mag << static_cast<std::size_t>(s) : mag;
  const BigInt scaled_den = s >= 0 ? den : den << static_cast<std::size_t>(-s);
  mpz_class q, r;
  mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), scaled_num.mpz().get_mpz_t(), scaled_den.mpz().get_mpz_t());

  const int half = cmp(mpz_class(r * 2), scaled_den.mpz());
  bool up = false;
  if (half > 0) {
    up = true;
  } else if (half == 0) {
    const int toward = tail * sign;  // tail relative to the magnitude
    up = toward > 0 || (toward == 0 && mpz_odd_p(q.get_mpz_t()));
  }
  BigInt e = exp2 - BigInt(s);
  if (up) {
    q += 1;
    if (mpz_sizeinbase(q.get_mpz_t(), 2) > static_cast<std::size_t>(p)) {
      q >>= 1;
      e += BigInt(1);
    }
  }
  if (!exponent_in_range(e, p)) {
    throw OverflowError(std::string(e.sign() > 0 ? "exponent overflow" : "exponent underflow") +
                        ": " + e.str() + " outside [-2^" + std::to_string(p) + ", 2^" + std::to_string(p) + ")");
  }
  BigInt m(std::move(q));
  return PFloat(sign < 0 ? -m : m, std::move(e), p);
}

PFloat round_p(const Rat& x, int p) { return round_scaled(x.num(), x.den(), BigInt(0), p); }

PFloat round_p(const UnnormFloat& x, int p) {
  if (x.m.is_zero()) return PFloat::zero(p);
  return round_scaled(x.m, BigInt(1), x.e, p);
}

PFloat round_p(const PFloat& x, int p) { return round_p(x.unnorm(), p); }

bool is_breakpoint(const UnnormFloat& x, int p) {
  const std::size_t q = x.m.bit_length();
  if (q <= static_cast<std::size_t>(p)) return false;
  const std::size_t shift = q - static_cast<std::size_t>(p);
  const BigInt mag = x.m.abs();
  const BigInt low = mag - ((mag >> shift) << shift);
  return low == BigInt::pow2(shift - 1);
}

UnnormFloat guard_sticky_div(const BigInt& a, const BigInt& b) {
  const BigInt four_a = a << 2;
  const BigInt t = int_trunc_div(four_a, b);
  const bool inexact = t * b != four_a;
  return {(t << 1) + BigInt(inexact ? 1 : 0), BigInt(-3)};
}

UnnormFloat guard_sticky_shift(const BigInt& m, const BigInt& shift) {
  if (shift.sign() < 0) throw DomainError("negative shift");
  if (shift <= BigInt(2)) return {m << static_cast<std::size_t>(3 - shift.to_long()), BigInt(-3)};
  const BigInt sh = shift - BigInt(2);
  BigInt t;
  bool inexact = false;
  if (sh > BigInt(m.bit_length() + 1)) {
    t = BigInt(m.sign() < 0 ? -1 : 0);
    inexact = !m.is_zero();
  } else {
    const auto k = static_cast<std::size_t>(sh.to_long());
    t = m >> k;
    inexact = (t << k) != m;
  }
  return {(t << 1) + BigInt(inexact ? 1 : 0), BigInt(-3)};
}

namespace {

void check_same_precision(const PFloat& x, const PFloat& y) {
  if (x.p() != y.p()) {
    throw DomainError("precision mismatch: " + std::to_string(x.p()) + " vs " + std::to_string(y.p()));
  }
}

}  // namespace

PFloat f_add(const PFloat& x, const PFloat& y) {
  check_same_precision(x, y);
  if (x.is_zero()) return y;
  if (y.is_zero()) return x;
  const PFloat& hi = x.e() >= y.e() ? x : y;
  const PFloat& lo = x.e() >= y.e() ? y : x;
  // <m1 + m2 // 2^(e1-e2) | e1>, carried with three fractional bits
  const UnnormFloat tail = guard_sticky_shift(lo.m(), hi.e() - lo.e());
  return round_p(UnnormFloat{(hi.m() << 3) + tail.m, hi.e() - BigInt(3)}, x.p());
}

PFloat f_neg(const PFloat& x) {
  if (x.is_zero()) return x;
  return PFloat::make(-x.m(), x.e(), x.p());
}

PFloat f_sub(const PFloat& x, const PFloat& y) { return f_add(x, f_neg(y)); }

PFloat f_mul(const PFloat& x, const PFloat& y) {
  check_same_precision(x, y);
  if (x.is_zero() || y.is_zero()) return PFloat::zero(x.p());
  return round_p(UnnormFloat{x.m() * y.m(), x.e() + y.e()}, x.p());
}

PFloat f_div(const PFloat& x, const PFloat& y) {
  check_same_precision(x, y);
  if (y.is_zero()) throw DomainError("float division by zero");
  if (x.is_zero()) return PFloat::zero(x.p());
  const int p = x.p();
  // <m1 2^(p-1) // m2 | e1 - e2 - p + 1>
  const UnnormFloat q = guard_sticky_div(x.m().abs() << static_cast<std::size_t>(p - 1), y.m().abs());
  const BigInt m = x.sign() * y.sign() < 0 ? -q.m : q.m;
  return round_p(UnnormFloat{m, x.e() - y.e() - BigInt(p - 1) + q.e}, p);
}

PFloat f_arith(FloatOp op, const PFloat& x, const PFloat& y) {
  switch (op) {
    case FloatOp::add: return f_add(x, y);
    case FloatOp::mul: return f_mul(x, y);
    case FloatOp::div: return f_div(x, y);
  }
  throw DomainError("unknown float operation");
}

Cmp cmp_abs(const UnnormFloat& x, const UnnormFloat& y) {
  if (x.m.is_zero() || y.m.is_zero()) {
    return to_cmp(static_cast<int>(!x.m.is_zero()) - static_cast<int>(!y.m.is_zero()));
  }
  const BigInt top_x = x.e + BigInt(x.m.bit_length());
  const BigInt top_y = y.e + BigInt(y.m.bit_length());
  if (top_x != top_y) return int_cmp(top_x, top_y);
  // Same leading bit position, so the exponent gap is at most the bit length.
  const BigInt gap = x.e - y.e;
  const BigInt ax = x.m.abs();
  const BigInt ay = y.m.abs();
  if (gap.sign() >= 0) return int_cmp(ax << static_cast<std::size_t>(gap.to_long()), ay);
  return int_cmp(ax, ay << static_cast<std::size_t>((-gap).to_long()));
}

Cmp f_cmp(const PFloat& x, const PFloat& y) {
  check_same_precision(x, y);
  if (x.sign() != y.sign()) return to_cmp(x.sign() - y.sign());
  if (x.is_zero()) return Cmp::eq;
  Cmp mag = cmp_abs(x.unnorm(), y.unnorm());
  if (x.sign() > 0) return mag;
  return mag == Cmp::lt ? Cmp::gt : (mag == Cmp::gt ? Cmp::lt : Cmp::eq);
}

PFloat f_prod(std::span<const PFloat> xs) {
  if (xs.empty()) throw DomainError("f_prod of an empty list");
  const int p = xs.front().p();
  std::vector<BigInt> ms;
  BigInt e_sum(0);
  for (const auto& x : xs) {
    check_same_precision(xs.front(), x);
    if (x.is_zero()) return PFloat::zero(p);
    ms.push_back(x.m());
    e_sum += x.e();
  }
  return round_p(UnnormFloat{int_prod(ms), e_sum}, p);
}

long block_gap(int p, std::size_t n) { return 2L * p + static_cast<long>(ceil_log2(n)); }

std::vector<std::vector<std::size_t>> partition_blocks(std::span<const PFloat> xs) {
  std::vector<std::vector<std::size_t>> blocks;
  if (xs.empty()) return blocks;
  for (const auto& x : xs) {
    if (x.is_zero()) throw DomainError("partition_blocks requires nonzero summands");
  }
  const BigInt gap(block_gap(xs.front().p(), xs.size()));
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a].e() < xs[b].e(); });
  // Sorted exponents: the transitive closure splits exactly at gaps >= threshold.
  blocks.push_back({order.front()});
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (xs[order[k]].e() - xs[order[k - 1]].e() >= gap) blocks.emplace_back();
    blocks.back().push_back(order[k]);
  }
  return blocks;
}

BlockSumDetail f_sum_blocks_detail(std::span<const PFloat> xs, int p) {
  check_precision(p);
  BlockSumDetail out;
  out.result = PFloat::zero(p);
  std::vector<PFloat> nonzero;
  for (const auto& x : xs) {
    if (x.p() != p) throw DomainError("precision mismatch in f_sum_blocks");
    if (!x.is_zero()) nonzero.push_back(x);
  }
  out.blocks = partition_blocks(nonzero);

  // Step 2: exact unnormalized sum of each block, anchored at its minimal exponent.
  for (const auto& block : out.blocks) {
    const BigInt& anchor = nonzero[block.front()].e();
    BigInt sum(0);
    for (std::size_t i : block) {
      sum += nonzero[i].m() << static_cast<std::size_t>((nonzero[i].e() - anchor).to_long());
    }
    out.block_sums.push_back({std::move(sum), anchor});
  }

  // Step 3: largest and second-largest block sums by magnitude.
  auto pick = [&](std::optional<std::size_t> skip) {
    std::optional<std::size_t> best;
    for (std::size_t b = 0; b < out.block_sums.size(); ++b) {
      if (b == skip || out.block_sums[b].m.is_zero()) continue;
      if (!best || cmp_abs(out.block_sums[b], out.block_sums[*best]) == Cmp::gt) best = b;
    }
    return best;
  };
  out.leading = pick(std::nullopt);
  if (!out.leading) {
    out.which_case = 1;
    return out;
  }
  out.second = pick(out.leading);
  const UnnormFloat& lead = out.block_sums[*out.leading];
  if (is_breakpoint(lead, p)) {
    // The remainder is smaller than half an ulp of the leading sum, so only
    // its sign (the sign of s(2)) decides the direction.
    out.which_case = 2;
    const int tail = out.second ? out.block_sums[*out.second].m.sign() : 0;
    out.result = round_scaled(lead.m, BigInt(1), lead.e, p, tail);
  } else {
    out.which_case = 3;
    out.result = round_p(lead, p);
  }
  return out;
}

PFloat f_sum_blocks(std::span<const PFloat> xs, int p) { return f_sum_blocks_detail(xs, p).result; }

PFloat f_sum_oracle(std::span<const PFloat> xs, int p) {
  check_precision(p);
  if (xs.empty()) return PFloat::zero(p);
  std::vector<Rat> values;
  values.reserve(xs.size());
  for (const auto& x : xs) {
    if (x.p() != p) throw DomainError("precision mismatch in f_sum_oracle");
    values.push_back(x.to_rat());
  }
  return round_p(rat_sum(values), p);
}

}  // namespace exf
