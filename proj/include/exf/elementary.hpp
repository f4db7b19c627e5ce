#pragma once

#include "exf/bigint.hpp"
#include "exf/pfloat.hpp"
#include "exf/rational.hpp"

namespace exf {

// How many series terms to sum and the proven bound on what is dropped.
struct SeriesPlan {
  long terms = 1;
  long work_bits = 0;  // the truncation error target is 2^-work_bits
  Rat remainder_bound;
};

// Rational q with q <= log 2 <= q + 2^-bits, from sum_{i=1}^{bits} 1/(i 2^i).
// Results are cached per `bits`; the cache is safe for concurrent readers.
Rat log2_const(long bits);

// Binomial series of sqrt about 1 for |r - 1| <= 3/4: since |C(1/2, i)| <= 1
// the tail after N terms is at most 4 (3/4)^N. Picks the smallest N with
// 4 (3/4)^N <= 2^-target_bits.
SeriesPlan plan_sqrt(long target_bits);
// Taylor series of exp about 0 for 0 <= r <= radius < 1: the tail after N
// terms is at most 2 radius^N / N!. Smallest N with that <= 2^-target_bits.
SeriesPlan plan_exp(const Rat& radius, long target_bits);

// sum_{i<N} C(1/2, i) (r - 1)^i, exactly.
Rat sqrt_series(const Rat& r, const SeriesPlan& plan);
// sum_{i<N} r^i / i!, exactly.
Rat exp_series(const Rat& r, const SeriesPlan& plan);

struct SqrtReduction {
  Rat r;     // x = r * 2^k
  BigInt k;  // even
};

// For x = <m|e> > 0: r = m 2^-p, k = e + p when e + p is even; otherwise
// r = m 2^(-p-1), k = e + p + 1. r lands in [1/4, 1).
SqrtReduction range_reduce_sqrt(const PFloat& x);
// For a rational x = a/b > 0, via truncated division and floor log2.
// r lands in [1/4, 1].
SqrtReduction range_reduce_sqrt(const Rat& x);

// Correctly rounded square root. The rounding direction is settled by
// squaring the nearest breakpoint exactly, never by the series value alone.
PFloat f_sqrt(const PFloat& x);
// exp x with relative error at most 2^-p.
PFloat f_exp(const PFloat& x);

// sqrt x and exp x as exact rationals with relative error at most 2^-rel_bits.
Rat sqrt_rational(const Rat& x, long rel_bits);
Rat exp_rational(const Rat& x, long rel_bits);

}  // namespace exf
