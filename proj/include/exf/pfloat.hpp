#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exf/bigint.hpp"
#include "exf/rational.hpp"

namespace exf {

// <m|e> with no constraint on |m|; value m * 2^e. Block sums live here.
struct UnnormFloat {
  BigInt m;
  BigInt e;
};

// p-bit float <m|e>: |m| in {0} u [2^(p-1), 2^p), e in [-2^p, 2^p),
// value m * 2^e, zero is <0|0>. No infinities, NaNs or subnormals.
// Precision p >= 2 (at p = 1 both neighbours of a breakpoint are odd).
class PFloat {
 public:
  // Validates the invariants: DomainError for a malformed significand,
  // OverflowError for an exponent outside [-2^p, 2^p).
  static PFloat make(BigInt m, BigInt e, int p);
  static PFloat zero(int p);
  static PFloat one(int p);

  const BigInt& m() const { return m_; }
  const BigInt& e() const { return e_; }
  int p() const { return p_; }
  int sign() const { return m_.sign(); }
  bool is_zero() const { return m_.is_zero(); }

  // Exact value. OverflowError when |e| is too large to materialize.
  Rat to_rat() const;
  UnnormFloat unnorm() const { return {m_, e_}; }
  double to_double() const;
  // "{m, e, p}"
  std::string str() const;

  friend bool operator==(const PFloat& a, const PFloat& b) = default;

 private:
  PFloat(BigInt m, BigInt e, int p) : m_(std::move(m)), e_(std::move(e)), p_(p) {}
  friend PFloat round_scaled(const BigInt&, const BigInt&, const BigInt&, int, int);

  BigInt m_;
  BigInt e_;
  int p_ = 2;
};

std::ostream& operator<<(std::ostream& os, const PFloat& x);

void check_precision(int p);
// e in [-2^p, 2^p)
bool exponent_in_range(const BigInt& e, int p);

// Nearest p-bit float to (num / den) * 2^exp2, ties to the even significand.
// `tail` (-1, 0, +1) stands for an infinitesimal added to the value; it only
// matters when the value sits exactly on a breakpoint. den must be positive.
PFloat round_scaled(const BigInt& num, const BigInt& den, const BigInt& exp2, int p, int tail = 0);

PFloat round_p(const Rat& x, int p);
PFloat round_p(const UnnormFloat& x, int p);
PFloat round_p(const PFloat& x, int p);

// True when x lies exactly midway between two adjacent p-bit floats.
bool is_breakpoint(const UnnormFloat& x, int p);

// a // b for b >= 1: a/b when it is a multiple of 1/4, otherwise
// floor_{1/4}(a/b) + 1/8. The result carries guard, round and sticky bits
// and is returned as <8 (a//b) | -3>.
UnnormFloat guard_sticky_div(const BigInt& a, const BigInt& b);
// m // 2^shift, with shift possibly huge; same encoding as guard_sticky_div.
UnnormFloat guard_sticky_shift(const BigInt& m, const BigInt& shift);

enum class FloatOp { add, mul, div };

PFloat f_add(const PFloat& x, const PFloat& y);
PFloat f_sub(const PFloat& x, const PFloat& y);
PFloat f_mul(const PFloat& x, const PFloat& y);
PFloat f_div(const PFloat& x, const PFloat& y);
PFloat f_arith(FloatOp op, const PFloat& x, const PFloat& y);
PFloat f_neg(const PFloat& x);
Cmp f_cmp(const PFloat& x, const PFloat& y);
// Exact comparison of |x| and |y| for unnormalized floats.
Cmp cmp_abs(const UnnormFloat& x, const UnnormFloat& y);

PFloat f_prod(std::span<const PFloat> xs);

// Threshold 2p + ceil(log2 n) of the relation i ~ j.
long block_gap(int p, std::size_t n);
// Equivalence classes of the transitive closure of |e_i - e_j| < 2p + ceil(log2 n).
// Blocks are ordered by increasing exponent; indices within a block likewise.
// Zero summands are a DomainError.
std::vector<std::vector<std::size_t>> partition_blocks(std::span<const PFloat> xs);

struct BlockSumDetail {
  std::vector<std::vector<std::size_t>> blocks;  // indices into the nonzero summands
  std::vector<UnnormFloat> block_sums;           // anchored at each block's minimal exponent
  std::optional<std::size_t> leading;            // s(1)
  std::optional<std::size_t> second;             // s(2)
  int which_case = 1;                            // 1: zero, 2: breakpoint, 3: plain rounding
  PFloat result = PFloat::zero(2);
};

// Rounded exact sum of n floats via the block decomposition.
BlockSumDetail f_sum_blocks_detail(std::span<const PFloat> xs, int p);
PFloat f_sum_blocks(std::span<const PFloat> xs, int p);
// Reference semantics: exact rational sum, then one rounding.
PFloat f_sum_oracle(std::span<const PFloat> xs, int p);

}  // namespace exf
