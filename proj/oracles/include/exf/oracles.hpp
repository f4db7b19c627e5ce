#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "exf/pfloat.hpp"
#include "exf/rational.hpp"

// Reference implementations that share no code path with the library
// routines they check: candidate enumeration, MPFR, exact breakpoint search.
namespace exf::oracle {

// Nearest p-bit float found by scanning every significand of the three
// binades around x and comparing exact distances. Meant for small p.
PFloat round_enum(const Rat& x, int p);
// MPFR's round-to-nearest-even of the exact rational at precision p.
PFloat round_mpfr(const Rat& x, int p);

// Correctly rounded sqrt: binary search for the largest candidate whose
// square is <= x, then square the breakpoint above it exactly.
PFloat sqrt_search(const PFloat& x);

// |y - exp x| / exp x, evaluated with MPFR at 4p + 64 bits, as log2 (or
// -inf when y is exact). `within` tells whether it is <= 2^-bound_bits.
struct RelError {
  double log2_error;
  bool within;
};
RelError exp_rel_error(const PFloat& x, const PFloat& y, long bound_bits);
// Same for an exact rational approximation y of exp x at `bits` precision.
RelError exp_rel_error(const Rat& x, const Rat& y, long bound_bits, long work_bits);
RelError sqrt_rel_error(const Rat& x, const Rat& y, long bound_bits, long work_bits);
// |q - log 2| <= 2^-bits
bool log2_within(const Rat& q, long bits);

// One random trial of the softmax perturbation bound: scores, eps, delta =
// min(1/2, eps/16), score perturbations and exp relative errors bounded by
// delta. Returns the worst componentwise deviation divided by delta (must be
// <= 16) and a description for reproducers.
struct DeltaTrial {
  double ratio;   // observed deviation / allowed deviation, <= 1 passes
  bool ok;
  std::string detail;
};
DeltaTrial softmax_delta_trial(std::mt19937_64& rng);
// 1/sqrt(x) for x >= c with x^ = x + h, |h| <= delta and relative sqrt
// error eta, |eta| <= delta, delta from inv_sqrt_delta(c, eps).
DeltaTrial invsqrt_delta_trial(std::mt19937_64& rng);

// Decimal schoolbook arithmetic on strings, for the integer kernel.
std::string decimal_add(const std::string& a, const std::string& b);
std::string decimal_mul(const std::string& a, const std::string& b);

}  // namespace exf::oracle
