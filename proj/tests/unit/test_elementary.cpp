#include <doctest.h>

#include <random>

#include "exf/elementary.hpp"
#include "exf/errors.hpp"
#include "exf/oracles.hpp"
#include "helpers.hpp"

using namespace exf;
using exf::test::F;
using exf::test::R;

namespace {

Rat pow_rat(const Rat& x, long n) {
  Rat r(1);
  for (long i = 0; i < n; ++i) r *= x;
  return r;
}

bool is_even(const BigInt& k) { return !k.is_odd(); }

Rat times_pow2(const Rat& r, const BigInt& k) { return r * pow2_rat(k.to_long()); }

}  // namespace

TEST_SUITE("elementary") {
  TEST_CASE("log 2 constant") {
    const Rat q1 = log2_const(1);
    CHECK(oracle::log2_within(q1, 1));
    for (long bits : {10L, 53L, 200L}) CHECK(oracle::log2_within(log2_const(bits), bits));
    CHECK(log2_const(10) < test::Q("6932", "10000"));
    CHECK(log2_const(10) > test::Q("6921", "10000"));
  }

  TEST_CASE("sqrt range reduction, float input") {
    const SqrtReduction a = range_reduce_sqrt(F(4, 0, 3));
    CHECK(a.r == R("1/4"));
    CHECK(a.k == BigInt(4));
    const SqrtReduction b = range_reduce_sqrt(F(4, -1, 3));   // 2: e + p = 2 even
    CHECK(b.r == R("1/2"));
    CHECK(b.k == BigInt(2));
    std::mt19937_64 rng(6);
    for (int i = 0; i < 300; ++i) {
      const int p = 2 + static_cast<int>(rng() % 30);
      const long m = (1L << (p - 1)) + static_cast<long>(rng() % (1UL << (p - 1)));
      const long lim = p < 6 ? (1L << p) - 1 : 30;
      const long e = static_cast<long>(rng() % static_cast<unsigned long>(2 * lim + 1)) - lim;
      const PFloat x = F(m, e, p);
      const SqrtReduction s = range_reduce_sqrt(x);
      CHECK(is_even(s.k));
      CHECK(s.r >= R("1/4"));
      CHECK(s.r < R("1"));
      CHECK(times_pow2(s.r, s.k) == x.to_rat());
    }
  }

  TEST_CASE("sqrt range reduction, rational input") {
    // a < b with floor(b/a) = 5: subtracting one more from k would leave r = 1/5
    const SqrtReduction f = range_reduce_sqrt(R("1/5"));
    CHECK(f.r >= R("1/4"));
    CHECK(times_pow2(f.r, f.k) == R("1/5"));
    std::mt19937_64 rng(16);
    for (int i = 0; i < 500; ++i) {
      const Rat x(BigInt(1 + static_cast<long>(rng() % 1000000)), BigInt(1 + static_cast<long>(rng() % 1000000)));
      const SqrtReduction s = range_reduce_sqrt(x);
      CHECK(is_even(s.k));
      CHECK(s.r >= R("1/4"));
      CHECK(s.r <= R("1"));
      CHECK(times_pow2(s.r, s.k) == x);
    }
    CHECK_THROWS_AS(range_reduce_sqrt(R("0")), DomainError);
  }

  TEST_CASE("series plans") {
    for (long t : {1L, 10L, 56L, 200L}) {
      const SeriesPlan s = plan_sqrt(t);
      CHECK(Rat(4) * pow_rat(R("3/4"), s.terms) <= pow2_rat(-t));
      CHECK(Rat(4) * pow_rat(R("3/4"), s.terms - 1) > pow2_rat(-t));
    }
    const SeriesPlan e = plan_exp(R("1733/2500"), 60);
    CHECK(e.remainder_bound <= pow2_rat(-60));
  }

  TEST_CASE("series values against MPFR") {
    const SeriesPlan s = plan_sqrt(80);
    for (const char* r : {"1/4", "1/2", "3/4", "999/1000", "1"}) {
      CHECK(oracle::sqrt_rel_error(R(r), sqrt_series(R(r), s), 78, 80).within);
    }
    const SeriesPlan e = plan_exp(R("1733/2500"), 80);
    for (const char* r : {"0", "1/3", "1733/2500"}) {
      CHECK(oracle::exp_rel_error(R(r), exp_series(R(r), e), 79, 80).within);
    }
  }

  TEST_CASE("sqrt examples") {
    CHECK(f_sqrt(F(4, 2, 3)) == F(4, 0, 3));
    CHECK(f_sqrt(PFloat::zero(3)) == PFloat::zero(3));
    const PFloat two = round_p(R("2"), 53);
    CHECK(f_sqrt(two) == oracle::sqrt_search(two));
    CHECK(f_sqrt(two).m().str() == "6369051672525773");   // sqrt 2 = 1.4142135623730951
    CHECK_THROWS_AS(f_sqrt(F(-4, 0, 3)), DomainError);
  }

  TEST_CASE("sqrt of perfect squares is exact") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i) {
      const long s = 1 + static_cast<long>(rng() % 4000);
      const PFloat x = round_p(Rat(s * s), 24);
      CHECK(f_sqrt(x).to_rat() == Rat(s));
    }
  }

  TEST_CASE("exp examples") {
    for (int p : {2, 3, 8, 53}) {
      CHECK(f_exp(PFloat::zero(p)) == PFloat::make(BigInt::pow2(static_cast<std::size_t>(p - 1)), BigInt(-(p - 1)), p));
    }
    const PFloat one = round_p(R("1"), 53);
    const PFloat e = f_exp(one);
    CHECK(oracle::exp_rel_error(one, e, 53).within);
    CHECK(e.to_double() == doctest::Approx(2.718281828459045));
    CHECK_THROWS_AS(f_exp(round_p(R("1000"), 8)), OverflowError);
  }

  TEST_CASE("exp relative error on random inputs") {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 200; ++i) {
      const int p = i % 2 ? 24 : 53;
      const Rat x(BigInt(static_cast<long>(rng() % 4001) - 2000), BigInt(1 + static_cast<long>(rng() % 97)));
      const PFloat xf = round_p(x, p);
      CHECK(oracle::exp_rel_error(xf, f_exp(xf), p).within);
    }
  }

  TEST_CASE("rational sqrt and exp") {
    std::mt19937_64 rng(41);
    for (int i = 0; i < 100; ++i) {
      const Rat x(BigInt(static_cast<long>(rng() % 100000)), BigInt(1 + static_cast<long>(rng() % 1000)));
      const long bits = 8 + static_cast<long>(rng() % 120);
      if (!x.is_zero()) CHECK(oracle::sqrt_rel_error(x, sqrt_rational(x, bits), bits, bits).within);
      const Rat y = x / Rat(1000) - Rat(50);
      CHECK(oracle::exp_rel_error(y, exp_rational(y, bits), bits, bits).within);
    }
    CHECK(sqrt_rational(R("0"), 10) == R("0"));
    CHECK(exp_rational(R("0"), 10) == R("1"));
    CHECK((sqrt_rational(R("9/4"), 30) - R("3/2")).abs() <= R("3/2") * pow2_rat(-30));
  }
}
