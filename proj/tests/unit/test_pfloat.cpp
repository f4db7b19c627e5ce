#include <doctest.h>

#include <random>
#include <vector>

#include "exf/errors.hpp"
#include "exf/oracles.hpp"
#include "exf/pfloat.hpp"
#include "helpers.hpp"

using namespace exf;
using exf::test::F;
using exf::test::R;

namespace {

PFloat random_float(std::mt19937_64& rng, int p, long e_lo, long e_hi) {
  const long span = e_hi - e_lo + 1;
  const long e = e_lo + static_cast<long>(rng() % static_cast<unsigned long>(span));
  long m = (1L << (p - 1)) + static_cast<long>(rng() % (1UL << (p - 1)));
  if (rng() % 2) m = -m;
  return F(m, e, p);
}

}  // namespace

TEST_SUITE("pfloat") {
  TEST_CASE("round_p examples at p = 3") {
    CHECK(round_p(R("9"), 3) == F(4, 1, 3));
    CHECK(round_p(R("5"), 3) == F(5, 0, 3));
    CHECK(round_p(R("17"), 3) == F(4, 2, 3));
    CHECK(round_p(R("11"), 3) == F(6, 1, 3));   // midpoint 10/12, even 6
    CHECK(round_p(R("-9"), 3) == F(-4, 1, 3));
    CHECK(round_p(R("0"), 3) == PFloat::zero(3));
  }

  TEST_CASE("round_p agrees with enumeration and MPFR") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 400; ++i) {
      const Rat x(BigInt(static_cast<long>(rng() % 200001) - 100000), BigInt(1 + static_cast<long>(rng() % 997)));
      for (int p : {2, 3, 5}) {
        CHECK(test::outcome([&] { return round_p(x, p); }) == test::outcome([&] { return oracle::round_enum(x, p); }));
      }
      for (int p : {8, 24, 53}) CHECK(round_p(x, p) == oracle::round_mpfr(x, p));
    }
  }

  TEST_CASE("tail only matters on breakpoints") {
    // 9 = midpoint of 8 and 10 at p = 3
    CHECK(round_scaled(BigInt(9), BigInt(1), BigInt(0), 3, 1) == F(5, 1, 3));
    CHECK(round_scaled(BigInt(9), BigInt(1), BigInt(0), 3, -1) == F(4, 1, 3));
    CHECK(round_scaled(BigInt(9), BigInt(1), BigInt(0), 3, 0) == F(4, 1, 3));
    CHECK(round_scaled(BigInt(11), BigInt(1), BigInt(0), 3, -1) == F(5, 1, 3));
    CHECK(round_scaled(BigInt(-9), BigInt(1), BigInt(0), 3, -1) == F(-5, 1, 3));
    // not a breakpoint: tail ignored
    CHECK(round_scaled(BigInt(17), BigInt(1), BigInt(0), 3, 1) == F(4, 2, 3));
    CHECK(is_breakpoint({BigInt(9), BigInt(0)}, 3));
    CHECK_FALSE(is_breakpoint({BigInt(10), BigInt(0)}, 3));
    CHECK_FALSE(is_breakpoint({BigInt(5), BigInt(0)}, 3));
  }

  TEST_CASE("representation invariants and overflow") {
    CHECK_THROWS_AS(F(8, 0, 3), DomainError);   // not normalized
    CHECK_THROWS_AS(F(3, 0, 3), DomainError);
    CHECK_THROWS_AS(PFloat::make(BigInt(0), BigInt(1), 3), DomainError);
    CHECK_THROWS_AS(F(4, 8, 3), OverflowError);
    CHECK_THROWS_AS(F(4, -9, 3), OverflowError);
    CHECK_NOTHROW(F(4, -8, 3));
    CHECK_NOTHROW(F(7, 7, 3));
    CHECK_THROWS_AS(round_p(R("1024"), 3), OverflowError);
    CHECK_THROWS_AS(check_precision(1), DomainError);
  }

  TEST_CASE("two-ary examples") {
    CHECK(f_add(F(4, 0, 3), F(4, 0, 3)) == F(4, 1, 3));
    CHECK(f_add(F(5, 0, 3), F(7, -3, 3)) == F(6, 0, 3));
    CHECK(f_div(F(5, 0, 3), F(5, 0, 3)) == F(4, -2, 3));
    CHECK(f_sub(F(5, 0, 3), F(5, 0, 3)) == PFloat::zero(3));
    CHECK_THROWS_AS(f_div(F(5, 0, 3), PFloat::zero(3)), DomainError);
    CHECK_THROWS_AS(f_mul(F(7, 7, 3), F(7, 7, 3)), OverflowError);
  }

  TEST_CASE("guard and sticky encoding") {
    const UnnormFloat a = guard_sticky_div(BigInt(5), BigInt(1));
    CHECK(a.e == BigInt(-3));
    CHECK(a.m == BigInt(40));
    const UnnormFloat b = guard_sticky_div(BigInt(1), BigInt(3));   // 1/4 + 1/8
    CHECK(b.m == BigInt(3));
    const UnnormFloat c = guard_sticky_div(BigInt(-1), BigInt(3));  // floor to -1/2, + 1/8
    CHECK(Rat(c.m) * pow2_rat(c.e.to_long()) == R("-3/8"));
    const UnnormFloat s = guard_sticky_shift(BigInt(43), BigInt(4));  // 2.6875 -> 2.5 + 1/8
    CHECK(Rat(s.m) * pow2_rat(s.e.to_long()) == R("21/8"));
    const UnnormFloat t = guard_sticky_shift(BigInt(11), BigInt(2));  // exact
    CHECK(Rat(t.m) * pow2_rat(t.e.to_long()) == R("11/4"));
    const UnnormFloat u = guard_sticky_shift(BigInt(1), BigInt(1000000));
    CHECK(u.m == BigInt(1));
  }

  TEST_CASE("two-ary ops equal rounding of the exact result") {
    std::mt19937_64 rng(99);
    for (int p : {3, 8, 24, 53}) {
      const long r = p >= 20 ? 200 : (1L << p) - 1;
      for (int i = 0; i < 600; ++i) {
        const PFloat x = random_float(rng, p, -r / 2, r / 2);
        const PFloat y = i % 3 == 0 ? random_float(rng, p, x.e().to_long() - p - 2, x.e().to_long() + 2)
                                    : random_float(rng, p, -r / 2, r / 2);
        CHECK(test::outcome([&] { return f_add(x, y); }) == test::outcome([&] { return round_p(x.to_rat() + y.to_rat(), p); }));
        CHECK(test::outcome([&] { return f_mul(x, y); }) == test::outcome([&] { return round_p(x.to_rat() * y.to_rat(), p); }));
        CHECK(test::outcome([&] { return f_div(x, y); }) == test::outcome([&] { return round_p(x.to_rat() / y.to_rat(), p); }));
      }
    }
  }

  TEST_CASE("comparison") {
    CHECK(f_cmp(F(4, 0, 3), F(4, 1, 3)) == Cmp::lt);
    CHECK(f_cmp(F(4, 1, 3), F(4, 1, 3)) == Cmp::eq);
    CHECK(f_cmp(F(-7, 7, 3), F(4, -8, 3)) == Cmp::lt);
    CHECK(f_cmp(PFloat::zero(3), F(-4, -8, 3)) == Cmp::gt);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 300; ++i) {
      const PFloat x = random_float(rng, 8, -50, 50), y = random_float(rng, 8, -50, 50);
      CHECK(f_cmp(x, y) == rat_cmp(x.to_rat(), y.to_rat()));
    }
  }

  TEST_CASE("iterated product") {
    const std::vector<PFloat> xs{F(4, 0, 3), F(4, 0, 3)};
    CHECK(f_prod(xs) == F(4, 2, 3));
    const std::vector<PFloat> one{F(5, -2, 3)};
    CHECK(f_prod(one) == one[0]);
    std::mt19937_64 rng(10);
    std::vector<PFloat> ys;
    Rat exact(1);
    for (int i = 0; i < 10; ++i) {
      ys.push_back(random_float(rng, 8, -6, 6));
      exact *= ys.back().to_rat();
    }
    CHECK(f_prod(ys) == round_p(exact, 8));
  }

  TEST_CASE("block partition") {
    CHECK(block_gap(3, 2) == 7);
    CHECK(block_gap(3, 3) == 8);
    CHECK(block_gap(53, 64) == 112);
    // exponents 10 and -10 do not exist at p = 3; the same gap test inside the range
    const std::vector<PFloat> far{F(5, 7, 3), F(5, -7, 3)};
    CHECK(partition_blocks(far).size() == 2);
    const std::vector<PFloat> near{F(5, 3, 3), F(5, 0, 3)};
    CHECK(partition_blocks(near).size() == 1);
    const std::vector<PFloat> same{F(5, 2, 3), F(6, 2, 3), F(-7, 2, 3)};
    CHECK(partition_blocks(same).size() == 1);
    // the threshold is exclusive: a gap of exactly 7 separates
    const std::vector<PFloat> edge{F(5, 7, 3), F(5, 0, 3)};
    CHECK(partition_blocks(edge).size() == 2);
    const std::vector<PFloat> chain{F(5, 6, 3), F(5, 0, 3), F(5, -6, 3)};
    CHECK(partition_blocks(chain).size() == 1);
  }

  TEST_CASE("block sum examples") {
    // 9 = <4|1> + <4|-2> is a breakpoint; a far positive block rounds it up
    const std::vector<PFloat> two{F(4, 1, 3), F(4, -2, 3)};
    CHECK(f_sum_blocks(two, 3) == F(4, 1, 3));
    // the three-term example needs exponent -20; scaled by 2^6 it fits
    const std::vector<PFloat> three{F(4, 7, 3), F(4, 4, 3), F(4, -4, 3)};
    const BlockSumDetail d = f_sum_blocks_detail(three, 3);
    CHECK(d.blocks.size() == 2);
    CHECK(d.which_case == 2);
    CHECK(d.result == F(5, 7, 3));
    CHECK(f_sum_oracle(three, 3) == F(5, 7, 3));
    const std::vector<PFloat> down{F(4, 7, 3), F(4, 4, 3), F(-4, -4, 3)};
    CHECK(f_sum_blocks(down, 3) == F(4, 7, 3));
    const std::vector<PFloat> scaled{F(4, 7, 3), F(4, 4, 3)};
    CHECK(f_sum_blocks(scaled, 3) == F(4, 7, 3));
    const std::vector<PFloat> cancel{F(5, 2, 3), F(-5, 2, 3)};
    const BlockSumDetail c = f_sum_blocks_detail(cancel, 3);
    CHECK(c.result == PFloat::zero(3));
    CHECK(c.which_case == 1);
    const std::vector<PFloat> twelve{F(4, 0, 3), F(4, 0, 3), F(4, 0, 3)};
    CHECK(f_sum_blocks(twelve, 3) == F(6, 1, 3));
    const std::vector<PFloat> single{F(-7, -3, 3)};
    CHECK(f_sum_blocks(single, 3) == single[0]);
    CHECK(f_sum_blocks(std::vector<PFloat>{}, 3) == PFloat::zero(3));
  }

  TEST_CASE("the -20 exponent of the original example is out of range") {
    CHECK_THROWS_AS(F(4, -20, 3), OverflowError);
  }

  TEST_CASE("block sum equals exact-then-round on random lists") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 400; ++i) {
      const int p = i % 2 ? 3 : 11;
      const long r = p == 3 ? 7 : 300;
      std::vector<PFloat> xs;
      const std::size_t n = 1 + rng() % 20;
      for (std::size_t j = 0; j < n; ++j) {
        if (rng() % 8 == 0) xs.push_back(PFloat::zero(p));
        else if (rng() % 6 == 0 && !xs.empty()) xs.push_back(f_neg(xs[rng() % xs.size()]));
        else xs.push_back(random_float(rng, p, -r, r));
      }
      PFloat want = PFloat::zero(p), got = PFloat::zero(p);
      bool want_ovf = false, got_ovf = false;
      try { want = f_sum_oracle(xs, p); } catch (const OverflowError&) { want_ovf = true; }
      try { got = f_sum_blocks(xs, p); } catch (const OverflowError&) { got_ovf = true; }
      CHECK(want_ovf == got_ovf);
      if (!want_ovf && !got_ovf) CHECK(got == want);
    }
  }

  TEST_CASE("rounding is monotone and idempotent") {
    std::mt19937_64 rng(77);
    for (int i = 0; i < 300; ++i) {
      const Rat a(BigInt(static_cast<long>(rng() % 100000)), BigInt(1 + static_cast<long>(rng() % 1000)));
      const Rat b = a + Rat(BigInt(static_cast<long>(rng() % 1000)), BigInt(1000));
      CHECK(f_cmp(round_p(a, 6), round_p(b, 6)) != Cmp::gt);
      const PFloat r = round_p(a, 6);
      CHECK(round_p(r.to_rat(), 6) == r);
      CHECK(round_p(r, 6) == r);
      // widening then narrowing is the identity
      CHECK(round_p(round_p(r, 20), 6) == r);
    }
  }
}
