#include "exf/verify.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <variant>

#include "exf/elementary.hpp"
#include "exf/errors.hpp"
#include "exf/oracles.hpp"
#include "exf/pfloat.hpp"

namespace exf::verify {

void Report::merge(const Report& other) {
  cases += other.cases;
  failures.insert(failures.end(), other.failures.begin(), other.failures.end());
  std::sort(failures.begin(), failures.end());
  for (const auto& [k, v] : other.counters) counters[other.suite + "." + k] += v;
}

std::uint64_t case_seed(std::uint64_t seed, std::string_view suite, std::size_t index) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : suite) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
  // splitmix64
  std::uint64_t z = seed ^ h ^ (static_cast<std::uint64_t>(index) * 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

using Rng = std::mt19937_64;

struct Outcome {
  std::variant<PFloat, std::string> v;  // value or error kind
  friend bool operator==(const Outcome&, const Outcome&) = default;
  std::string str() const {
    return std::holds_alternative<PFloat>(v) ? std::get<PFloat>(v).str() : std::get<std::string>(v);
  }
};

template <class F>
Outcome outcome(F&& f) {
  try {
    return {f()};
  } catch (const OverflowError&) {
    return {std::string("overflow")};
  }
}

std::pair<long, long> exponent_range(int p, long cap) {
  if (p >= 20) return {-cap, cap};
  const long r = 1L << p;
  return {std::max(-r, -cap), std::min(r - 1, cap)};
}

long uniform(Rng& rng, long lo, long hi) {
  if (hi <= lo) return lo;
  return lo + static_cast<long>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

BigInt random_bits(Rng& rng, std::size_t bits) {
  BigInt r(0);
  std::size_t have = 0;
  while (have < bits) {
    r = (r << 64) + BigInt(static_cast<unsigned long>(rng()));
    have += 64;
  }
  return r >> (have - bits);
}

BigInt random_significand(Rng& rng, int p) {
  return BigInt::pow2(static_cast<std::size_t>(p - 1)) + random_bits(rng, static_cast<std::size_t>(p - 1));
}

PFloat random_float(Rng& rng, int p, long e_lo, long e_hi) {
  const auto [lo, hi] = exponent_range(p, 1L << 20);
  const long e = std::clamp(uniform(rng, e_lo, e_hi), lo, hi);
  BigInt m = random_significand(rng, p);
  if (rng() % 2) m = -m;
  return PFloat::make(m, BigInt(e), p);
}

Rat unnorm_rat(const UnnormFloat& x) {
  if (x.m.is_zero()) return Rat(0);
  return Rat(x.m) * pow2_rat(x.e.to_long());
}

std::vector<int> precisions(const Options& opt, std::vector<int> defaults) {
  if (opt.p) return {*opt.p};
  return defaults;
}

std::string list_str(std::span<const PFloat> xs) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? ", " : "") << xs[i];
  os << "]";
  return os.str();
}

void fail(Report& rep, std::uint64_t seed, std::size_t index, std::string detail) {
  rep.failures.push_back({rep.suite, seed, index, std::move(detail)});
}

void finish(Report& rep) { std::sort(rep.failures.begin(), rep.failures.end()); }

// --- sum -------------------------------------------------------------------

std::vector<PFloat> random_sum_instance(Rng& rng, int p) {
  const std::size_t n = 2 + rng() % 63;
  const auto [lo, hi] = exponent_range(p, 600);
  const long clusters = uniform(rng, 1, 4);
  const long spread = uniform(rng, 0, 3L * p);
  std::vector<long> centers;
  for (long c = 0; c < clusters; ++c) centers.push_back(uniform(rng, lo, std::max(lo, hi - spread)));
  std::vector<PFloat> xs;
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned pick = rng() % 10;
    if (pick == 0) {
      xs.push_back(PFloat::zero(p));
    } else if (pick == 1 && !xs.empty()) {
      xs.push_back(f_neg(xs[rng() % xs.size()]));
    } else {
      const long c = centers[rng() % centers.size()];
      xs.push_back(random_float(rng, p, c, c + spread));
    }
  }
  std::shuffle(xs.begin(), xs.end(), rng);
  return xs;
}

// kind 0 / 1: leading block sum is a breakpoint, second block positive /
// negative. kind 2: leading block cancels to a single bit.
std::vector<PFloat> adversarial_sum_instance(Rng& rng, int p, int kind) {
  const auto [lo, hi] = exponent_range(p, 600);
  const BigInt half_m = BigInt::pow2(static_cast<std::size_t>(p - 1));
  for (long tail = uniform(rng, 1, 3);; --tail) {
    const std::size_t n_nonzero = 2 + static_cast<std::size_t>(tail);
    const long gap = block_gap(p, n_nonzero);
    long spread = std::min<long>(p - 1, 6);
    long slack = uniform(rng, 0, 3);
    long needed = p + gap + slack + spread + 1;
    if (hi - lo < needed) {
      slack = 0;
      spread = std::max(0L, (hi - lo) - (p + gap + 1));
      needed = p + gap + spread + 1;
    }
    if (hi - lo < needed) {
      if (tail > 1) continue;
      throw DomainError("precision too small for an adversarial sum instance");
    }
    const long f = uniform(rng, lo + needed, hi);
    const int s = rng() % 2 ? 1 : -1;
    std::vector<PFloat> xs;
    long block_min;
    if (kind < 2) {
      // (2j + 1) 2^(f-1) = <j|f> + <2^(p-1)|f-p>
      const BigInt j = random_significand(rng, p);
      xs.push_back(PFloat::make(s < 0 ? -j : j, BigInt(f), p));
      xs.push_back(PFloat::make(s < 0 ? -half_m : half_m, BigInt(f - p), p));
      block_min = f - p;
    } else if (rng() % 2) {
      // <m|f> - <m-1|f> = 2^f
      BigInt m = random_significand(rng, p);
      if (m == half_m) m += BigInt(1);
      const BigInt m1 = m - BigInt(1);
      xs.push_back(PFloat::make(s < 0 ? -m : m, BigInt(f), p));
      xs.push_back(PFloat::make(s < 0 ? m1 : -m1, BigInt(f), p));
      block_min = f;
    } else {
      // <2^(p-1)|f> - <2^p - 1|f-1> = 2^(f-1)
      const BigInt top = BigInt::pow2(static_cast<std::size_t>(p)) - BigInt(1);
      xs.push_back(PFloat::make(s < 0 ? -half_m : half_m, BigInt(f), p));
      xs.push_back(PFloat::make(s < 0 ? top : -top, BigInt(f - 1), p));
      block_min = f - 1;
    }
    const long g_max = block_min - gap - slack;
    const int tail_sign = kind == 0 ? 1 : (kind == 1 ? -1 : (rng() % 2 ? 1 : -1));
    for (long t = 0; t < tail; ++t) {
      BigInt m = random_significand(rng, p);
      // kind 2 mixes signs in the tail
      const int sg = kind == 2 && rng() % 2 ? -tail_sign : tail_sign;
      xs.push_back(PFloat::make(sg < 0 ? -m : m, BigInt(g_max - uniform(rng, 0, spread)), p));
    }
    if (rng() % 4 == 0) xs.push_back(PFloat::zero(p));
    std::shuffle(xs.begin(), xs.end(), rng);
    return xs;
  }
}

void check_sum(Report& rep, std::uint64_t seed, std::size_t index, const std::vector<PFloat>& xs, int p) {
  const Outcome want = outcome([&] { return f_sum_oracle(xs, p); });
  BlockSumDetail detail;
  bool overflow = false;
  try {
    detail = f_sum_blocks_detail(xs, p);
  } catch (const OverflowError&) {
    overflow = true;
  }
  const Outcome got = overflow ? Outcome{std::string("overflow")} : Outcome{detail.result};
  if (!(got == want)) {
    fail(rep, seed, index, "p=" + std::to_string(p) + " xs=" + list_str(xs) + " blocks=" + got.str() + " oracle=" + want.str());
    return;
  }
  if (overflow) {
    ++rep.counters["overflow"];
    return;
  }
  ++rep.counters["case" + std::to_string(detail.which_case)];
  if (!detail.leading) return;
  const UnnormFloat& lead = detail.block_sums[*detail.leading];
  if (detail.which_case == 2) {
    const int s2 = detail.second ? detail.block_sums[*detail.second].m.sign() : 0;
    ++rep.counters[s2 > 0 ? "case2_second_positive" : (s2 < 0 ? "case2_second_negative" : "case2_no_second")];
  }
  if (detail.which_case == 3 && lead.m.bit_length() == 1) ++rep.counters["case3_one_bit"];
  // remainder of the non-leading blocks: |r| < 2^(e1 - p)
  std::vector<Rat> rest;
  for (std::size_t b = 0; b < detail.block_sums.size(); ++b) {
    if (b != *detail.leading) rest.push_back(unnorm_rat(detail.block_sums[b]));
  }
  const Rat r = rest.empty() ? Rat(0) : rat_sum(rest);
  ++rep.counters["gap_checks"];
  if (!(r.abs() < pow2_rat(lead.e.to_long() - p))) {
    ++rep.counters["gap_violations"];
    fail(rep, seed, index, "gap bound: p=" + std::to_string(p) + " xs=" + list_str(xs) + " |r|=" + r.abs().str());
  }
}

// --- round -----------------------------------------------------------------

std::vector<PFloat> positive_floats(int p, long e_lo, long e_hi) {
  const auto [lo, hi] = exponent_range(p, 1L << 20);
  std::vector<PFloat> out;
  for (long e = std::max(e_lo, lo); e <= std::min(e_hi, hi); ++e) {
    for (long m = 1L << (p - 1); m < (1L << p); ++m) out.push_back(PFloat::make(BigInt(m), BigInt(e), p));
  }
  std::sort(out.begin(), out.end(), [](const PFloat& a, const PFloat& b) { return f_cmp(a, b) == Cmp::lt; });
  return out;
}

Rat random_rational(Rng& rng, long e_lo, long e_hi) {
  const std::size_t nb = 1 + rng() % 300, db = 1 + rng() % 300;
  BigInt num = random_bits(rng, nb) + BigInt(1);
  BigInt den = random_bits(rng, db) + BigInt(1);
  Rat x = Rat(num, den);
  // move the magnitude near 2^e
  const long t = static_cast<long>(nb) - static_cast<long>(db);
  x = x * pow2_rat(uniform(rng, e_lo, e_hi) - t);
  return rng() % 2 ? -x : x;
}

}  // namespace

Report suite_sum(const Options& opt, std::size_t adversarial_cases) {
  Report rep{"sum", 0, {}, {}};
  const std::vector<int> ps = precisions(opt, {3, 8, 24, 53});
  for (std::size_t i = 0; i < opt.cases; ++i) {
    const std::uint64_t seed = case_seed(opt.seed, "sum", i);
    Rng rng(seed);
    const int p = ps[i % ps.size()];
    try {
      check_sum(rep, seed, i, random_sum_instance(rng, p), p);
    } catch (const std::exception& e) {
      fail(rep, seed, i, std::string("exception: ") + e.what());
    }
    ++rep.cases;
  }
  for (std::size_t i = 0; i < adversarial_cases; ++i) {
    const std::size_t index = opt.cases + i;
    const std::uint64_t seed = case_seed(opt.seed, "sum-adversarial", i);
    Rng rng(seed);
    const int p = ps[(i / 3) % ps.size()];
    try {
      ++rep.counters["adversarial"];
      check_sum(rep, seed, index, adversarial_sum_instance(rng, p, static_cast<int>(i % 3)), p);
    } catch (const std::exception& e) {
      fail(rep, seed, index, std::string("exception: ") + e.what());
    }
    ++rep.cases;
  }
  finish(rep);
  return rep;
}

Report suite_round(const Options& opt) {
  Report rep{"round", 0, {}, {}};
  std::vector<int> small, large;
  for (int p : precisions(opt, {2, 3, 4, 8, 24, 53, 256})) (p <= 8 && opt.exhaustive ? small : large).push_back(p);
  if (!opt.p) small.erase(std::remove(small.begin(), small.end(), 8), small.end()), large.insert(large.begin(), 8);

  for (int p : small) {
    const std::vector<PFloat> fs = positive_floats(p, -8, 8);
    const std::string tag = "p=" + std::to_string(p);
    // every midpoint between adjacent floats rounds to the even neighbour
    for (std::size_t i = 0; i + 1 < fs.size(); ++i) {
      for (int s : {1, -1}) {
        const Rat a = fs[i].to_rat() * Rat(s), b = fs[i + 1].to_rat() * Rat(s);
        const Rat mid = (a + b) / Rat(2);
        const PFloat r = round_p(mid, p);
        const bool neighbour = r.to_rat() == a || r.to_rat() == b;
        ++rep.cases;
        ++rep.counters["midpoints"];
        if (!neighbour || r.m().is_odd() || !(r == oracle::round_enum(mid, p))) {
          fail(rep, 0, rep.cases, tag + " midpoint " + mid.str() + " -> " + r.str());
        }
      }
    }
    // monotone on a dense grid, and equal to the enumeration oracle
    std::vector<Rat> grid;
    for (std::size_t i = 0; i + 1 < fs.size(); ++i) {
      const Rat a = fs[i].to_rat(), b = fs[i + 1].to_rat();
      for (int k = 0; k < 8; ++k) grid.push_back(a + (b - a) * Rat(BigInt(k), BigInt(8)));
      for (int k = 1; k < 7; ++k) grid.push_back(a + (b - a) * Rat(BigInt(k), BigInt(7)));
    }
    grid.push_back(fs.back().to_rat());
    std::vector<Rat> all;
    for (auto it = grid.rbegin(); it != grid.rend(); ++it) all.push_back(-*it);
    all.insert(all.end(), grid.begin(), grid.end());
    std::sort(all.begin(), all.end());
    std::optional<PFloat> prev;
    for (const auto& x : all) {
      const PFloat r = round_p(x, p);
      ++rep.cases;
      ++rep.counters["grid_points"];
      if (!(r == oracle::round_enum(x, p))) fail(rep, 0, rep.cases, tag + " grid " + x.str() + " -> " + r.str());
      if (prev && f_cmp(*prev, r) == Cmp::gt) fail(rep, 0, rep.cases, tag + " not monotone at " + x.str());
      prev = r;
    }
  }

  for (int p : large) {
    const auto [lo, hi] = exponent_range(p, 400);
    for (std::size_t i = 0; i < opt.cases; ++i) {
      const std::uint64_t seed = case_seed(opt.seed, "round" + std::to_string(p), i);
      Rng rng(seed);
      const Rat x = random_rational(rng, lo + p + 2, hi - 2);
      const Outcome got = outcome([&] { return round_p(x, p); });
      const Outcome want = outcome([&] { return oracle::round_mpfr(x, p); });
      ++rep.cases;
      ++rep.counters["mpfr_comparisons"];
      if (!(got == want)) fail(rep, seed, i, "p=" + std::to_string(p) + " x=" + x.str() + " got " + got.str() + " mpfr " + want.str());
    }
  }
  finish(rep);
  return rep;
}

namespace {

Outcome exact_op(FloatOp op, const PFloat& x, const PFloat& y) {
  return outcome([&] {
    const Rat a = x.to_rat(), b = y.to_rat();
    switch (op) {
      case FloatOp::add: return round_p(a + b, x.p());
      case FloatOp::mul: return round_p(a * b, x.p());
      case FloatOp::div: return round_p(a / b, x.p());
    }
    return PFloat::zero(x.p());
  });
}

const char* op_name(FloatOp op) { return op == FloatOp::add ? "add" : (op == FloatOp::mul ? "mul" : "div"); }

void check_arith(Report& rep, std::uint64_t seed, std::size_t index, FloatOp op, const PFloat& x, const PFloat& y) {
  ++rep.cases;
  if (op == FloatOp::div && y.is_zero()) return;
  const Outcome got = outcome([&] { return f_arith(op, x, y); });
  const Outcome want = exact_op(op, x, y);
  if (!(got == want)) {
    fail(rep, seed, index, std::string(op_name(op)) + " " + x.str() + " " + y.str() + " got " + got.str() + " exact " + want.str());
  }
}

}  // namespace

Report suite_arith(const Options& opt) {
  Report rep{"arith", 0, {}, {}};
  const std::vector<int> ps = precisions(opt, {3, 8, 53});
  for (int p : ps) {
    if (p == 3 && opt.exhaustive) {
      std::vector<PFloat> fs{PFloat::zero(3)};
      for (const auto& f : positive_floats(3, -4, 4)) {
        fs.push_back(f);
        fs.push_back(f_neg(f));
      }
      for (FloatOp op : {FloatOp::add, FloatOp::mul, FloatOp::div}) {
        for (const auto& x : fs) {
          for (const auto& y : fs) check_arith(rep, 0, rep.cases, op, x, y);
        }
      }
      rep.counters["exhaustive_p3"] = rep.cases;
      continue;
    }
    if (p == 3 && !opt.p) continue;
    const auto [lo, hi] = exponent_range(p, 300);
    for (FloatOp op : {FloatOp::add, FloatOp::mul, FloatOp::div}) {
      for (std::size_t i = 0; i < opt.cases; ++i) {
        const std::uint64_t seed = case_seed(opt.seed, std::string("arith") + op_name(op) + std::to_string(p), i);
        Rng rng(seed);
        const PFloat x = random_float(rng, p, lo, hi);
        PFloat y = random_float(rng, p, lo, hi);
        const unsigned pick = rng() % 10;
        if (op == FloatOp::add && pick < 6) {
          // nearby exponents, where guard and sticky bits matter
          const long e = x.e().to_long() + uniform(rng, -(2L * p + 8), 2L * p + 8);
          y = random_float(rng, p, e, e);
        } else if (op == FloatOp::add && pick < 8) {
          // near-cancellation
          BigInt m = -x.m() + BigInt(static_cast<long>(uniform(rng, -1, 1)));
          if (m.bit_length() == static_cast<std::size_t>(p)) y = PFloat::make(m, x.e(), p);
        } else if (pick == 9) {
          y = PFloat::zero(p);
        }
        check_arith(rep, seed, i, op, x, y);
      }
    }
  }
  finish(rep);
  return rep;
}

Report suite_exp(const Options& opt) {
  Report rep{"exp", 0, {}, {}};
  for (int p : precisions(opt, {8, 24, 53})) {
    std::vector<std::pair<PFloat, PFloat>> samples;
    for (std::size_t i = 0; i < opt.cases; ++i) {
      const std::uint64_t seed = case_seed(opt.seed, "exp" + std::to_string(p), i);
      Rng rng(seed);
      // |x| < 2^top <= 64
      const long top = uniform(rng, -(p + 12), 6);
      PFloat x = i == 0 ? PFloat::zero(p) : random_float(rng, p, top - p, top - p);
      ++rep.cases;
      try {
        const PFloat y = f_exp(x);
        const oracle::RelError err = oracle::exp_rel_error(x, y, p);
        if (!err.within) {
          fail(rep, seed, i, "p=" + std::to_string(p) + " x=" + x.str() + " exp=" + y.str() +
                                 " log2 relative error " + std::to_string(err.log2_error));
        }
        samples.emplace_back(x, y);
      } catch (const std::exception& e) {
        fail(rep, seed, i, "p=" + std::to_string(p) + " x=" + x.str() + " exception: " + e.what());
      }
    }
    std::sort(samples.begin(), samples.end(),
              [](const auto& a, const auto& b) { return f_cmp(a.first, b.first) == Cmp::lt; });
    for (std::size_t i = 1; i < samples.size(); ++i) {
      ++rep.counters["monotone_pairs"];
      if (f_cmp(samples[i - 1].second, samples[i].second) == Cmp::gt) {
        fail(rep, 0, i, "exp not monotone between " + samples[i - 1].first.str() + " and " + samples[i].first.str());
      }
    }
  }
  finish(rep);
  return rep;
}

Report suite_sqrt(const Options& opt) {
  Report rep{"sqrt", 0, {}, {}};
  auto check = [&](const PFloat& x, std::uint64_t seed, std::size_t i) {
    ++rep.cases;
    try {
      const PFloat got = f_sqrt(x);
      const PFloat want = oracle::sqrt_search(x);
      if (!(got == want)) fail(rep, seed, i, "x=" + x.str() + " got " + got.str() + " oracle " + want.str());
    } catch (const std::exception& e) {
      fail(rep, seed, i, "x=" + x.str() + " exception: " + e.what());
    }
  };
  std::vector<int> ps = precisions(opt, {8, 24, 53});
  if (opt.exhaustive && (!opt.p || *opt.p == 4)) {
    for (const auto& x : positive_floats(4, -8, 8)) check(x, 0, rep.cases);
    rep.counters["exhaustive_p4"] = rep.cases;
    if (opt.p) ps.clear();
  }
  for (int p : ps) {
    const auto [lo, hi] = exponent_range(p, 200);
    for (std::size_t i = 0; i < opt.cases; ++i) {
      const std::uint64_t seed = case_seed(opt.seed, "sqrt" + std::to_string(p), i);
      Rng rng(seed);
      PFloat x = random_float(rng, p, lo, hi);
      if (x.sign() < 0) x = f_neg(x);
      check(x, seed, i);
    }
  }
  finish(rep);
  return rep;
}

Report suite_softmax_delta(const Options& opt) {
  Report rep{"softmax-delta", 0, {}, {}};
  double worst = 0;
  for (std::size_t i = 0; i < opt.cases; ++i) {
    const std::uint64_t seed = case_seed(opt.seed, rep.suite, i);
    Rng rng(seed);
    const oracle::DeltaTrial t = oracle::softmax_delta_trial(rng);
    worst = std::max(worst, t.ratio);
    ++rep.cases;
    if (!t.ok) fail(rep, seed, i, t.detail);
  }
  rep.counters["worst_ratio_permille"] = static_cast<std::size_t>(worst * 1000);
  finish(rep);
  return rep;
}

Report suite_invsqrt_delta(const Options& opt) {
  Report rep{"invsqrt-delta", 0, {}, {}};
  double worst = 0;
  for (std::size_t i = 0; i < opt.cases; ++i) {
    const std::uint64_t seed = case_seed(opt.seed, rep.suite, i);
    Rng rng(seed);
    const oracle::DeltaTrial t = oracle::invsqrt_delta_trial(rng);
    worst = std::max(worst, t.ratio);
    ++rep.cases;
    if (!t.ok) fail(rep, seed, i, t.detail);
  }
  rep.counters["worst_ratio_permille"] = static_cast<std::size_t>(worst * 1000);
  finish(rep);
  return rep;
}

std::vector<std::string> suite_names() {
  return {"sum", "round", "arith", "exp", "sqrt", "softmax-delta", "invsqrt-delta", "all"};
}

Report run_suite(std::string_view name, const Options& opt) {
  if (name == "sum") return suite_sum(opt, std::max<std::size_t>(opt.cases / 10, 3));
  if (name == "round") return suite_round(opt);
  if (name == "arith") return suite_arith(opt);
  if (name == "exp") return suite_exp(opt);
  if (name == "sqrt") return suite_sqrt(opt);
  if (name == "softmax-delta") return suite_softmax_delta(opt);
  if (name == "invsqrt-delta") return suite_invsqrt_delta(opt);
  if (name == "all") {
    Report all{"all", 0, {}, {}};
    for (const auto& s : suite_names()) {
      if (s != "all") all.merge(run_suite(s, opt));
    }
    return all;
  }
  throw DomainError("unknown suite \"" + std::string(name) + "\"");
}

}  // namespace exf::verify
