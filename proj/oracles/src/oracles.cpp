#include "exf/oracles.hpp"

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

#include "exf/budget.hpp"
#include "exf/errors.hpp"

namespace exf::oracle {

namespace {

void widen_exponents() {
  static const bool done = [] {
    mpfr_set_emin(mpfr_get_emin_min());
    mpfr_set_emax(mpfr_get_emax_max());
    return true;
  }();
  (void)done;
}

class Mp {
 public:
  explicit Mp(long prec) {
    widen_exponents();
    mpfr_init2(v_, std::max<long>(prec, MPFR_PREC_MIN));
  }
  ~Mp() { mpfr_clear(v_); }
  Mp(const Mp&) = delete;
  Mp& operator=(const Mp&) = delete;
  mpfr_ptr get() { return v_; }
  operator mpfr_ptr() { return v_; }  // NOLINT(google-explicit-constructor)

 private:
  mpfr_t v_;
};

void set_rat(mpfr_ptr out, const Rat& x) {
  mpq_class q(x.num().mpz(), x.den().mpz());
  mpfr_set_q(out, q.get_mpq_t(), MPFR_RNDN);
}

void set_float(mpfr_ptr out, const PFloat& x) {
  mpfr_set_z_2exp(out, x.m().mpz().get_mpz_t(), x.e().to_long(), MPFR_RNDN);
}

double log2_of(mpfr_ptr x, long prec) {
  if (mpfr_zero_p(x)) return -INFINITY;
  Mp l(prec);
  mpfr_log2(l, x, MPFR_RNDN);
  return mpfr_get_d(l, MPFR_RNDN);
}

// |a - b| / |b| as log2, and whether it is <= 2^-bound
RelError relative(mpfr_ptr approx, mpfr_ptr exact, long prec, long bound) {
  Mp diff(prec);
  mpfr_sub(diff, approx, exact, MPFR_RNDN);
  mpfr_abs(diff, diff, MPFR_RNDN);
  mpfr_div(diff, diff, exact, MPFR_RNDN);
  mpfr_abs(diff, diff, MPFR_RNDN);
  const bool within = mpfr_cmp_si_2exp(diff, 1, -bound) <= 0;
  return {log2_of(diff, prec), within};
}

Rat abs_distance(const Rat& a, const Rat& b) { return (a - b).abs(); }

Rat random_unit(std::mt19937_64& rng) {
  // uniform in [-1, 1] on a 2^-24 grid, endpoints one time in four
  switch (rng() % 8) {
    case 0: return Rat(1);
    case 1: return Rat(-1);
    default: {
      const long k = static_cast<long>(rng() % (2 * (1L << 24) + 1)) - (1L << 24);
      return Rat(BigInt(k), BigInt::pow2(24));
    }
  }
}

Rat random_eps(std::mt19937_64& rng) {
  const long num = 1 + static_cast<long>(rng() % 1024);
  const std::size_t k = rng() % 48;
  return Rat(BigInt(num), BigInt::pow2(k));
}

}  // namespace

PFloat round_enum(const Rat& x, int p) {
  check_precision(p);
  if (x.is_zero()) return PFloat::zero(p);
  const Rat mag = x.abs();
  // 2^t <= |x| < 2^(t+1)
  long t = static_cast<long>(mag.num().bit_length()) - static_cast<long>(mag.den().bit_length());
  while (pow2_rat(t) > mag) --t;
  while (pow2_rat(t + 1) <= mag) ++t;
  const long e0 = t - (p - 1);
  const long lo = 1L << (p - 1), hi = 1L << p;
  std::optional<std::pair<long, long>> best;  // (m, e)
  Rat best_dist;
  for (long e = e0 - 1; e <= e0 + 1; ++e) {
    for (long m = lo; m < hi; ++m) {
      const Rat cand = Rat(BigInt(m)) * pow2_rat(e);
      const Rat dist = abs_distance(mag, cand);
      if (!best || dist < best_dist || (dist == best_dist && m % 2 == 0)) {
        best = {m, e};
        best_dist = dist;
      }
    }
  }
  const BigInt m(best->first);
  return PFloat::make(x.sign() < 0 ? -m : m, BigInt(best->second), p);
}

PFloat round_mpfr(const Rat& x, int p) {
  check_precision(p);
  if (x.is_zero()) return PFloat::zero(p);
  Mp r(p);
  set_rat(r, x);
  mpz_class m;
  const mpfr_exp_t e = mpfr_get_z_2exp(m.get_mpz_t(), r);
  return PFloat::make(BigInt(std::move(m)), BigInt(static_cast<long>(e)), p);
}

PFloat sqrt_search(const PFloat& x) {
  const int p = x.p();
  if (x.sign() < 0) throw DomainError("sqrt of a negative float");
  if (x.is_zero()) return PFloat::zero(p);
  const Rat v = x.to_rat();
  // floor(log2 x)
  const long L = x.e().to_long() + static_cast<long>(x.m().bit_length()) - 1;
  const long half = L >= 0 ? L / 2 : -((-L + 1) / 2);
  const long f = half - (p - 1);
  const Rat scale = pow2_rat(f);
  auto square_le = [&](const BigInt& j) {
    const Rat c = Rat(j) * scale;
    return c * c <= v;
  };
  BigInt lo = BigInt::pow2(static_cast<std::size_t>(p - 1));
  BigInt hi = BigInt::pow2(static_cast<std::size_t>(p)) - BigInt(1);
  if (!square_le(lo)) throw DomainError("sqrt_search: bad binade");
  while (lo < hi) {
    const BigInt mid = (lo + hi + BigInt(1)) >> 1;
    if (square_le(mid)) {
      lo = mid;
    } else {
      hi = mid - BigInt(1);
    }
  }
  const Rat b = (Rat(lo) + Rat(BigInt(1), BigInt(2))) * scale;
  const Rat b2 = b * b;
  BigInt j = lo;
  if (b2 < v || (b2 == v && lo.is_odd())) j += BigInt(1);
  if (j == BigInt::pow2(static_cast<std::size_t>(p))) {
    return PFloat::make(BigInt::pow2(static_cast<std::size_t>(p - 1)), BigInt(f + 1), p);
  }
  return PFloat::make(j, BigInt(f), p);
}

RelError exp_rel_error(const PFloat& x, const PFloat& y, long bound_bits) {
  const long prec = 4L * x.p() + 64;
  Mp xv(prec), ex(prec), yv(prec);
  set_float(xv, x);
  mpfr_exp(ex, xv, MPFR_RNDN);
  set_float(yv, y);
  return relative(yv, ex, prec, bound_bits);
}

RelError exp_rel_error(const Rat& x, const Rat& y, long bound_bits, long work_bits) {
  const long prec = 4 * work_bits + 64;
  Mp xv(prec), ex(prec), yv(prec);
  set_rat(xv, x);
  mpfr_exp(ex, xv, MPFR_RNDN);
  set_rat(yv, y);
  return relative(yv, ex, prec, bound_bits);
}

RelError sqrt_rel_error(const Rat& x, const Rat& y, long bound_bits, long work_bits) {
  const long prec = 4 * work_bits + 64;
  Mp xv(prec), ex(prec), yv(prec);
  set_rat(xv, x);
  mpfr_sqrt(ex, xv, MPFR_RNDN);
  set_rat(yv, y);
  return relative(yv, ex, prec, bound_bits);
}

bool log2_within(const Rat& q, long bits) {
  const long prec = 4 * bits + 64;
  Mp l(prec), qv(prec), diff(prec);
  mpfr_const_log2(l, MPFR_RNDN);
  set_rat(qv, q);
  mpfr_sub(diff, qv, l, MPFR_RNDN);
  mpfr_abs(diff, diff, MPFR_RNDN);
  return mpfr_cmp_si_2exp(diff, 1, -bits) <= 0;
}

DeltaTrial softmax_delta_trial(std::mt19937_64& rng) {
  const long prec = 512;
  const std::size_t n = 1 + rng() % 12;
  const Rat eps = random_eps(rng);
  const Rat delta = softmax_delta(eps);
  std::vector<Rat> x, h, eta;
  for (std::size_t i = 0; i < n; ++i) {
    const long k = static_cast<long>(rng() % 2049) - 1024;
    x.emplace_back(BigInt(k), BigInt(64));  // [-16, 16]
    h.push_back(random_unit(rng) * delta);
    eta.push_back(random_unit(rng) * delta);
  }
  std::vector<Mp*> ex, ap;
  Mp sum(prec), sum_hat(prec), t(prec), u(prec);
  mpfr_set_zero(sum, 1);
  mpfr_set_zero(sum_hat, 1);
  std::vector<std::unique_ptr<Mp>> keep;
  for (std::size_t i = 0; i < n; ++i) {
    keep.push_back(std::make_unique<Mp>(prec));
    Mp& e = *keep.back();
    set_rat(t, x[i]);
    mpfr_exp(e, t, MPFR_RNDN);
    mpfr_add(sum, sum, e, MPFR_RNDN);
    ex.push_back(&e);
    keep.push_back(std::make_unique<Mp>(prec));
    Mp& a = *keep.back();
    set_rat(t, x[i] + h[i]);
    mpfr_exp(a, t, MPFR_RNDN);
    set_rat(u, Rat(1) + eta[i]);
    mpfr_mul(a, a, u, MPFR_RNDN);
    mpfr_add(sum_hat, sum_hat, a, MPFR_RNDN);
    ap.push_back(&a);
  }
  Mp worst(prec), dev(prec);
  mpfr_set_zero(worst, 1);
  for (std::size_t i = 0; i < n; ++i) {
    mpfr_div(t, *ex[i], sum, MPFR_RNDN);
    mpfr_div(u, *ap[i], sum_hat, MPFR_RNDN);
    mpfr_sub(dev, u, t, MPFR_RNDN);
    mpfr_abs(dev, dev, MPFR_RNDN);
    mpfr_max(worst, worst, dev, MPFR_RNDN);
  }
  Mp limit(prec), eps_v(prec);
  set_rat(limit, Rat(16) * delta);
  set_rat(eps_v, eps);
  mpfr_div(t, worst, limit, MPFR_RNDN);
  const double ratio = mpfr_get_d(t, MPFR_RNDN);
  const bool ok = mpfr_cmp(worst, limit) <= 0 && mpfr_cmp(worst, eps_v) <= 0;
  std::ostringstream os;
  os << "n=" << n << " eps=" << eps << " delta=" << delta << " x=[";
  for (std::size_t i = 0; i < n; ++i) os << (i ? "," : "") << x[i];
  os << "] deviation/16delta=" << ratio;
  return {ratio, ok, os.str()};
}

DeltaTrial invsqrt_delta_trial(std::mt19937_64& rng) {
  const long prec = 512;
  static const Rat cs[] = {Rat(BigInt(1), BigInt(4)), Rat(1), Rat(4)};
  const Rat c = cs[rng() % 3];
  const Rat eps = random_eps(rng);
  const Rat delta = inv_sqrt_delta(c, eps);
  // x >= c, sometimes exactly c
  Rat x = c;
  if (rng() % 4 != 0) x = c + Rat(BigInt(static_cast<long>(rng() % 100000)), BigInt(1000));
  const Rat h = random_unit(rng) * delta;
  const Rat eta = random_unit(rng) * delta;
  Mp y(prec), yh(prec), t(prec), u(prec);
  set_rat(t, x);
  mpfr_rec_sqrt(y, t, MPFR_RNDN);
  set_rat(t, x + h);
  mpfr_sqrt(yh, t, MPFR_RNDN);
  set_rat(u, Rat(1) + eta);
  mpfr_mul(yh, yh, u, MPFR_RNDN);
  mpfr_ui_div(yh, 1, yh, MPFR_RNDN);
  mpfr_sub(t, yh, y, MPFR_RNDN);
  mpfr_abs(t, t, MPFR_RNDN);
  Mp eps_v(prec);
  set_rat(eps_v, eps);
  const bool ok = mpfr_cmp(t, eps_v) <= 0;
  mpfr_div(t, t, eps_v, MPFR_RNDN);
  const double ratio = mpfr_get_d(t, MPFR_RNDN);
  std::ostringstream os;
  os << "c=" << c << " x=" << x << " eps=" << eps << " delta=" << delta << " h=" << h << " eta=" << eta
     << " deviation/eps=" << ratio;
  return {ratio, ok, os.str()};
}

namespace {

// magnitudes only
int cmp_mag(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  return a.compare(b) < 0 ? -1 : (a == b ? 0 : 1);
}

std::string strip(std::string s) {
  const auto k = s.find_first_not_of('0');
  return k == std::string::npos ? "0" : s.substr(k);
}

std::string add_mag(const std::string& a, const std::string& b) {
  std::string out;
  int carry = 0;
  for (std::size_t i = 0; i < std::max(a.size(), b.size()) || carry; ++i) {
    int s = carry;
    if (i < a.size()) s += a[a.size() - 1 - i] - '0';
    if (i < b.size()) s += b[b.size() - 1 - i] - '0';
    out.push_back(static_cast<char>('0' + s % 10));
    carry = s / 10;
  }
  std::reverse(out.begin(), out.end());
  return strip(out);
}

// a >= b
std::string sub_mag(const std::string& a, const std::string& b) {
  std::string out;
  int borrow = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    int s = (a[a.size() - 1 - i] - '0') - borrow - (i < b.size() ? b[b.size() - 1 - i] - '0' : 0);
    borrow = s < 0 ? 1 : 0;
    out.push_back(static_cast<char>('0' + (s + 10) % 10));
  }
  std::reverse(out.begin(), out.end());
  return strip(out);
}

std::pair<bool, std::string> split_sign(const std::string& s) {
  if (!s.empty() && s[0] == '-') return {true, s.substr(1)};
  return {false, s};
}

std::string with_sign(bool neg, const std::string& mag) { return neg && mag != "0" ? "-" + mag : mag; }

}  // namespace

std::string decimal_add(const std::string& a, const std::string& b) {
  const auto [na, ma] = split_sign(a);
  const auto [nb, mb] = split_sign(b);
  if (na == nb) return with_sign(na, add_mag(ma, mb));
  const int c = cmp_mag(ma, mb);
  if (c == 0) return "0";
  return c > 0 ? with_sign(na, sub_mag(ma, mb)) : with_sign(nb, sub_mag(mb, ma));
}

std::string decimal_mul(const std::string& a, const std::string& b) {
  const auto [na, ma] = split_sign(a);
  const auto [nb, mb] = split_sign(b);
  std::vector<int> acc(ma.size() + mb.size(), 0);
  for (std::size_t i = 0; i < ma.size(); ++i) {
    for (std::size_t j = 0; j < mb.size(); ++j) {
      acc[ma.size() - 1 - i + mb.size() - 1 - j] += (ma[i] - '0') * (mb[j] - '0');
    }
  }
  std::string out;
  long carry = 0;
  for (std::size_t k = 0; k < acc.size(); ++k) {
    long s = acc[k] + carry;
    out.push_back(static_cast<char>('0' + s % 10));
    carry = s / 10;
  }
  while (carry) {
    out.push_back(static_cast<char>('0' + carry % 10));
    carry /= 10;
  }
  std::reverse(out.begin(), out.end());
  return with_sign(na != nb, strip(out));
}

}  // namespace exf::oracle
