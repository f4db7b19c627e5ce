#include "exf/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "exf/elementary.hpp"
#include "exf/errors.hpp"

namespace exf {

std::string_view to_string(EvalMode m) {
  switch (m) {
    case EvalMode::ahat_exact: return "ahat";
    case EvalMode::smat_pbit: return "smat";
    case EvalMode::smat_budgeted: return "budgeted";
  }
  return "ahat";
}

std::string_view to_string(Decision d) { return d == Decision::accept ? "accept" : "reject"; }

std::string_view to_string(MarginDecision d) {
  switch (d) {
    case MarginDecision::accept: return "accept";
    case MarginDecision::reject: return "reject";
    case MarginDecision::below_margin: return "below_margin";
  }
  return "below_margin";
}

void EvalContext::validate() const {
  switch (mode) {
    case EvalMode::ahat_exact:
      if (p || epsilon) throw DomainError("ahat mode takes neither a precision nor an epsilon");
      break;
    case EvalMode::smat_pbit:
      if (!p || epsilon) throw DomainError("smat mode takes a precision and no epsilon");
      check_precision(*p);
      break;
    case EvalMode::smat_budgeted:
      if (p || !epsilon) throw DomainError("budgeted mode takes an epsilon and no precision");
      if (epsilon->sign() <= 0) throw DomainError("epsilon must be positive");
      break;
  }
}

std::size_t EvalTrace::max_bits() const {
  std::size_t b = embedding_max_bits;
  for (const auto& l : layers) b = std::max(b, l.max_bits);
  return b;
}

Vec ahardmax_weights(std::span<const Rat> scores) {
  if (scores.empty()) throw DomainError("ahardmax of an empty row");
  const Rat top = rat_max(scores);
  std::size_t count = 0;
  for (const auto& s : scores) count += s == top ? 1 : 0;
  const Rat w(BigInt(1), BigInt(count));
  Vec out;
  out.reserve(scores.size());
  for (const auto& s : scores) out.push_back(s == top ? w : Rat(0));
  return out;
}

std::vector<PFloat> softmax_pbit(std::span<const PFloat> scores, int p) {
  if (scores.empty()) throw DomainError("softmax of an empty row");
  std::vector<PFloat> num;
  num.reserve(scores.size());
  for (const auto& s : scores) num.push_back(f_exp(s));
  const PFloat den = f_sum_blocks(num, p);
  std::vector<PFloat> out;
  out.reserve(num.size());
  for (const auto& e : num) out.push_back(f_div(e, den));
  return out;
}

namespace {

// floor to a dyadic with relative error below 2^-bits, for x > 0
Rat round_relative(const Rat& x, long bits) {
  const long s = bits + 1 - (static_cast<long>(x.num().bit_length()) - static_cast<long>(x.den().bit_length()));
  if (s >= 0) return rat_truncate(x, static_cast<std::size_t>(s));
  const Rat scale = pow2_rat(-s);
  return Rat(rat_floor(x / scale)) * scale;
}

// relative error <= 2^-(bits+1) + 2^-(bits+2) (1 + 2^-(bits+1)) < 2^-bits
Rat exp_approx(const Rat& x, long bits) {
  if (x.is_zero()) return Rat(1);
  return round_relative(exp_rational(x, bits + 1), bits + 2);
}

Rat sqrt_approx(const Rat& x, long bits) { return round_relative(sqrt_rational(x, bits + 1), bits + 2); }

Rat sum_of(std::vector<Rat>& xs) {
  std::erase_if(xs, [](const Rat& x) { return x.is_zero(); });
  if (xs.empty()) return Rat(0);
  if (xs.size() == 1) return xs.front();
  return rat_sum(xs);
}

}  // namespace

Vec softmax_rational(std::span<const Rat> scores, long bits) {
  if (scores.empty()) throw DomainError("softmax of an empty row");
  const Rat top = rat_max(scores);
  Vec num;
  num.reserve(scores.size());
  for (const auto& s : scores) num.push_back(exp_approx(s - top, bits));
  Vec copy = num;
  const Rat den = sum_of(copy);
  for (auto& e : num) e = e / den;
  return num;
}

std::vector<PFloat> layernorm_pbit(std::span<const PFloat> x, const LayerNormParams& ln, int p) {
  const PFloat d = round_p(Rat(BigInt(x.size())), p);
  const PFloat mean = f_div(f_sum_blocks(x, p), d);
  std::vector<PFloat> z, sq;
  for (const auto& xi : x) {
    z.push_back(f_sub(xi, mean));
    sq.push_back(f_mul(z.back(), z.back()));
  }
  const PFloat var = f_div(f_sum_blocks(sq, p), d);
  const PFloat s = f_sqrt(f_add(var, round_p(ln.c, p)));
  std::vector<PFloat> out;
  for (std::size_t k = 0; k < x.size(); ++k) {
    out.push_back(f_add(f_mul(round_p(ln.gamma[k], p), f_div(z[k], s)), round_p(ln.beta[k], p)));
  }
  return out;
}

Vec layernorm_rational(std::span<const Rat> x, const LayerNormParams& ln, long bits) {
  const Rat d(BigInt(x.size()));
  std::vector<Rat> xs(x.begin(), x.end());
  const Rat mean = sum_of(xs) / d;
  Vec z, sq;
  for (const auto& xi : x) {
    z.push_back(xi - mean);
    sq.push_back(z.back() * z.back());
  }
  const Rat var = sum_of(sq) / d;
  const Rat s = sqrt_approx(var + ln.c, bits);
  Vec out;
  for (std::size_t k = 0; k < x.size(); ++k) out.push_back(ln.gamma[k] * z[k] / s + ln.beta[k]);
  return out;
}

namespace {

template <class T>
using VecT = std::vector<T>;
template <class T>
using MatT = std::vector<VecT<T>>;

// Arithmetic on exact rationals; subclasses decide attention and layernorm.
struct RatOps {
  using T = Rat;
  LayerTrace* trace = nullptr;

  T conv(const Rat& x) const { return x; }
  T zero() const { return Rat(0); }
  bool is_zero(const T& x) const { return x.is_zero(); }
  int sign(const T& x) const { return x.sign(); }
  T mul(const T& a, const T& b) const { return a * b; }
  T sum(VecT<T>& xs) const { return sum_of(xs); }
  void see(const T& x) {
    if (!trace) return;
    const std::size_t nb = x.num().bit_length(), db = x.den().bit_length();
    trace->max_num_bits = std::max(trace->max_num_bits, nb);
    trace->max_den_bits = std::max(trace->max_den_bits, db);
    trace->max_bits = std::max(trace->max_bits, nb + db);
  }
};

struct AhatOps : RatOps {
  VecT<T> weights(const VecT<T>& s, std::size_t, std::size_t) const { return ahardmax_weights(s); }
  VecT<T> layernorm(const VecT<T>&, const LayerNormParams&, std::size_t, std::size_t) const {
    throw ModeError("average-hard evaluation does not admit layer normalization");
  }
};

struct BudgetOps : RatOps {
  const ErrorBudget* budget = nullptr;
  VecT<T> weights(const VecT<T>& s, std::size_t li, std::size_t hi) const {
    return softmax_rational(s, budget->softmax_site(li, hi).bits);
  }
  VecT<T> layernorm(const VecT<T>& x, const LayerNormParams& ln, std::size_t li, std::size_t which) const {
    return layernorm_rational(x, ln, budget->layernorm_site(li, which).bits);
  }
};

struct PbitOps {
  using T = PFloat;
  int p;
  LayerTrace* trace = nullptr;

  T conv(const Rat& x) const { return round_p(x, p); }
  T zero() const { return PFloat::zero(p); }
  bool is_zero(const T& x) const { return x.is_zero(); }
  int sign(const T& x) const { return x.sign(); }
  T mul(const T& a, const T& b) const { return f_mul(a, b); }
  T sum(VecT<T>& xs) const { return f_sum_blocks(xs, p); }
  void see(const T&) {}
  VecT<T> weights(const VecT<T>& s, std::size_t, std::size_t) const { return softmax_pbit(s, p); }
  VecT<T> layernorm(const VecT<T>& x, const LayerNormParams& ln, std::size_t, std::size_t) const {
    return layernorm_pbit(x, ln, p);
  }
};

template <class Ops>
class Forward {
 public:
  using T = typename Ops::T;

  Forward(const Model& m, Ops& ops) : m_(m), ops_(ops) {}

  VecT<T> embed(const Vec& x) {
    VecT<T> out;
    for (const auto& v : x) out.push_back(ops_.conv(v));
    return out;
  }

  std::vector<VecT<T>> layer(std::size_t li, const std::vector<VecT<T>>& xs) {
    const Layer& layer = m_.layers[li];
    const std::size_t n = xs.size();
    const std::size_t d = m_.dim;

    // head_out[h][i] is the d-vector W_O a_i of head h
    std::vector<std::vector<VecT<T>>> head_out;
    for (std::size_t hi = 0; hi < layer.heads.size(); ++hi) {
      const auto& h = layer.heads[hi];
      const MatT<T> wq = conv(h.w_q), wk = conv(h.w_k), wv = conv(h.w_v), wo = conv(h.w_o);
      std::vector<VecT<T>> q, k, v;
      for (const auto& x : xs) {
        q.push_back(affine(wq, x));
        k.push_back(affine(wk, x));
        v.push_back(affine(wv, x));
      }
      std::vector<VecT<T>> outs;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t last = h.masking == Masking::causal ? i + 1 : n;
        VecT<T> scores;
        for (std::size_t j = 0; j < last; ++j) scores.push_back(dot(q[i], k[j]));
        const VecT<T> alpha = ops_.weights(scores, li, hi);
        for (const auto& a : alpha) ops_.see(a);
        VecT<T> a;
        for (std::size_t c = 0; c < wv.size(); ++c) {
          VecT<T> terms;
          for (std::size_t j = 0; j < last; ++j) {
            if (!ops_.is_zero(alpha[j]) && !ops_.is_zero(v[j][c])) terms.push_back(ops_.mul(alpha[j], v[j][c]));
          }
          a.push_back(ops_.sum(terms));
          ops_.see(a.back());
        }
        outs.push_back(affine(wo, a));
      }
      head_out.push_back(std::move(outs));
    }

    std::vector<VecT<T>> ys;
    for (std::size_t i = 0; i < n; ++i) {
      VecT<T> y;
      for (std::size_t c = 0; c < d; ++c) {
        VecT<T> terms;
        if (layer.attention_residual) terms.push_back(xs[i][c]);
        for (const auto& ho : head_out) terms.push_back(ho[i][c]);
        y.push_back(ops_.sum(terms));
        ops_.see(y.back());
      }
      if (layer.attention_layernorm) y = norm(y, *layer.attention_layernorm, li, 1);
      if (layer.ffnn) y = ffnn(*layer.ffnn, layer.ffnn_residual, y);
      if (layer.ffnn_layernorm) y = norm(y, *layer.ffnn_layernorm, li, 2);
      ys.push_back(std::move(y));
    }
    return ys;
  }

  T output(const VecT<T>& x) {
    const VecT<T> w = embed(m_.output.weights);
    const T b = ops_.conv(m_.output.bias);
    return dot(w, x, &b);
  }

 private:
  MatT<T> conv(const Mat& w) {
    MatT<T> out;
    for (const auto& row : w) out.push_back(embed(row));
    return out;
  }

  T dot(const VecT<T>& w, const VecT<T>& x, const T* bias = nullptr) {
    VecT<T> terms;
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (!ops_.is_zero(w[k]) && !ops_.is_zero(x[k])) terms.push_back(ops_.mul(w[k], x[k]));
    }
    if (bias && !ops_.is_zero(*bias)) terms.push_back(*bias);
    T r = ops_.sum(terms);
    ops_.see(r);
    return r;
  }

  VecT<T> affine(const MatT<T>& w, const VecT<T>& x, const VecT<T>* bias = nullptr) {
    VecT<T> out;
    for (std::size_t r = 0; r < w.size(); ++r) out.push_back(dot(w[r], x, bias ? &(*bias)[r] : nullptr));
    return out;
  }

  VecT<T> norm(const VecT<T>& x, const LayerNormParams& ln, std::size_t li, std::size_t which) {
    VecT<T> y = ops_.layernorm(x, ln, li, which);
    for (const auto& v : y) ops_.see(v);
    return y;
  }

  VecT<T> ffnn(const FeedForward& f, bool residual, const VecT<T>& x) {
    const VecT<T> b1 = embed(f.b1), b2 = embed(f.b2);
    VecT<T> hidden = affine(conv(f.w1), x, &b1);
    if (f.activation == Activation::relu) {
      for (auto& h : hidden) {
        if (ops_.sign(h) < 0) h = ops_.zero();
      }
    }
    const MatT<T> w2 = conv(f.w2);
    VecT<T> y;
    for (std::size_t c = 0; c < w2.size(); ++c) {
      VecT<T> terms;
      for (std::size_t k = 0; k < hidden.size(); ++k) {
        if (!ops_.is_zero(w2[c][k]) && !ops_.is_zero(hidden[k])) terms.push_back(ops_.mul(w2[c][k], hidden[k]));
      }
      if (!ops_.is_zero(b2[c])) terms.push_back(b2[c]);
      if (residual) terms.push_back(x[c]);
      y.push_back(ops_.sum(terms));
      ops_.see(y.back());
    }
    return y;
  }

  const Model& m_;
  Ops& ops_;
};

// Runs the layers; `trace` (rational ops only) collects per-layer snapshots.
template <class Ops>
typename Ops::T run(const Model& m, std::string_view w, Ops& ops, EvalTrace* trace) {
  Forward<Ops> fwd(m, ops);
  const std::vector<Vec> emb = embed_input(m, w);
  std::vector<VecT<typename Ops::T>> xs;
  for (const auto& e : emb) xs.push_back(fwd.embed(e));
  if (trace) {
    trace->embeddings = emb;
    for (const auto& e : emb) {
      for (const auto& x : e) {
        trace->embedding_max_bits = std::max(trace->embedding_max_bits, x.num().bit_length() + x.den().bit_length());
      }
    }
  }
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    LayerTrace lt;
    if constexpr (std::is_same_v<typename Ops::T, Rat>) {
      if (trace) ops.trace = &lt;
    }
    xs = fwd.layer(li, xs);
    if constexpr (std::is_same_v<typename Ops::T, Rat>) {
      if (trace) {
        ops.trace = nullptr;
        lt.activations = xs;
        trace->layers.push_back(std::move(lt));
      }
    }
  }
  return fwd.output(xs.back());
}

}  // namespace

AhatResult eval_ahat(const Model& m, std::string_view w) {
  if (!m.all_heads(AttentionKind::average_hard)) throw ModeError("ahat evaluation requires average-hard attention in every head");
  if (m.has_layernorm()) throw ModeError("ahat evaluation does not admit layer normalization");
  AhatOps ops;
  AhatResult r;
  r.value = run(m, w, ops, &r.trace);
  return r;
}

PFloat eval_smat_pbit(const Model& m, std::string_view w, int p) {
  check_precision(p);
  if (!m.all_heads(AttentionKind::softmax)) throw ModeError("smat evaluation requires softmax attention in every head");
  PbitOps ops{p};
  return run(m, w, ops, nullptr);
}

BudgetedResult eval_budgeted(const Model& m, std::string_view w, const Rat& eps) {
  BudgetedResult r;
  r.budget = plan_budget(m, w.size(), eps);
  BudgetOps ops;
  ops.budget = &r.budget;
  r.value = run(m, w, ops, nullptr);
  return r;
}

Decision recognize(const Model& m, std::string_view w, const EvalContext& ctx) {
  ctx.validate();
  int sign = 0;
  switch (ctx.mode) {
    case EvalMode::ahat_exact: sign = eval_ahat(m, w).value.sign(); break;
    case EvalMode::smat_pbit: sign = eval_smat_pbit(m, w, *ctx.p).sign(); break;
    case EvalMode::smat_budgeted: sign = eval_budgeted(m, w, *ctx.epsilon).value.sign(); break;
  }
  if (sign == 0) throw TieError("output is exactly 0; membership is undefined");
  return sign > 0 ? Decision::accept : Decision::reject;
}

MarginDecision margin_recognize(const Model& m, std::string_view w, const Rat& margin) {
  if (margin.sign() <= 0) throw DomainError("margin must be positive");
  const int sign = eval_budgeted(m, w, margin).value.sign();
  if (sign > 0) return MarginDecision::accept;
  if (sign < 0) return MarginDecision::reject;
  return MarginDecision::below_margin;
}

double loglog_slope(std::span<const std::size_t> xs, std::span<const std::size_t> ys) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] == 0 || ys[i] == 0) continue;
    const double x = std::log(static_cast<double>(xs[i]));
    const double y = std::log(static_cast<double>(ys[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++k;
  }
  if (k < 2) return 0;
  const double kd = static_cast<double>(k);
  const double den = kd * sxx - sx * sx;
  return den == 0 ? 0 : (kd * sxy - sx * sy) / den;
}

BitGrowthReport bit_growth_trace(const Model& m, std::span<const std::size_t> lengths) {
  if (!m.all_heads(AttentionKind::average_hard) || m.has_layernorm()) {
    throw ModeError("bit growth is measured in ahat mode; the model is not ahat-compatible");
  }
  BitGrowthReport rep;
  rep.families = {"repeated", "alternating", "random"};
  const std::string a0 = m.alphabet.front();
  const std::string a1 = m.alphabet.size() > 1 ? m.alphabet[1] : a0;
  std::vector<std::size_t> ns, bits;
  for (std::size_t n : lengths) {
    std::mt19937_64 rng(0x5eedULL + n);
    std::vector<std::string> inputs(3);
    for (std::size_t i = 0; i < n; ++i) {
      inputs[0] += a1;
      inputs[1] += i % 2 == 0 ? a1 : a0;
      inputs[2] += m.alphabet[rng() % m.alphabet.size()];
    }
    BitGrowthRow row;
    row.n = n;
    row.layer_max_bits.assign(m.layers.size(), 0);
    for (const auto& w : inputs) {
      const AhatResult r = eval_ahat(m, w);
      for (std::size_t li = 0; li < r.trace.layers.size(); ++li) {
        row.layer_max_bits[li] = std::max(row.layer_max_bits[li], r.trace.layers[li].max_bits);
      }
      row.max_bits = std::max(row.max_bits, r.trace.max_bits());
    }
    ns.push_back(n);
    bits.push_back(row.max_bits);
    rep.rows.push_back(std::move(row));
  }
  rep.slope = loglog_slope(ns, bits);
  return rep;
}

}  // namespace exf
