#include "exf/budget.hpp"

#include <algorithm>
#include <initializer_list>

#include "exf/errors.hpp"

namespace exf {

Rat softmax_delta(const Rat& eps) {
  if (eps.sign() <= 0) throw DomainError("softmax_delta requires eps > 0");
  return std::min(Rat(BigInt(1), BigInt(2)), eps / Rat(16));
}

Rat inv_sqrt_delta(const Rat& c, const Rat& eps, std::size_t bits) {
  if (c.sign() <= 0 || eps.sign() <= 0) throw DomainError("inv_sqrt_delta requires c > 0 and eps > 0");
  // c sqrt(c) / ((2c+1) sqrt 2) = c sqrt(c/2) / (2c+1)
  const Rat half_c = c / Rat(2);
  const Rat root = rat_sqrt_lower(half_c, bits + half_c.num().bit_length() + half_c.den().bit_length());
  // the error chain bounds 1/(1+eta) by 2, which needs |eta| <= 1/2
  return std::min({half_c, Rat(BigInt(1), BigInt(2)), c * root / (Rat(2) * c + Rat(1)) * eps});
}

long bits_for(const Rat& delta) {
  if (delta.sign() <= 0) throw DomainError("bits_for requires delta > 0");
  // 2^-t <= a/b  <=>  b <= a 2^t
  long t = std::max(1L, static_cast<long>(delta.den().bit_length()) - static_cast<long>(delta.num().bit_length()));
  while (delta.den() > (delta.num() << static_cast<std::size_t>(t))) ++t;
  while (t > 1 && delta.den() <= (delta.num() << static_cast<std::size_t>(t - 1))) --t;
  return t;
}

const BudgetSite& ErrorBudget::softmax_site(std::size_t layer, std::size_t head) const {
  for (const auto& s : sites) {
    if (s.kind == SiteKind::softmax && s.layer == layer && s.index == head) return s;
  }
  throw DomainError("no softmax site for layer " + std::to_string(layer) + " head " + std::to_string(head));
}

const BudgetSite& ErrorBudget::layernorm_site(std::size_t layer, std::size_t which) const {
  for (const auto& s : sites) {
    if (s.kind == SiteKind::inv_sqrt && s.layer == layer && s.index == which) return s;
  }
  throw DomainError("no layernorm site for layer " + std::to_string(layer) + " norm " + std::to_string(which));
}

namespace {

// min over the finite candidates; nullopt stands for "no constraint"
Rat min_of(std::initializer_list<std::optional<Rat>> xs) {
  std::optional<Rat> best;
  for (const auto& x : xs) {
    if (x && (!best || *x < *best)) best = x;
  }
  return *best;
}

std::optional<Rat> ratio(const Rat& num, const Rat& den) {
  if (den.is_zero()) return std::nullopt;
  return num / den;
}

struct Planner {
  const Model& m;
  std::size_t n;
  ModelBounds bounds;
  ErrorBudget out;

  void stage(std::string name, const Rat& in, const Rat& tau) {
    out.stages.push_back({std::move(name), in, tau, tau / in});
  }

  // y = gamma (x - mean) g + beta with g ~ 1/sqrt(var + c).
  Rat layernorm(const Rat& tau, const LayerNormParams& ln, const Box& box, std::size_t li, std::size_t which) {
    const Rat G = inv_sqrt_upper(ln.c);
    Rat gamma(0);
    for (const auto& g : ln.gamma) gamma = std::max(gamma, g.abs());
    const Rat U = centered_bound(box);
    // gamma U |g^ - g| <= tau/2 and 4 gamma G e <= tau/2
    const Rat eps_is = min_of({G, ratio(tau, Rat(2) * gamma * U)});
    const Rat delta = inv_sqrt_delta(ln.c, eps_is);
    // |var^ - var| <= 2e (2U + 2e) <= 4e(U + 1) for e <= 1
    const Rat e_in = min_of({Rat(1), ratio(tau, Rat(8) * gamma * G), delta / (Rat(4) * U + Rat(4))});
    const std::string name = "layer " + std::to_string(li) + " layernorm " + std::to_string(which);
    out.sites.push_back({name, SiteKind::inv_sqrt, li, which, eps_is, delta, bits_for(delta)});
    out.layernorm_floor = out.layernorm_floor ? std::min(*out.layernorm_floor, ln.c) : ln.c;
    stage(name, e_in, tau);
    return e_in;
  }

  Rat ffnn(const Rat& tau, const Layer& layer, std::size_t li) {
    const auto& f = *layer.ffnn;
    const Rat rho = Rat(layer.ffnn_residual ? 1 : 0) + mat_norm_inf(f.w2) * mat_norm_inf(f.w1);
    const Rat e_in = min_of({Rat(1), ratio(tau, rho)});
    stage("layer " + std::to_string(li) + " ffnn", e_in, tau);
    return e_in;
  }

  Rat attention(const Rat& tau, const Layer& layer, std::size_t li) {
    const LayerBounds& lb = bounds.layers[li];
    const Rat res(layer.attention_residual ? 1 : 0);
    const Rat H(BigInt(layer.heads.size()));
    Rat value_coef = res;
    std::vector<std::optional<Rat>> limits{Rat(1)};
    for (std::size_t hi = 0; hi < layer.heads.size(); ++hi) {
      const auto& h = layer.heads[hi];
      const HeadBounds& hb = lb.heads[hi];
      const Rat wq = mat_norm_inf(h.w_q), wk = mat_norm_inf(h.w_k);
      const Rat wv = mat_norm_inf(h.w_v), wo = mat_norm_inf(h.w_o);
      value_coef += wo * wv;
      // sum_j |a^_j - a_j| |v_j| <= n eps_a V per head; heads share tau/2 equally
      const Rat V = box_mag(hb.v);
      const Rat eps_a = min_of({Rat(1), ratio(tau, Rat(2) * H * Rat(BigInt(n)) * wo * V)});
      const Rat delta = softmax_delta(eps_a);
      // |s^ - s| <= d_h (|W_Q| e K + Q |W_K| e + |W_Q| |W_K| e^2)
      const Rat dh(BigInt(h.w_q.size()));
      const Rat S = dh * (box_mag(hb.q) * wk + box_mag(hb.k) * wq + wq * wk);
      limits.push_back(ratio(delta, S));
      out.sites.push_back({"layer " + std::to_string(li) + " head " + std::to_string(hi) + " softmax",
                           SiteKind::softmax, li, hi, eps_a, delta, bits_for(delta)});
    }
    // sum_j a^_j |v^_j - v_j| <= |W_V| e, plus the residual path
    limits.push_back(ratio(tau, Rat(2) * value_coef));
    std::optional<Rat> best;
    for (const auto& x : limits) {
      if (x && (!best || *x < *best)) best = x;
    }
    stage("layer " + std::to_string(li) + " attention", *best, tau);
    return *best;
  }
};

}  // namespace

ErrorBudget plan_budget(const Model& m, std::size_t n, const Rat& eps) {
  if (eps.sign() <= 0) throw DomainError("epsilon must be positive, got " + eps.str());
  if (n == 0) throw DomainError("plan_budget requires n >= 1");
  if (!m.all_heads(AttentionKind::softmax)) {
    throw ModeError("budgeted evaluation requires softmax attention in every head");
  }
  Planner pl{m, n, interval_bounds(m, n), {}};
  pl.out.epsilon = eps;
  pl.out.n = n;
  pl.out.activation_bound = pl.bounds.activation_bound;

  // |h . (x^ - x)| <= |h|_1 tau
  Rat tau(1);
  if (auto t = ratio(eps, vec_norm1(m.output.weights))) tau = *t;
  pl.out.output_tolerance = tau;
  pl.stage("output head", tau, eps);

  for (std::size_t li = m.layers.size(); li-- > 0;) {
    const Layer& layer = m.layers[li];
    const LayerBounds& lb = pl.bounds.layers[li];
    if (layer.ffnn_layernorm) tau = pl.layernorm(tau, *layer.ffnn_layernorm, lb.ffnn, li, 2);
    if (layer.ffnn) tau = pl.ffnn(tau, layer, li);
    if (layer.attention_layernorm) tau = pl.layernorm(tau, *layer.attention_layernorm, lb.attention, li, 1);
    tau = pl.attention(tau, layer, li);
  }
  pl.out.input_tolerance = tau;
  return pl.out;
}

}  // namespace exf
