#include "exf/bounds.hpp"

#include <algorithm>
#include <optional>

#include "exf/errors.hpp"

namespace exf {

Rat Interval::mag() const { return std::max(lo.abs(), hi.abs()); }

Rat mat_norm_inf(const Mat& w) {
  Rat best(0);
  for (const auto& row : w) best = std::max(best, vec_norm1(row));
  return best;
}

Rat vec_norm1(const Vec& v) {
  Rat s(0);
  for (const auto& x : v) s += x.abs();
  return s;
}

Rat box_mag(const Box& b) {
  Rat best(0);
  for (const auto& i : b) best = std::max(best, i.mag());
  return best;
}

Box mat_box(const Mat& w, const Box& x) {
  Box out;
  out.reserve(w.size());
  for (const auto& row : w) {
    Rat lo(0), hi(0);
    for (std::size_t k = 0; k < row.size(); ++k) {
      const Rat& a = row[k];
      if (a.sign() >= 0) {
        lo += a * x[k].lo;
        hi += a * x[k].hi;
      } else {
        lo += a * x[k].hi;
        hi += a * x[k].lo;
      }
    }
    out.push_back({lo, hi});
  }
  return out;
}

Box add_box(const Box& a, const Box& b) {
  Box out;
  for (std::size_t k = 0; k < a.size(); ++k) out.push_back({a[k].lo + b[k].lo, a[k].hi + b[k].hi});
  return out;
}

Box relu_box(const Box& x) {
  Box out;
  for (const auto& i : x) out.push_back({std::max(i.lo, Rat(0)), std::max(i.hi, Rat(0))});
  return out;
}

Rat centered_bound(const Box& x) {
  Rat hi = x.front().hi, lo = x.front().lo;
  for (const auto& i : x) {
    hi = std::max(hi, i.hi);
    lo = std::min(lo, i.lo);
  }
  return hi - lo;
}

Rat inv_sqrt_upper(const Rat& c) {
  if (c.sign() <= 0) throw DomainError("inv_sqrt_upper requires c > 0");
  const std::size_t bits = 64 + c.den().bit_length();
  Rat s = rat_sqrt_lower(c, bits);
  if (s.sign() <= 0) throw DomainError("sqrt lower bound collapsed to zero");
  return Rat(1) / s;
}

Box layernorm_box(const Box& x, const LayerNormParams& ln) {
  const std::size_t d = x.size();
  // |x_k - mean| <= sigma sqrt(d - 1) and <= U, sigma^2 + c >= max(sigma^2, c)
  const Rat ratio = std::min(rat_sqrt_upper(Rat(BigInt(d > 1 ? d - 1 : 0)), 32),
                             centered_bound(x) * inv_sqrt_upper(ln.c));
  Box out;
  for (std::size_t k = 0; k < d; ++k) {
    const Rat r = ln.gamma[k].abs() * ratio;
    out.push_back({ln.beta[k] - r, ln.beta[k] + r});
  }
  return out;
}

namespace {

Box hull(const Box& a, const Box& b) {
  Box out;
  for (std::size_t k = 0; k < a.size(); ++k) {
    out.push_back({std::min(a[k].lo, b[k].lo), std::max(a[k].hi, b[k].hi)});
  }
  return out;
}

Box point_box(const Vec& v) {
  Box out;
  for (const auto& x : v) out.push_back({x, x});
  return out;
}

}  // namespace

ModelBounds interval_bounds(const Model& m, std::size_t n) {
  if (n == 0) throw DomainError("interval_bounds requires n >= 1");
  ModelBounds out;
  Rat c_max(0);
  auto note = [&](const Box& b) { c_max = std::max(c_max, box_mag(b)); };

  std::optional<Box> emb;
  for (const auto& [sym, tok] : m.token_embeddings) {
    for (std::size_t i = 1; i <= n; ++i) {
      Vec x = tok;
      if (m.position.kind != PositionKind::none) {
        const Vec pe = position_embedding(m.position, m.dim, i, n);
        for (std::size_t k = 0; k < x.size(); ++k) x[k] += pe[k];
      }
      emb = emb ? hull(*emb, point_box(x)) : point_box(x);
      if (m.position.kind == PositionKind::none) break;
    }
  }
  out.embedding = *emb;
  note(out.embedding);

  Box x = out.embedding;
  for (const auto& layer : m.layers) {
    LayerBounds lb;
    lb.input = x;
    Box acc = layer.attention_residual ? x : point_box(Vec(m.dim, Rat(0)));
    for (const auto& h : layer.heads) {
      HeadBounds hb{mat_box(h.w_q, x), mat_box(h.w_k, x), mat_box(h.w_v, x)};
      note(hb.q);
      note(hb.k);
      note(hb.v);
      // attention output is a convex combination of values
      acc = add_box(acc, mat_box(h.w_o, hb.v));
      lb.heads.push_back(std::move(hb));
    }
    lb.attention = acc;
    note(acc);
    x = layer.attention_layernorm ? layernorm_box(acc, *layer.attention_layernorm) : acc;
    lb.after_attention = x;
    note(x);
    if (layer.ffnn) {
      const auto& f = *layer.ffnn;
      Box hidden = add_box(mat_box(f.w1, x), point_box(f.b1));
      note(hidden);
      if (f.activation == Activation::relu) hidden = relu_box(hidden);
      Box y = add_box(mat_box(f.w2, hidden), point_box(f.b2));
      if (layer.ffnn_residual) y = add_box(y, x);
      x = y;
    }
    lb.ffnn = x;
    note(x);
    if (layer.ffnn_layernorm) x = layernorm_box(x, *layer.ffnn_layernorm);
    lb.output = x;
    note(x);
    out.layers.push_back(std::move(lb));
  }
  out.activation_bound = c_max;
  return out;
}

}  // namespace exf
