#include "exf/model.hpp"

#include "exf/errors.hpp"

namespace exf {

std::string_view to_string(AttentionKind k) {
  return k == AttentionKind::softmax ? "softmax" : "average_hard";
}
std::string_view to_string(Masking m) { return m == Masking::none ? "none" : "causal"; }
std::string_view to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }
std::string_view to_string(PositionKind k) {
  switch (k) {
    case PositionKind::none: return "none";
    case PositionKind::scaled_index: return "scaled_index";
    case PositionKind::inverse_index: return "inverse_index";
    case PositionKind::table: return "table";
  }
  return "none";
}

bool Model::has_layernorm() const {
  for (const auto& l : layers) {
    if (l.attention_layernorm || l.ffnn_layernorm) return true;
  }
  return false;
}

bool Model::all_heads(AttentionKind kind) const {
  for (const auto& l : layers) {
    for (const auto& h : l.heads) {
      if (h.kind != kind) return false;
    }
  }
  return true;
}

bool in_param_range(const Rat& x, int param_bits) {
  const BigInt bound = BigInt::pow2(static_cast<std::size_t>(param_bits));
  return x.num() >= -bound && x.num() < bound && x.den() < bound;
}

namespace {

struct Checker {
  int bits;

  void value(const Rat& x, const std::string& path) const {
    if (!in_param_range(x, bits)) {
      throw LoadError(path, "value " + x.str() + " outside the " + std::to_string(bits) + "-bit parameter range");
    }
  }
  void vec(const Vec& v, std::size_t len, const std::string& path) const {
    if (v.size() != len) {
      throw LoadError(path, "expected length " + std::to_string(len) + ", got " + std::to_string(v.size()));
    }
    for (std::size_t i = 0; i < v.size(); ++i) value(v[i], path + "/" + std::to_string(i));
  }
  // rows x cols; rows == 0 allowed only when want_rows is 0
  void mat(const Mat& w, std::size_t rows, std::size_t cols, const std::string& path) const {
    if (w.size() != rows) {
      throw LoadError(path, "expected " + std::to_string(rows) + " rows, got " + std::to_string(w.size()));
    }
    for (std::size_t r = 0; r < w.size(); ++r) vec(w[r], cols, path + "/" + std::to_string(r));
  }
  std::size_t rows_of(const Mat& w, const std::string& path) const {
    if (w.empty()) throw LoadError(path, "matrix has no rows");
    return w.size();
  }
  void layernorm(const LayerNormParams& ln, std::size_t d, const std::string& path) const {
    vec(ln.gamma, d, path + "/gamma");
    vec(ln.beta, d, path + "/beta");
    value(ln.c, path + "/c");
    if (ln.c.sign() <= 0) throw LoadError(path + "/c", "layernorm requires c > 0, got " + ln.c.str());
  }
};

}  // namespace

void validate_model(const Model& m) {
  if (m.param_bits < 2) throw LoadError("/param_bits", "must be at least 2");
  if (m.dim == 0) throw LoadError("/dim", "must be positive");
  const Checker ck{m.param_bits};
  const std::size_t d = m.dim;

  if (m.alphabet.empty()) throw LoadError("/alphabet", "must not be empty");
  for (std::size_t i = 0; i < m.alphabet.size(); ++i) {
    const auto& s = m.alphabet[i];
    if (s.size() != 1) throw LoadError("/alphabet/" + std::to_string(i), "symbols must be single characters");
    for (std::size_t j = 0; j < i; ++j) {
      if (m.alphabet[j] == s) throw LoadError("/alphabet/" + std::to_string(i), "duplicate symbol '" + s + "'");
    }
    if (!m.token_embeddings.contains(s)) throw LoadError("/token_embeddings", "missing symbol '" + s + "'");
  }
  for (const auto& [sym, v] : m.token_embeddings) {
    bool known = false;
    for (const auto& s : m.alphabet) known = known || s == sym;
    if (!known) throw LoadError("/token_embeddings/" + sym, "symbol not in the alphabet");
    ck.vec(v, d, "/token_embeddings/" + sym);
  }

  const auto& pos = m.position;
  if (pos.kind == PositionKind::scaled_index || pos.kind == PositionKind::inverse_index) {
    if (pos.component >= d) throw LoadError("/position/component", "component out of range");
  }
  if (pos.kind == PositionKind::table) {
    if (pos.rows.empty()) throw LoadError("/position/rows", "table must have at least one row");
    ck.mat(pos.rows, pos.rows.size(), d, "/position/rows");
  }

  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const auto& layer = m.layers[li];
    const std::string lp = "/layers/" + std::to_string(li);
    for (std::size_t hi = 0; hi < layer.heads.size(); ++hi) {
      const auto& h = layer.heads[hi];
      const std::string hp = lp + "/heads/" + std::to_string(hi);
      const std::size_t dh = ck.rows_of(h.w_q, hp + "/w_q");
      ck.mat(h.w_q, dh, d, hp + "/w_q");
      ck.mat(h.w_k, dh, d, hp + "/w_k");
      const std::size_t dv = ck.rows_of(h.w_v, hp + "/w_v");
      ck.mat(h.w_v, dv, d, hp + "/w_v");
      ck.mat(h.w_o, d, dv, hp + "/w_o");
    }
    if (layer.attention_layernorm) ck.layernorm(*layer.attention_layernorm, d, lp + "/attention_layernorm");
    if (layer.ffnn) {
      const auto& f = *layer.ffnn;
      const std::size_t hidden = ck.rows_of(f.w1, lp + "/ffnn/w1");
      ck.mat(f.w1, hidden, d, lp + "/ffnn/w1");
      ck.vec(f.b1, hidden, lp + "/ffnn/b1");
      ck.mat(f.w2, d, hidden, lp + "/ffnn/w2");
      ck.vec(f.b2, d, lp + "/ffnn/b2");
    }
    if (layer.ffnn_layernorm) ck.layernorm(*layer.ffnn_layernorm, d, lp + "/ffnn_layernorm");
  }
  ck.vec(m.output.weights, d, "/output/weights");
  ck.value(m.output.bias, "/output/bias");
}

Vec position_embedding(const PositionRule& rule, std::size_t dim, std::size_t i, std::size_t n) {
  if (i < 1 || i > n) throw DomainError("position " + std::to_string(i) + " outside [1, " + std::to_string(n) + "]");
  Vec out(dim, Rat(0));
  switch (rule.kind) {
    case PositionKind::none:
      break;
    case PositionKind::scaled_index:
      out.at(rule.component) = Rat(BigInt(i), BigInt(n));
      break;
    case PositionKind::inverse_index:
      out.at(rule.component) = Rat(BigInt(1), BigInt(i));
      break;
    case PositionKind::table:
      if (n > rule.rows.size()) {
        throw DomainError("input length " + std::to_string(n) + " exceeds the position table (" +
                          std::to_string(rule.rows.size()) + " rows)");
      }
      out = rule.rows[i - 1];
      break;
  }
  return out;
}

std::vector<Vec> embed_input(const Model& m, std::string_view w) {
  if (w.empty()) throw DomainError("input must be nonempty: the output is read from the last position");
  std::vector<Vec> xs;
  xs.reserve(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    auto it = m.token_embeddings.find(std::string(1, w[i]));
    if (it == m.token_embeddings.end()) {
      throw DomainError(std::string("symbol '") + w[i] + "' at position " + std::to_string(i + 1) + " is not in the alphabet");
    }
    Vec x = it->second;
    if (m.position.kind != PositionKind::none) {
      const Vec pe = position_embedding(m.position, m.dim, i + 1, w.size());
      for (std::size_t k = 0; k < x.size(); ++k) x[k] += pe[k];
    }
    xs.push_back(std::move(x));
  }
  return xs;
}

Vec mat_vec(const Mat& w, const Vec& x) {
  Vec y;
  y.reserve(w.size());
  for (const auto& row : w) {
    std::vector<Rat> terms;
    terms.reserve(row.size());
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (!row[k].is_zero() && !x[k].is_zero()) terms.push_back(row[k] * x[k]);
    }
    y.push_back(terms.empty() ? Rat(0) : rat_sum(terms));
  }
  return y;
}

}  // namespace exf
