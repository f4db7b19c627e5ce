#include "exf/fixtures.hpp"

#include "exf/errors.hpp"

namespace exf {

namespace {

Rat q(std::string_view s) { return Rat::parse(s); }

Vec v(std::initializer_list<const char*> xs) {
  Vec out;
  for (const char* x : xs) out.push_back(q(x));
  return out;
}

}  // namespace

Model build_majority_model(AttentionKind kind) {
  Model m;
  m.param_bits = 8;
  m.alphabet = {"0", "1"};
  m.dim = 3;
  // [is_one, average slot, constant 1]
  m.token_embeddings["0"] = v({"0", "0", "1"});
  m.token_embeddings["1"] = v({"1", "0", "1"});
  AttentionHead h;
  h.kind = kind;
  h.w_q = {v({"0", "0", "1"})};
  h.w_k = {v({"0", "0", "1"})};
  h.w_v = {v({"1", "0", "0"})};
  h.w_o = {v({"0"}), v({"1"}), v({"0"})};
  Layer layer;
  layer.heads.push_back(std::move(h));
  m.layers.push_back(std::move(layer));
  m.output = {v({"0", "1", "0"}), q("-1/2")};
  validate_model(m);
  return m;
}

Model build_softmax_uniform_model() { return build_majority_model(AttentionKind::softmax); }

Model build_depth0_model() {
  Model m;
  m.param_bits = 8;
  m.alphabet = {"a", "b"};
  m.dim = 2;
  m.token_embeddings["a"] = v({"1", "0"});
  m.token_embeddings["b"] = v({"0", "1"});
  m.output = {v({"3/4", "-1/2"}), q("-1/8")};
  validate_model(m);
  return m;
}

Model build_softmax_layernorm_model() {
  Model m;
  m.param_bits = 8;
  m.alphabet = {"a", "b"};
  m.dim = 3;
  m.token_embeddings["a"] = v({"1", "0", "0"});
  m.token_embeddings["b"] = v({"0", "1", "0"});
  m.position = {PositionKind::scaled_index, 2, {}};
  AttentionHead h;
  h.kind = AttentionKind::softmax;
  h.w_q = {v({"1", "1", "1"}), v({"0", "0", "1"})};
  h.w_k = {v({"0", "0", "2"}), v({"1", "-1", "0"})};
  h.w_v = {v({"1", "-1", "0"})};
  h.w_o = {v({"1/2"}), v({"0"}), v({"-1/4"})};
  Layer layer;
  layer.heads.push_back(std::move(h));
  layer.attention_layernorm = LayerNormParams{v({"1", "1", "1/2"}), v({"0", "0", "1/4"}), q("1/4")};
  layer.ffnn = FeedForward{{v({"1", "-1", "0"}), v({"0", "1", "1"})},
                           v({"0", "-1/2"}),
                           Activation::relu,
                           {v({"1", "0"}), v({"0", "1"}), v({"1/2", "1/2"})},
                           v({"0", "0", "0"})};
  layer.ffnn_layernorm = LayerNormParams{v({"1", "1", "1"}), v({"0", "0", "0"}), q("1")};
  m.layers.push_back(std::move(layer));
  m.output = {v({"1", "-1", "1/2"}), q("-1/8")};
  validate_model(m);
  return m;
}

Model build_ahat_position_model() {
  Model m;
  m.param_bits = 8;
  m.alphabet = {"0", "1"};
  m.dim = 3;
  // [is_one, position i/n, output slot]
  m.token_embeddings["0"] = v({"0", "0", "0"});
  m.token_embeddings["1"] = v({"1", "0", "0"});
  m.position = {PositionKind::scaled_index, 1, {}};
  AttentionHead h;
  h.kind = AttentionKind::average_hard;
  // score(i, j) = (i/n) (is_one(j) + j/(2n)): ones beat zeros, later beats earlier
  h.w_q = {v({"0", "1", "0"})};
  h.w_k = {v({"1", "1/2", "0"})};
  h.w_v = {v({"0", "1", "0"})};
  h.w_o = {v({"0"}), v({"0"}), v({"1"})};
  Layer layer;
  layer.heads.push_back(std::move(h));
  m.layers.push_back(std::move(layer));
  m.output = {v({"0", "0", "1"}), q("-1/2")};
  validate_model(m);
  return m;
}

Model builtin_model(std::string_view name) {
  if (name == "majority") return build_majority_model();
  if (name == "majority_softmax" || name == "softmax_uniform") return build_softmax_uniform_model();
  if (name == "depth0") return build_depth0_model();
  if (name == "softmax_layernorm") return build_softmax_layernorm_model();
  if (name == "ahat_position") return build_ahat_position_model();
  throw LoadError("", "unknown built-in model \"" + std::string(name) + "\"");
}

std::vector<std::string> builtin_model_names() {
  return {"majority", "softmax_uniform", "depth0", "softmax_layernorm", "ahat_position"};
}

}  // namespace exf
