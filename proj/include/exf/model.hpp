#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "exf/rational.hpp"

namespace exf {

using Vec = std::vector<Rat>;
using Mat = std::vector<Vec>;  // row-major; y = W x

enum class AttentionKind { softmax, average_hard };
enum class Masking { none, causal };
enum class Activation { relu, identity };
enum class PositionKind { none, scaled_index, inverse_index, table };

std::string_view to_string(AttentionKind k);
std::string_view to_string(Masking m);
std::string_view to_string(Activation a);
std::string_view to_string(PositionKind k);

// q = W_Q x, k = W_K x (d_h x d), v = W_V x (d_v x d), out = W_O a (d x d_v).
struct AttentionHead {
  AttentionKind kind = AttentionKind::softmax;
  Masking masking = Masking::none;
  Mat w_q, w_k, w_v, w_o;
  friend bool operator==(const AttentionHead&, const AttentionHead&) = default;
};

// (x - mean) / sqrt(var + c) * gamma + beta, c > 0
struct LayerNormParams {
  Vec gamma, beta;
  Rat c;
  friend bool operator==(const LayerNormParams&, const LayerNormParams&) = default;
};

// w2 act(w1 x + b1) + b2
struct FeedForward {
  Mat w1;
  Vec b1;
  Activation activation = Activation::relu;
  Mat w2;
  Vec b2;
  friend bool operator==(const FeedForward&, const FeedForward&) = default;
};

// Post-norm encoder layer:
//   x <- norm1([x] + sum_h head_h(x))
//   x <- norm2([x] + ffnn(x))
struct Layer {
  std::vector<AttentionHead> heads;
  bool attention_residual = true;
  std::optional<LayerNormParams> attention_layernorm;
  std::optional<FeedForward> ffnn;
  bool ffnn_residual = true;
  std::optional<LayerNormParams> ffnn_layernorm;
  friend bool operator==(const Layer&, const Layer&) = default;
};

// scaled_index puts i/n and inverse_index 1/i into `component`; table adds
// rows[i-1] (so n <= rows.size()).
struct PositionRule {
  PositionKind kind = PositionKind::none;
  std::size_t component = 0;
  Mat rows;
  friend bool operator==(const PositionRule&, const PositionRule&) = default;
};

// Scalar output from the last position: weights . x_n + bias.
struct OutputHead {
  Vec weights;
  Rat bias;
  friend bool operator==(const OutputHead&, const OutputHead&) = default;
};

struct Model {
  int param_bits = 16;  // parameters are <a|b> with a in [-2^p, 2^p), b in [1, 2^p)
  std::vector<std::string> alphabet;  // single-byte symbols
  std::size_t dim = 0;
  std::map<std::string, Vec> token_embeddings;
  PositionRule position;
  std::vector<Layer> layers;
  OutputHead output;
  friend bool operator==(const Model&, const Model&) = default;

  bool has_layernorm() const;
  bool all_heads(AttentionKind kind) const;
};

// Throws LoadError with the offending field path.
void validate_model(const Model& m);

bool in_param_range(const Rat& x, int param_bits);

// Position embedding of position i (1-based) in a length-n input.
// DomainError when i is out of range or n exceeds a table.
Vec position_embedding(const PositionRule& rule, std::size_t dim, std::size_t i, std::size_t n);

// Token embedding plus position embedding for each symbol of w.
// DomainError for a symbol outside the alphabet or an empty input.
std::vector<Vec> embed_input(const Model& m, std::string_view w);

// y = W x (+ b)
Vec mat_vec(const Mat& w, const Vec& x);

}  // namespace exf
