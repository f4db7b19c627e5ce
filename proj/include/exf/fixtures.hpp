#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "exf/model.hpp"

namespace exf {

// One-layer transformer over {0,1}: every score ties, so attention averages
// the token indicator; output = (#1s)/n - 1/2. Recognizes MAJORITY on odd
// lengths. `kind` picks average-hard (default) or softmax attention; with
// equal scores the two agree exactly.
Model build_majority_model(AttentionKind kind = AttentionKind::average_hard);

// Same as majority but with softmax attention.
Model build_softmax_uniform_model();

// No layers: output = weights . embedding of the last symbol + bias.
Model build_depth0_model();

// Softmax head whose scores vary with position, post-attention layernorm,
// ReLU feed-forward block and a second layernorm. No closed form; used for
// self-consistency and refinement checks.
Model build_softmax_layernorm_model();

// Average-hard head whose scores grow with position (scaled index), so the
// maximum is unique: attends to the last position carrying a 1.
Model build_ahat_position_model();

// "majority", "majority_softmax" (= "softmax_uniform"), "depth0",
// "softmax_layernorm", "ahat_position". LoadError for unknown names.
Model builtin_model(std::string_view name);
std::vector<std::string> builtin_model_names();

}  // namespace exf
