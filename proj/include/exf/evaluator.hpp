#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "exf/budget.hpp"
#include "exf/model.hpp"
#include "exf/pfloat.hpp"

namespace exf {

enum class EvalMode { ahat_exact, smat_pbit, smat_budgeted };
std::string_view to_string(EvalMode m);

struct EvalContext {
  EvalMode mode = EvalMode::ahat_exact;
  std::optional<int> p;        // smat_pbit
  std::optional<Rat> epsilon;  // smat_budgeted

  static EvalContext ahat() { return {EvalMode::ahat_exact, std::nullopt, std::nullopt}; }
  static EvalContext pbit(int p) { return {EvalMode::smat_pbit, p, std::nullopt}; }
  static EvalContext budgeted(Rat eps) { return {EvalMode::smat_budgeted, std::nullopt, std::move(eps)}; }
  // DomainError unless exactly the mode's fields are set (and eps > 0, p >= 2).
  void validate() const;
};

struct LayerTrace {
  std::vector<Vec> activations;  // layer output, one vector per position
  std::size_t max_num_bits = 0;  // over every intermediate of the layer
  std::size_t max_den_bits = 0;
  std::size_t max_bits = 0;      // num + den bits of the widest intermediate
};

struct EvalTrace {
  std::vector<Vec> embeddings;
  std::size_t embedding_max_bits = 0;
  std::vector<LayerTrace> layers;
  // max over embeddings and all layers
  std::size_t max_bits() const;
};

// Weight 1/|argmax| on each maximal score, 0 elsewhere.
Vec ahardmax_weights(std::span<const Rat> scores);
// exp via f_exp, denominator via f_sum_blocks, quotients via f_div.
std::vector<PFloat> softmax_pbit(std::span<const PFloat> scores, int p);
// Softmax with each exponential approximated to relative error 2^-bits;
// all other steps exact. Scores are shifted by their maximum first.
Vec softmax_rational(std::span<const Rat> scores, long bits);

// (x - mean) / sqrt(var + c) * gamma + beta.
std::vector<PFloat> layernorm_pbit(std::span<const PFloat> x, const LayerNormParams& ln, int p);
// Same with the square root to relative error 2^-bits; everything else exact.
Vec layernorm_rational(std::span<const Rat> x, const LayerNormParams& ln, long bits);

struct AhatResult {
  Rat value;
  EvalTrace trace;
};
// Exact rational evaluation. ModeError for softmax heads or layernorm.
AhatResult eval_ahat(const Model& m, std::string_view w);

// Every primitive rounded to p bits; n-ary sums exact-then-rounded.
// ModeError for average-hard heads.
PFloat eval_smat_pbit(const Model& m, std::string_view w, int p);

struct BudgetedResult {
  Rat value;
  ErrorBudget budget;
};
// |value - T(w)| <= eps where T is the exact real-valued transformer.
BudgetedResult eval_budgeted(const Model& m, std::string_view w, const Rat& eps);

enum class Decision { accept, reject };
enum class MarginDecision { accept, reject, below_margin };
std::string_view to_string(Decision d);
std::string_view to_string(MarginDecision d);

// Sign of the output in the given regime. TieError when it is exactly 0.
Decision recognize(const Model& m, std::string_view w, const EvalContext& ctx);
// Budgeted evaluation at error `margin`: accept when T^ > 0, reject when
// T^ < 0, below_margin when T^ == 0.
MarginDecision margin_recognize(const Model& m, std::string_view w, const Rat& margin);

struct BitGrowthRow {
  std::size_t n = 0;
  std::vector<std::size_t> layer_max_bits;  // per layer, max over input families
  std::size_t max_bits = 0;                 // including embeddings
};
struct BitGrowthReport {
  std::vector<BitGrowthRow> rows;
  double slope = 0;  // least-squares slope of log(max_bits) against log(n)
  std::vector<std::string> families;
};
// Evaluates eval_ahat on all-ones, alternating and seeded random inputs of
// each length (first alphabet symbols), recording bit widths.
BitGrowthReport bit_growth_trace(const Model& m, std::span<const std::size_t> lengths);

double loglog_slope(std::span<const std::size_t> xs, std::span<const std::size_t> ys);

}  // namespace exf
