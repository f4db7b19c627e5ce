#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "exf/bounds.hpp"
#include "exf/model.hpp"

namespace exf {

// delta = min(1/2, eps/16): scores off by at most delta and exp relative
// error at most delta keep every softmax output within eps.
Rat softmax_delta(const Rat& eps);
// delta = min(c/2, c sqrt(c) / ((2c+1) sqrt 2) * eps) for 1/sqrt(x), x >= c.
// Also capped at 1/2 so the sqrt relative error stays above -1/2.
// The irrational factor is replaced by a rational lower bound accurate to
// about 2^-bits relative, so the result never exceeds the exact formula.
Rat inv_sqrt_delta(const Rat& c, const Rat& eps, std::size_t bits = 64);
// Smallest t >= 1 with 2^-t <= delta.
long bits_for(const Rat& delta);

enum class SiteKind { softmax, inv_sqrt };

// One approximated operation: its output tolerance, the derived delta and
// the relative precision used for exp / sqrt there.
struct BudgetSite {
  std::string name;  // "layer 0 head 1 softmax", "layer 0 layernorm 2"
  SiteKind kind = SiteKind::softmax;
  std::size_t layer = 0;
  std::size_t index = 0;  // head index, or 1 / 2 for the two layernorms
  Rat tolerance;          // allowed error of the site's output
  Rat delta;
  long bits = 1;
};

// Amplification from a stage's input error to its output error.
struct StageEntry {
  std::string stage;
  Rat input_tolerance;
  Rat output_tolerance;
  Rat rho;  // output / input
};

struct ErrorBudget {
  Rat epsilon;
  std::size_t n = 0;
  std::vector<BudgetSite> sites;
  std::vector<StageEntry> stages;  // output to input order
  Rat activation_bound;            // C
  std::optional<Rat> layernorm_floor;  // smallest c
  Rat output_tolerance;            // max-norm tolerance on the last layer's output
  Rat input_tolerance;             // tolerance the first layer's input could absorb

  const BudgetSite& softmax_site(std::size_t layer, std::size_t head) const;
  const BudgetSite& layernorm_site(std::size_t layer, std::size_t which) const;
};

// Walks the layers from the output back to the embeddings. Errors are
// measured in the max norm over all positions and components. Requires
// softmax heads only; DomainError for eps <= 0, ModeError otherwise.
ErrorBudget plan_budget(const Model& m, std::size_t n, const Rat& eps);

}  // namespace exf
