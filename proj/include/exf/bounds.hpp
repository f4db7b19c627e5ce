#pragma once

#include <cstddef>
#include <vector>

#include "exf/model.hpp"

namespace exf {

struct Interval {
  Rat lo, hi;
  Rat mag() const;  // max(|lo|, |hi|)
  friend bool operator==(const Interval&, const Interval&) = default;
};
using Box = std::vector<Interval>;

// Max absolute row sum, the operator norm induced by the max norm.
Rat mat_norm_inf(const Mat& w);
Rat vec_norm1(const Vec& v);
Rat box_mag(const Box& b);

Box mat_box(const Mat& w, const Box& x);
Box add_box(const Box& a, const Box& b);
Box relu_box(const Box& x);
// Upper bound on |x_k - mean(x)| for x in the box.
Rat centered_bound(const Box& x);
Box layernorm_box(const Box& x, const LayerNormParams& ln);

// Upper bound on 1/sqrt(c).
Rat inv_sqrt_upper(const Rat& c);

// Enclosures of the exact activations of every input of length n, per
// component and shared by all positions.
struct HeadBounds {
  Box q, k, v;
};
struct LayerBounds {
  Box input;
  std::vector<HeadBounds> heads;
  Box attention;  // residual + heads, before the first layernorm
  Box after_attention;
  Box ffnn;  // residual + ffnn, before the second layernorm
  Box output;
};
struct ModelBounds {
  Box embedding;
  std::vector<LayerBounds> layers;
  Rat activation_bound;  // C: max magnitude over every box above
};

ModelBounds interval_bounds(const Model& m, std::size_t n);

}  // namespace exf
