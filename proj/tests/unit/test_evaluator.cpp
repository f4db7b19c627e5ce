#include <doctest.h>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "exf/budget.hpp"
#include "exf/errors.hpp"
#include "exf/evaluator.hpp"
#include "exf/fixtures.hpp"
#include "exf/oracles.hpp"
#include "helpers.hpp"

using namespace exf;
using exf::test::R;

namespace {

// Direct formula for one attention-only layer with residual, no norms, no
// feed-forward, read out at the last position. Independent of the evaluator.
Rat reference_one_layer(const Model& m, const std::string& w) {
  const auto xs = embed_input(m, w);
  const std::size_t n = xs.size();
  auto dot = [](const Vec& a, const Vec& b) {
    Rat s(0);
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  Vec out = xs[n - 1];
  for (const auto& h : m.layers.at(0).heads) {
    const Vec q = mat_vec(h.w_q, xs[n - 1]);
    std::vector<Rat> scores;
    for (const auto& x : xs) scores.push_back(dot(q, mat_vec(h.w_k, x)));
    const Rat top = *std::max_element(scores.begin(), scores.end());
    const long ties = std::count(scores.begin(), scores.end(), top);
    Vec avg(h.w_v.size(), Rat(0));
    for (std::size_t j = 0; j < n; ++j) {
      if (scores[j] != top) continue;
      const Vec v = mat_vec(h.w_v, xs[j]);
      for (std::size_t k = 0; k < v.size(); ++k) avg[k] += v[k] / Rat(ties);
    }
    const Vec o = mat_vec(h.w_o, avg);
    for (std::size_t k = 0; k < o.size(); ++k) out[k] += o[k];
  }
  return dot(m.output.weights, out) + m.output.bias;
}

std::string random_word(std::mt19937_64& rng, const Model& m, std::size_t n) {
  std::string w;
  for (std::size_t i = 0; i < n; ++i) w += m.alphabet[rng() % m.alphabet.size()];
  return w;
}

Rat majority_value(const std::string& w) {
  const long ones = std::count(w.begin(), w.end(), '1');
  return Rat(BigInt(ones), BigInt(static_cast<long>(w.size()))) - R("1/2");
}

}  // namespace

TEST_SUITE("evaluator") {
  TEST_CASE("average-hard weights") {
    CHECK(ahardmax_weights(std::vector<Rat>{R("1"), R("3"), R("3")}) == Vec{R("0"), R("1/2"), R("1/2")});
    CHECK(ahardmax_weights(std::vector<Rat>{R("5")}) == Vec{R("1")});
    CHECK(ahardmax_weights(std::vector<Rat>(7, R("-2/3"))) == Vec(7, R("1/7")));
    CHECK_THROWS_AS(ahardmax_weights(std::vector<Rat>{}), DomainError);
  }

  TEST_CASE("average-hard weights are invariant under shift and positive scale") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
      std::vector<Rat> s;
      const std::size_t n = 1 + rng() % 9;
      for (std::size_t j = 0; j < n; ++j) s.emplace_back(BigInt(static_cast<long>(rng() % 5)), BigInt(1 + static_cast<long>(rng() % 2)));
      const Vec w = ahardmax_weights(s);
      Rat total(0);
      for (const auto& x : w) {
        CHECK(x.sign() >= 0);
        total += x;
      }
      CHECK(total == R("1"));
      const Rat c(BigInt(static_cast<long>(rng() % 100) - 50), BigInt(7));
      const Rat k(BigInt(1 + static_cast<long>(rng() % 100)), BigInt(3));
      std::vector<Rat> t;
      for (const auto& x : s) t.push_back(x * k + c);
      CHECK(ahardmax_weights(t) == w);
    }
  }

  TEST_CASE("majority fixture, exact mode") {
    const Model m = build_majority_model();
    CHECK(eval_ahat(m, "1101").value == R("1/4"));
    CHECK(eval_ahat(m, "100").value == R("-1/6"));
    CHECK(eval_ahat(m, "1").value == R("1/2"));
    CHECK(eval_ahat(m, "0010").value == R("-1/4"));
    CHECK(recognize(m, "111", EvalContext::ahat()) == Decision::accept);
    CHECK(recognize(m, "000", EvalContext::ahat()) == Decision::reject);
    CHECK_THROWS_AS(recognize(m, "10", EvalContext::ahat()), TieError);
    CHECK_THROWS_AS(eval_ahat(m, ""), DomainError);
    CHECK_THROWS_AS(eval_ahat(m, "12"), DomainError);
  }

  TEST_CASE("exact mode matches a direct formula") {
    std::mt19937_64 rng(17);
    for (const Model& m : {build_majority_model(), build_ahat_position_model()}) {
      for (int i = 0; i < 150; ++i) {
        const std::string w = random_word(rng, m, 1 + rng() % 20);
        CHECK(eval_ahat(m, w).value == reference_one_layer(m, w));
      }
    }
    const Model pos = build_ahat_position_model();
    CHECK(eval_ahat(pos, "1000").value == R("-1/4"));
    CHECK(eval_ahat(pos, "0001").value == R("1/2"));
    CHECK(eval_ahat(pos, "01000").value == R("-1/10"));
    CHECK(eval_ahat(pos, "0100").value == R("0"));
  }

  TEST_CASE("head order does not change the exact result") {
    Model m = build_ahat_position_model();
    Model extra = build_majority_model();
    // a second head reading token identity into the output slot
    AttentionHead h = extra.layers[0].heads[0];
    h.w_o = {{R("0")}, {R("0")}, {R("1/3")}};
    m.layers[0].heads.push_back(h);
    Model swapped = m;
    std::swap(swapped.layers[0].heads[0], swapped.layers[0].heads[1]);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 50; ++i) {
      const std::string w = random_word(rng, m, 1 + rng() % 12);
      const AhatResult a = eval_ahat(m, w), b = eval_ahat(swapped, w);
      CHECK(a.value == b.value);
      CHECK(a.value == reference_one_layer(m, w));
    }
  }

  TEST_CASE("exact mode rejects softmax and layernorm models") {
    CHECK_THROWS_AS(eval_ahat(build_softmax_uniform_model(), "1"), ModeError);
    CHECK_THROWS_AS(eval_ahat(build_softmax_layernorm_model(), "a"), ModeError);
  }

  TEST_CASE("depth-0 model is affine in the last embedding") {
    const Model m = build_depth0_model();
    CHECK(eval_ahat(m, "ba").value == R("3/4") - R("1/8"));
    CHECK(eval_ahat(m, "aab").value == R("-1/2") - R("1/8"));
    CHECK(eval_smat_pbit(m, "bba", 8).to_rat() == R("5/8"));
    CHECK(eval_budgeted(m, "ab", R("1/1000")).value == R("-5/8"));
  }

  TEST_CASE("softmax in p-bit arithmetic") {
    for (int p : {8, 24, 53}) {
      const PFloat z = PFloat::zero(p);
      const auto w = softmax_pbit(std::vector<PFloat>{z, z}, p);
      for (const auto& x : w) {
        CHECK((x.to_rat() - R("1/2")).abs() <= R("1/2") * pow2_rat(-p + 3));
      }
      const auto one = softmax_pbit(std::vector<PFloat>{round_p(R("-7/3"), p)}, p);
      CHECK(one[0].to_rat() == R("1"));
      // [t, 0]: first weight increases with t and approaches 1
      Rat prev(0);
      for (long t = 0; t <= 40; t += 4) {
        const auto ws = softmax_pbit(std::vector<PFloat>{round_p(Rat(t), p), z}, p);
        CHECK(ws[0].to_rat() >= prev);
        prev = ws[0].to_rat();
      }
      CHECK(prev >= Rat(1) - pow2_rat(-p + 3));
    }
  }

  TEST_CASE("softmax with rational exp approximations") {
    const Vec w = softmax_rational(std::vector<Rat>{R("0"), R("0"), R("0")}, 40);
    CHECK(w == Vec(3, R("1/3")));
    const Vec v = softmax_rational(std::vector<Rat>{R("1"), R("-2"), R("1/2")}, 60);
    Rat total(0);
    for (const auto& x : v) total += x;
    CHECK(total == R("1"));
    CHECK((v[0] - test::Q("6037489", "10000000")).abs() < R("1/1000000"));   // e/(e + e^-2 + e^(1/2))
  }

  TEST_CASE("layer normalization") {
    const LayerNormParams ln{{R("1"), R("1"), R("1")}, {R("0"), R("0"), R("0")}, R("1/4")};
    const Vec c = layernorm_rational(std::vector<Rat>{R("5/3"), R("5/3"), R("5/3")}, ln, 30);
    CHECK(c == Vec(3, R("0")));
    const LayerNormParams zero{{R("0"), R("0")}, {R("1/2"), R("-3")}, R("1")};
    CHECK(layernorm_rational(std::vector<Rat>{R("7"), R("-1")}, zero, 30) == Vec{R("1/2"), R("-3")});
    const auto cp = layernorm_pbit(std::vector<PFloat>(3, round_p(R("5/4"), 16)), ln, 16);
    for (const auto& x : cp) CHECK(x.is_zero());
    const auto zp = layernorm_pbit(std::vector<PFloat>{round_p(R("7"), 16), round_p(R("-1"), 16)}, zero, 16);
    CHECK(zp[0].to_rat() == R("1/2"));
    CHECK(zp[1].to_rat() == R("-3"));
    // x = [1, -1], c = 1: var = 1, (x - 0) / sqrt 2
    const LayerNormParams id{{R("1"), R("1")}, {R("0"), R("0")}, R("1")};
    const Vec y = layernorm_rational(std::vector<Rat>{R("1"), R("-1")}, id, 60);
    CHECK((y[0] - test::Q("7071067811865475", "10000000000000000")).abs() < pow2_rat(-50));
  }

  TEST_CASE("single position: attention is the identity") {
    const Model m = build_softmax_layernorm_model();
    for (const char* w : {"a", "b"}) {
      const Rat exact = eval_budgeted(m, w, pow2_rat(-80)).value;
      CHECK((eval_smat_pbit(m, w, 53).to_rat() - exact).abs() < pow2_rat(-45));
    }
    CHECK(eval_smat_pbit(build_softmax_uniform_model(), "1", 24).to_rat() == R("1/2"));
  }

  TEST_CASE("softmax-uniform fixture") {
    const Model m = build_softmax_uniform_model();
    CHECK((eval_smat_pbit(m, "1101", 64).to_rat() - R("1/4")).abs() <= pow2_rat(-48));
    CHECK((eval_budgeted(m, "1101", pow2_rat(-64)).value - R("1/4")).abs() <= pow2_rat(-64));
    std::mt19937_64 rng(9);
    for (int i = 0; i < 20; ++i) {
      const std::string w = random_word(rng, m, 1 + rng() % 16);
      CHECK((eval_budgeted(m, w, pow2_rat(-30)).value - majority_value(w)).abs() <= pow2_rat(-30));
    }
  }

  TEST_CASE("budget constants") {
    CHECK(softmax_delta(R("1")) == R("1/16"));
    CHECK(softmax_delta(R("100")) == R("1/2"));
    // c = 1: delta = eps / (3 sqrt 2), from below
    const Rat eps = pow2_rat(-20);
    const Rat d = inv_sqrt_delta(R("1"), eps);
    const Rat ideal_sq = eps * eps / Rat(18);
    CHECK(d * d <= ideal_sq);
    CHECK(d * d >= ideal_sq * (Rat(1) - pow2_rat(-60)));
    CHECK(inv_sqrt_delta(R("1/4"), R("1000")) == R("1/8"));
    CHECK(inv_sqrt_delta(R("4"), R("1000")) == R("1/2"));
    CHECK(bits_for(R("1/16")) == 4);
    CHECK(bits_for(R("1/17")) == 5);
    CHECK(bits_for(R("3")) == 1);
  }

  TEST_CASE("budget with no approximated operations") {
    Model m = build_depth0_model();
    m.output.weights = {R("1"), R("0")};
    const ErrorBudget b = plan_budget(m, 5, R("1/64"));
    CHECK(b.sites.empty());
    CHECK(b.input_tolerance == R("1/64"));
    CHECK_THROWS_AS(plan_budget(m, 5, R("0")), DomainError);
    CHECK_THROWS_AS(plan_budget(build_majority_model(), 3, R("1")), ModeError);
  }

  TEST_CASE("budget sites tighten with epsilon") {
    const Model m = build_softmax_layernorm_model();
    const ErrorBudget loose = plan_budget(m, 8, pow2_rat(-10));
    const ErrorBudget tight = plan_budget(m, 8, pow2_rat(-100));
    REQUIRE(loose.sites.size() == 3);
    REQUIRE(tight.sites.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(tight.sites[i].bits > loose.sites[i].bits);
      CHECK(pow2_rat(-tight.sites[i].bits) <= tight.sites[i].delta);
    }
    CHECK(loose.softmax_site(0, 0).kind == SiteKind::softmax);
    CHECK(loose.layernorm_site(0, 1).kind == SiteKind::inv_sqrt);
    CHECK(loose.activation_bound > R("0"));
  }

  TEST_CASE("budgeted evaluation honours epsilon") {
    const Model m = build_softmax_layernorm_model();
    std::mt19937_64 rng(13);
    for (int i = 0; i < 12; ++i) {
      const std::string w = random_word(rng, m, 1 + rng() % 10);
      const Rat e1 = pow2_rat(-10), e2 = pow2_rat(-100);
      const Rat a = eval_budgeted(m, w, e1).value, b = eval_budgeted(m, w, e2).value;
      CHECK((a - b).abs() <= e1 + e2);
      // self-consistency against a 2^-20 tighter run
      const Rat e3 = pow2_rat(-24);
      CHECK((eval_budgeted(m, w, e3).value - eval_budgeted(m, w, e3 * pow2_rat(-20)).value).abs() <= e3);
    }
  }

  TEST_CASE("p-bit outputs refine with precision") {
    const Model m = build_softmax_layernorm_model();
    std::mt19937_64 rng(23);
    for (int i = 0; i < 10; ++i) {
      const std::string w = random_word(rng, m, 1 + rng() % 8);
      const Rat ref = eval_budgeted(m, w, pow2_rat(-120)).value;
      for (int p : {24, 53}) {
        const Rat lo = eval_smat_pbit(m, w, p).to_rat(), hi = eval_smat_pbit(m, w, 2 * p).to_rat();
        const Rat scale = std::max(ref.abs(), R("1"));
        CHECK((lo - hi).abs() <= scale * pow2_rat(-p + 8));
        CHECK((hi - ref).abs() <= scale * pow2_rat(-2 * p + 8));
      }
    }
  }

  TEST_CASE("margin recognition") {
    const Model m = build_softmax_uniform_model();
    CHECK(margin_recognize(m, "1101", R("1/8")) == MarginDecision::accept);
    CHECK(margin_recognize(m, "0010", R("1/8")) == MarginDecision::reject);
    CHECK_THROWS_AS(margin_recognize(m, "1", R("0")), DomainError);
    CHECK(recognize(m, "1101", EvalContext::pbit(24)) == Decision::accept);
    CHECK(recognize(m, "1101", EvalContext::budgeted(R("1/100"))) == Decision::accept);
    CHECK_THROWS_AS(recognize(m, "10", EvalContext::budgeted(R("1/100"))), TieError);
    CHECK_THROWS_AS(EvalContext({EvalMode::smat_pbit, std::nullopt, std::nullopt}).validate(), DomainError);
  }

  TEST_CASE("bit growth") {
    const std::vector<std::size_t> ns{4, 8, 16, 32, 64, 128, 256};
    const BitGrowthReport d0 = bit_growth_trace(build_depth0_model(), ns);
    for (const auto& row : d0.rows) CHECK(row.max_bits == d0.rows.front().max_bits);
    CHECK(std::abs(d0.slope) < 1e-9);
    const BitGrowthReport maj = bit_growth_trace(build_majority_model(), ns);
    CHECK(maj.slope <= 1.2);
    for (std::size_t i = 1; i < maj.rows.size(); ++i) {
      CHECK(maj.rows[i].max_bits <= 2 * maj.rows[i - 1].max_bits + 8);
    }
    CHECK_THROWS_AS(bit_growth_trace(build_softmax_uniform_model(), ns), ModeError);
    const std::vector<std::size_t> xs{1, 2, 4}, ys{3, 6, 12};
    CHECK(loglog_slope(xs, ys) == doctest::Approx(1.0));
  }
}
