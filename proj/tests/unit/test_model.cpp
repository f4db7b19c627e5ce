#include <doctest.h>

#include <json.hpp>

#include <string>

#include "exf/errors.hpp"
#include "exf/fixtures.hpp"
#include "exf/model.hpp"
#include "exf/model_io.hpp"
#include "helpers.hpp"

using namespace exf;
using exf::test::R;
using json = nlohmann::json;

namespace {

json majority_json() { return json::parse(serialize_model(build_majority_model())); }

std::string load_error_path(const json& j) {
  try {
    parse_model(j.dump());
  } catch (const LoadError& e) {
    return e.path();
  }
  return "<no error>";
}

}  // namespace

TEST_SUITE("model-ir") {
  TEST_CASE("builtin models round-trip through JSON") {
    for (const auto& name : builtin_model_names()) {
      CAPTURE(name);
      const Model m = builtin_model(name);
      const std::string text = serialize_model(m);
      const Model back = parse_model(text);
      CHECK(back == m);
      CHECK(serialize_model(back) == text);
    }
    CHECK_THROWS_AS(builtin_model("nope"), LoadError);
  }

  TEST_CASE("shipped model files match the builtins") {
    for (const char* name : {"majority", "softmax_uniform", "depth0", "softmax_layernorm", "ahat_position"}) {
      CAPTURE(name);
      const Model file = load_model(std::string(EXF_SOURCE_DIR) + "/models/" + name + ".json");
      CHECK(file == builtin_model(name));
    }
    CHECK(load_model("builtin:majority") == build_majority_model());
    CHECK_THROWS_AS(load_model("/nonexistent/model.json"), LoadError);
  }

  TEST_CASE("layernorm constant must be positive") {
    json j = json::parse(serialize_model(build_softmax_layernorm_model()));
    j["layers"][0]["attention_layernorm"]["c"] = "0";
    CHECK(load_error_path(j).find("/layers/0/attention_layernorm/c") != std::string::npos);
    j["layers"][0]["attention_layernorm"]["c"] = "-1/4";
    CHECK_THROWS_AS(parse_model(j.dump()), LoadError);
  }

  TEST_CASE("load errors carry a field path") {
    json j = majority_json();
    j["layers"][0]["heads"][0]["w_q"][0][1] = 3;   // not a string
    CHECK(load_error_path(j).find("w_q") != std::string::npos);

    j = majority_json();
    j["output"]["bias"] = "2/4";   // not canonical
    CHECK(load_error_path(j).find("/output/bias") != std::string::npos);

    j = majority_json();
    j["token_embeddings"]["1"] = json::array({"1", "0"});   // wrong dim
    CHECK(load_error_path(j).find("token_embeddings") != std::string::npos);

    j = majority_json();
    j["extra"] = 1;
    CHECK(load_error_path(j) != "<no error>");

    j = majority_json();
    j["format_version"] = 2;
    CHECK(load_error_path(j) != "<no error>");

    j = majority_json();
    j["alphabet"] = json::array({"0", "0"});
    CHECK(load_error_path(j) != "<no error>");

    j = majority_json();
    j["alphabet"] = json::array({"0", "1", "ab"});
    CHECK(load_error_path(j) != "<no error>");

    CHECK_THROWS_AS(parse_model("{not json"), LoadError);
  }

  TEST_CASE("parameters must fit the declared precision") {
    CHECK(in_param_range(R("255/254"), 8));
    CHECK(in_param_range(R("-256"), 8));
    CHECK_FALSE(in_param_range(R("256"), 8));
    CHECK_FALSE(in_param_range(R("1/256"), 8));
    CHECK(in_param_range(R("1/255"), 8));
    json j = majority_json();
    j["output"]["bias"] = "1/256";
    CHECK(load_error_path(j).find("/output/bias") != std::string::npos);
  }

  TEST_CASE("position embeddings") {
    PositionRule scaled{PositionKind::scaled_index, 1, {}};
    CHECK(position_embedding(scaled, 3, 2, 4) == Vec{R("0"), R("1/2"), R("0")});
    PositionRule inverse{PositionKind::inverse_index, 0, {}};
    CHECK(position_embedding(inverse, 2, 3, 7) == Vec{R("1/3"), R("0")});
    PositionRule none{PositionKind::none, 0, {}};
    CHECK(position_embedding(none, 2, 5, 9) == Vec{R("0"), R("0")});
    PositionRule table{PositionKind::table, 0, {{R("1"), R("2")}, {R("3"), R("4")}}};
    CHECK(position_embedding(table, 2, 2, 2) == Vec{R("3"), R("4")});
    CHECK_THROWS_AS(position_embedding(table, 2, 1, 3), DomainError);
    CHECK_THROWS_AS(position_embedding(scaled, 3, 5, 4), DomainError);
  }

  TEST_CASE("input embedding") {
    const Model m = build_majority_model();
    const auto xs = embed_input(m, "10");
    REQUIRE(xs.size() == 2);
    CHECK(xs[0] == Vec{R("1"), R("0"), R("1")});
    CHECK(xs[1] == Vec{R("0"), R("0"), R("1")});
    CHECK_THROWS_AS(embed_input(m, ""), DomainError);
    CHECK_THROWS_AS(embed_input(m, "12"), DomainError);
  }

  TEST_CASE("matrix-vector product") {
    const Mat w{{R("1"), R("2")}, {R("-1/2"), R("0")}};
    CHECK(mat_vec(w, Vec{R("3"), R("1/4")}) == Vec{R("7/2"), R("-3/2")});
  }
}
