#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "exf/errors.hpp"
#include "helpers.hpp"

using namespace exf;
using exf::test::R;
using json = nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

json run_json(std::vector<std::string> args) {
  args.push_back("--json");
  const Run r = run(args);
  json j = json::parse(r.out);
  CHECK(j["exit_code"] == r.code);
  return j;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("rational arguments") {
    CHECK(cli::parse_rat_arg("1/2^64") == pow2_rat(-64));
    CHECK(cli::parse_rat_arg("2^-10") == pow2_rat(-10));
    CHECK(cli::parse_rat_arg("3/4") == R("3/4"));
    CHECK(cli::parse_rat_arg("6/8") == R("3/4"));
    CHECK(cli::parse_rat_arg("5") == R("5"));
    for (const char* bad : {"", "1/0", "x", "1/2^", "2^-", "1/-3"}) CHECK_THROWS_AS(cli::parse_rat_arg(bad), DomainError);
  }

  TEST_CASE("length lists") {
    CHECK(cli::parse_lengths("4..32") == std::vector<std::size_t>{4, 8, 16, 32});
    CHECK(cli::parse_lengths("3,5,9") == std::vector<std::size_t>{3, 5, 9});
    CHECK_THROWS_AS(cli::parse_lengths("0,3"), DomainError);
    CHECK_THROWS_AS(cli::parse_lengths("4,,5"), DomainError);
  }

  TEST_CASE("decimal approximation") {
    CHECK(cli::decimal_approx(R("1/4")) == "0.25");
    CHECK(cli::decimal_approx(R("-3")) == "-3");
    CHECK(cli::decimal_approx(R("0")) == "0");
    CHECK(cli::decimal_approx(pow2_rat(-64)) == "5.42101086242752217e-20");
    CHECK(cli::decimal_approx(R("1/3")) == "0.33333333333333333333");
  }

  TEST_CASE("eval in exact mode") {
    const Run r = run({"eval", "--mode", "ahat", "builtin:majority", "1101"});
    CHECK(r.code == 0);
    CHECK(r.out.find("value 1/4, accept\n") != std::string::npos);
    const json j = run_json({"eval", "--mode", "ahat", "--model", "builtin:majority", "--input", "100", "--trace"});
    CHECK(j["value"] == "-1/6");
    CHECK(j["decision"] == "reject");
    CHECK(j["trace"]["layers"].size() == 1);
    const std::string file = std::string(EXF_SOURCE_DIR) + "/models/majority.json";
    CHECK(run_json({"eval", "--mode", "ahat", file, "1"})["value"] == "1/2");
  }

  TEST_CASE("eval in budgeted and p-bit modes") {
    const json b = run_json({"eval", "--mode", "budgeted", "--epsilon", "1/2^64", "builtin:softmax_uniform", "1101", "--trace"});
    CHECK(b["exit_code"] == 0);
    CHECK((Rat::parse(b["value"].get<std::string>()) - R("1/4")).abs() <= pow2_rat(-64));
    CHECK(b["trace"]["sites"].size() == 1);
    const json s = run_json({"eval", "--mode", "smat", "--precision", "24", "builtin:softmax_layernorm", "abba"});
    CHECK(s["value"]["p"] == 24);
    CHECK(s["decision"] == "accept");
  }

  TEST_CASE("eval errors and exit codes") {
    CHECK(run({"eval", "--mode", "budgeted", "builtin:softmax_uniform", "1101"}).code == cli::usage_error);
    CHECK(run({"eval", "--mode", "smat", "builtin:softmax_uniform", "1101"}).code == cli::usage_error);
    CHECK(run({"eval", "--mode", "ahat", "--precision", "8", "builtin:majority", "1"}).code == cli::usage_error);
    CHECK(run({"eval", "--mode", "fast", "builtin:majority", "1"}).code == cli::usage_error);
    CHECK(run({"eval", "--mode", "ahat", "/no/such/file.json", "1"}).code == cli::usage_error);
    CHECK(run({"eval", "--mode", "ahat", "builtin:softmax_uniform", "1"}).code == cli::usage_error);
    CHECK(run({"eval", "--mode", "ahat", "builtin:majority", "1x"}).code == cli::usage_error);
    const json tie = run_json({"eval", "--mode", "ahat", "builtin:majority", "10"});
    CHECK(tie["exit_code"] == cli::arithmetic_error);
    CHECK(tie["error"]["kind"] == "tie");
    CHECK(run({}).code == cli::usage_error);
    CHECK(run({"--help"}).code == 0);
  }

  TEST_CASE("verify reports are deterministic") {
    const std::vector<std::string> args{"verify", "--suite", "sum", "--p", "8", "--cases", "200", "--seed", "5"};
    json a = run_json(args), b = run_json(args);
    CHECK(a["result"] == "pass");
    CHECK(a["failure_count"] == 0);
    CHECK(a["cases"].get<int>() >= 200);
    a.erase("timing_ms");
    b.erase("timing_ms");
    CHECK(a == b);
    CHECK(run({"verify", "--suite", "nope"}).code == cli::usage_error);
    CHECK(run({"verify", "--suite", "round", "--p", "1"}).code == cli::usage_error);
  }

  TEST_CASE("verify takes its default seed from the environment") {
    setenv("EXACT_XFORMER_SEED", "77", 1);
    const json j = run_json({"verify", "--suite", "softmax-delta", "--cases", "20"});
    unsetenv("EXACT_XFORMER_SEED");
    CHECK(j["seed"] == 77);
    CHECK(j["result"] == "pass");
  }

  TEST_CASE("bitgrowth") {
    const json j = run_json({"bitgrowth", "builtin:majority", "--lengths", "4..64"});
    CHECK(j["rows"].size() == 5);
    CHECK(j["slope"].get<double>() <= 1.2);
    const json d = run_json({"bitgrowth", "builtin:depth0", "--lengths", "4,8,16"});
    CHECK(std::abs(d["slope"].get<double>()) < 1e-9);
    CHECK(run({"bitgrowth", "builtin:softmax_uniform"}).code == cli::usage_error);
  }
}
