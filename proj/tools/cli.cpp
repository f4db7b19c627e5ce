#include "cli.hpp"

#include <CLI11.hpp>
#include <gmpxx.h>

#include <chrono>
#include <cstdlib>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "exf/errors.hpp"
#include "exf/evaluator.hpp"
#include "exf/model_io.hpp"
#include "exf/verify.hpp"

namespace exf::cli {

using json = nlohmann::ordered_json;

namespace {

BigInt parse_power_or_int(std::string_view t) {
  if (t.rfind("2^", 0) == 0) {
    const std::string k(t.substr(2));
    if (k.empty() || k.find_first_not_of("0123456789") != std::string::npos || k.size() > 7) {
      throw DomainError("bad power of two '" + std::string(t) + "'");
    }
    return BigInt::pow2(std::stoul(k));
  }
  return BigInt::parse(t);
}

}  // namespace

Rat parse_rat_arg(std::string_view text) {
  if (text.rfind("2^-", 0) == 0) {
    const std::string k(text.substr(3));
    if (k.empty() || k.find_first_not_of("0123456789") != std::string::npos || k.size() > 7) {
      throw DomainError("bad rational '" + std::string(text) + "'");
    }
    return Rat(BigInt(1), BigInt::pow2(std::stoul(k)));
  }
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return Rat(parse_power_or_int(text));
  BigInt den = parse_power_or_int(text.substr(slash + 1));
  if (den.sign() <= 0) throw DomainError("denominator must be positive in '" + std::string(text) + "'");
  return Rat(parse_power_or_int(text.substr(0, slash)), std::move(den));
}

std::vector<std::size_t> parse_lengths(std::string_view text) {
  auto num = [&](std::string_view s) -> std::size_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string_view::npos || s.size() > 9) {
      throw DomainError("bad length '" + std::string(s) + "'");
    }
    const auto v = std::stoul(std::string(s));
    if (v == 0) throw DomainError("lengths must be positive");
    return v;
  };
  std::vector<std::size_t> out;
  if (const auto dots = text.find(".."); dots != std::string_view::npos) {
    const std::size_t a = num(text.substr(0, dots)), b = num(text.substr(dots + 2));
    for (std::size_t n = a; n <= b; n *= 2) out.push_back(n);
    if (out.empty()) throw DomainError("empty length range");
    return out;
  }
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(num(text.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string decimal_approx(const Rat& x) {
  if (x.is_zero()) return "0";
  mpf_class q(0, 128), n(0, 128), d(0, 128);
  n = mpf_class(x.num().mpz(), 128);
  d = mpf_class(x.den().mpz(), 128);
  q = n / d;
  mp_exp_t e = 0;
  std::string digits = q.get_str(e, 10, 20);
  std::string sign;
  if (digits[0] == '-') {
    sign = "-";
    digits.erase(0, 1);
  }
  // small magnitudes read better positionally
  if (e >= -4 && e <= 20) {
    std::string s;
    if (e <= 0) {
      s = "0." + std::string(static_cast<std::size_t>(-e), '0') + digits;
    } else if (static_cast<std::size_t>(e) >= digits.size()) {
      s = digits + std::string(static_cast<std::size_t>(e) - digits.size(), '0');
    } else {
      s = digits.substr(0, static_cast<std::size_t>(e)) + "." + digits.substr(static_cast<std::size_t>(e));
    }
    return sign + s;
  }
  std::string s = digits.substr(0, 1);
  if (digits.size() > 1) s += "." + digits.substr(1);
  return sign + s + "e" + std::to_string(static_cast<long>(e) - 1);
}

namespace {

struct Reporter {
  std::ostream& out;
  std::ostream& err;
  bool as_json = false;
  json doc = json::object();

  void line(const std::string& text) {
    if (!as_json) out << text << "\n";
  }
  int finish(int code, double ms) {
    if (as_json) {
      doc["exit_code"] = code;
      doc["timing_ms"] = ms;
      out << doc.dump(2) << "\n";
    } else {
      out << "time_ms " << static_cast<long>(ms) << "\n";
    }
    return code;
  }
  int error(int code, const std::string& kind, const std::string& message) {
    err << "error: " << message << "\n";
    if (as_json) {
      doc["error"] = {{"kind", kind}, {"message", message}};
      doc["exit_code"] = code;
      out << doc.dump(2) << "\n";
    }
    return code;
  }
};

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

json float_json(const PFloat& x) {
  return {{"m", x.m().str()}, {"e", x.e().str()}, {"p", x.p()}};
}

struct EvalArgs {
  std::string model;
  std::string input;
  std::string mode;
  std::optional<int> precision;
  std::optional<std::string> epsilon;
  bool trace = false;
};

int cmd_eval(const EvalArgs& a, Reporter& rep) {
  const auto t0 = std::chrono::steady_clock::now();
  rep.doc["command"] = "eval";
  rep.doc["mode"] = a.mode;
  rep.doc["model"] = a.model;
  rep.doc["input"] = a.input;
  rep.line("command eval");
  rep.line("mode " + a.mode);
  rep.line("model " + a.model);
  rep.line("input " + a.input);

  if (a.mode == "smat" && !a.precision) return rep.error(usage_error, "usage", "--precision is required in smat mode");
  if (a.mode == "budgeted" && !a.epsilon) return rep.error(usage_error, "usage", "--epsilon is required in budgeted mode");
  if (a.mode != "smat" && a.precision) return rep.error(usage_error, "usage", "--precision only applies to smat mode");
  if (a.mode != "budgeted" && a.epsilon) return rep.error(usage_error, "usage", "--epsilon only applies to budgeted mode");

  Model m;
  std::optional<Rat> eps;
  try {
    m = load_model(a.model);
    if (a.epsilon) eps = parse_rat_arg(*a.epsilon);
    if (a.precision) check_precision(*a.precision);
  } catch (const LoadError& e) {
    return rep.error(usage_error, "load", e.what());
  } catch (const DomainError& e) {
    return rep.error(usage_error, "usage", e.what());
  }

  try {
    if (a.mode == "ahat") {
      const AhatResult r = eval_ahat(m, a.input);
      rep.doc["value"] = r.value.str();
      rep.doc["decimal"] = decimal_approx(r.value);
      if (r.value.is_zero()) throw TieError("output is exactly 0; membership is undefined");
      const Decision d = r.value.sign() > 0 ? Decision::accept : Decision::reject;
      rep.doc["decision"] = std::string(to_string(d));
      rep.line("value " + r.value.str() + ", " + std::string(to_string(d)));
      rep.line("decimal " + decimal_approx(r.value));
      if (a.trace) {
        json layers = json::array();
        rep.line("trace embedding max_bits " + std::to_string(r.trace.embedding_max_bits));
        for (std::size_t l = 0; l < r.trace.layers.size(); ++l) {
          const LayerTrace& t = r.trace.layers[l];
          layers.push_back({{"layer", l}, {"max_bits", t.max_bits}, {"max_num_bits", t.max_num_bits}, {"max_den_bits", t.max_den_bits}});
          rep.line("trace layer " + std::to_string(l) + " max_bits " + std::to_string(t.max_bits) + " num_bits " +
                   std::to_string(t.max_num_bits) + " den_bits " + std::to_string(t.max_den_bits));
        }
        rep.doc["trace"] = {{"embedding_max_bits", r.trace.embedding_max_bits}, {"layers", layers}, {"max_bits", r.trace.max_bits()}};
      }
    } else if (a.mode == "smat") {
      const PFloat y = eval_smat_pbit(m, a.input, *a.precision);
      rep.doc["precision"] = *a.precision;
      rep.doc["value"] = float_json(y);
      rep.doc["decimal"] = decimal_approx(y.to_rat());
      if (y.is_zero()) throw TieError("output is exactly 0; membership is undefined");
      const Decision d = y.sign() > 0 ? Decision::accept : Decision::reject;
      rep.doc["decision"] = std::string(to_string(d));
      rep.line("value " + y.str() + ", " + std::string(to_string(d)));
      rep.line("decimal " + decimal_approx(y.to_rat()));
    } else {
      const BudgetedResult r = eval_budgeted(m, a.input, *eps);
      rep.doc["epsilon"] = eps->str();
      rep.doc["value"] = r.value.str();
      rep.doc["decimal"] = decimal_approx(r.value);
      // the sign is certified only when |value| > eps
      const MarginDecision d = r.value.sign() == 0 ? MarginDecision::below_margin
                               : (r.value.sign() > 0 ? MarginDecision::accept : MarginDecision::reject);
      rep.doc["decision"] = std::string(to_string(d));
      rep.doc["certified"] = r.value.abs() > *eps;
      rep.line("value " + r.value.str() + ", " + std::string(to_string(d)));
      rep.line("decimal " + decimal_approx(r.value));
      rep.line("epsilon " + eps->str());
      rep.line(std::string("certified ") + (r.value.abs() > *eps ? "yes" : "no"));
      if (a.trace) {
        const ErrorBudget& b = r.budget;
        json sites = json::array(), stages = json::array();
        rep.line("budget activation_bound " + b.activation_bound.str());
        for (const auto& s : b.sites) {
          sites.push_back({{"name", s.name}, {"tolerance", s.tolerance.str()}, {"delta", s.delta.str()}, {"bits", s.bits}});
          rep.line("budget site " + s.name + " tolerance " + decimal_approx(s.tolerance) + " delta " +
                   decimal_approx(s.delta) + " bits " + std::to_string(s.bits));
        }
        for (const auto& s : b.stages) {
          stages.push_back({{"stage", s.stage}, {"input_tolerance", s.input_tolerance.str()},
                            {"output_tolerance", s.output_tolerance.str()}, {"rho", s.rho.str()}});
          rep.line("budget stage " + s.stage + " out " + decimal_approx(s.output_tolerance) + " in " +
                   decimal_approx(s.input_tolerance));
        }
        rep.doc["trace"] = {{"activation_bound", b.activation_bound.str()},
                            {"output_tolerance", b.output_tolerance.str()},
                            {"sites", sites},
                            {"stages", stages}};
      }
    }
  } catch (const TieError& e) {
    return rep.error(arithmetic_error, "tie", e.what());
  } catch (const OverflowError& e) {
    return rep.error(arithmetic_error, "overflow", e.what());
  } catch (const ModeError& e) {
    return rep.error(usage_error, "mode", e.what());
  } catch (const DomainError& e) {
    return rep.error(usage_error, "input", e.what());
  }
  return rep.finish(ok, elapsed_ms(t0));
}

struct VerifyArgs {
  std::string suite = "all";
  std::optional<int> p;
  std::size_t cases = 1000;
  std::optional<std::uint64_t> seed;
  bool no_exhaustive = false;
};

int cmd_verify(const VerifyArgs& a, Reporter& rep) {
  const auto t0 = std::chrono::steady_clock::now();
  verify::Options opt;
  opt.p = a.p;
  opt.cases = a.cases;
  opt.exhaustive = !a.no_exhaustive;
  if (a.seed) {
    opt.seed = *a.seed;
  } else if (const char* env = std::getenv("EXACT_XFORMER_SEED")) {
    try {
      opt.seed = std::stoull(env);
    } catch (const std::exception&) {
      return rep.error(usage_error, "usage", "EXACT_XFORMER_SEED must be an unsigned integer");
    }
  }
  rep.doc["command"] = "verify";
  rep.doc["suite"] = a.suite;
  rep.doc["seed"] = opt.seed;
  if (a.p) rep.doc["p"] = *a.p;
  rep.line("command verify");
  rep.line("suite " + a.suite);
  rep.line("seed " + std::to_string(opt.seed));
  if (a.p) {
    try {
      check_precision(*a.p);
    } catch (const DomainError& e) {
      return rep.error(usage_error, "usage", e.what());
    }
  }
  verify::Report r;
  try {
    r = verify::run_suite(a.suite, opt);
  } catch (const DomainError& e) {
    return rep.error(usage_error, "usage", e.what());
  }
  std::string rerun = "exf verify --suite " + a.suite + " --seed " + std::to_string(opt.seed) +
                      " --cases " + std::to_string(opt.cases);
  if (a.p) rerun += " --p " + std::to_string(*a.p);
  json failures = json::array();
  for (const auto& f : r.failures) {
    if (failures.size() < 100) {
      failures.push_back({{"suite", f.suite}, {"index", f.index}, {"case_seed", f.seed}, {"detail", f.detail}});
    }
  }
  rep.doc["cases"] = r.cases;
  rep.doc["failure_count"] = r.failures.size();
  rep.doc["failures"] = failures;
  rep.doc["counters"] = r.counters;
  rep.doc["result"] = r.ok() ? "pass" : "fail";
  rep.line("cases " + std::to_string(r.cases));
  rep.line("failures " + std::to_string(r.failures.size()));
  for (const auto& [k, v] : r.counters) rep.line("counter " + k + " " + std::to_string(v));
  for (std::size_t i = 0; i < r.failures.size() && i < 10; ++i) {
    const auto& f = r.failures[i];
    rep.line("failure " + f.suite + " case " + std::to_string(f.index) + " case_seed " + std::to_string(f.seed) + ": " + f.detail);
  }
  if (!r.ok()) {
    rep.doc["reproduce"] = rerun;
    rep.line("reproduce " + rerun);
  }
  rep.line(std::string("result ") + (r.ok() ? "pass" : "fail"));
  return rep.finish(r.ok() ? ok : verification_failure, elapsed_ms(t0));
}

int cmd_bitgrowth(const std::string& model, const std::string& lengths_text, Reporter& rep) {
  const auto t0 = std::chrono::steady_clock::now();
  rep.doc["command"] = "bitgrowth";
  rep.doc["model"] = model;
  rep.line("command bitgrowth");
  rep.line("model " + model);
  Model m;
  std::vector<std::size_t> lengths;
  try {
    m = load_model(model);
    lengths = parse_lengths(lengths_text);
  } catch (const LoadError& e) {
    return rep.error(usage_error, "load", e.what());
  } catch (const DomainError& e) {
    return rep.error(usage_error, "usage", e.what());
  }
  BitGrowthReport r;
  try {
    r = bit_growth_trace(m, lengths);
  } catch (const ModeError& e) {
    return rep.error(usage_error, "mode", e.what());
  } catch (const OverflowError& e) {
    return rep.error(arithmetic_error, "overflow", e.what());
  }
  json rows = json::array();
  std::string header = "n";
  for (std::size_t l = 0; l < m.layers.size(); ++l) header += " layer" + std::to_string(l);
  rep.line(header + " max_bits");
  for (const auto& row : r.rows) {
    rows.push_back({{"n", row.n}, {"layer_max_bits", row.layer_max_bits}, {"max_bits", row.max_bits}});
    std::string s = std::to_string(row.n);
    for (std::size_t b : row.layer_max_bits) s += " " + std::to_string(b);
    rep.line(s + " " + std::to_string(row.max_bits));
  }
  std::ostringstream slope;
  slope.precision(4);
  slope << std::fixed << r.slope;
  rep.doc["families"] = r.families;
  rep.doc["rows"] = rows;
  rep.doc["slope"] = r.slope;
  rep.line("slope " + slope.str());
  return rep.finish(ok, elapsed_ms(t0));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact transformer evaluation and arithmetic verification"};
  app.require_subcommand(1);
  bool as_json = false;
  app.add_flag("--json", as_json, "Structured JSON report");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Evaluate a model on one input");
  eval->add_option("model,--model", ea.model, "Model JSON file or builtin:NAME")->required();
  eval->add_option("input,--input", ea.input, "Input string")->required();
  eval->add_option("--mode", ea.mode, "ahat | smat | budgeted")->required()->check(CLI::IsMember({"ahat", "smat", "budgeted"}));
  eval->add_option("--precision", ea.precision, "Float precision p (smat)");
  eval->add_option("--epsilon", ea.epsilon, "Output error bound, e.g. 1/2^64 (budgeted)");
  eval->add_flag("--trace", ea.trace, "Per-layer bit widths or the budget table");
  eval->add_flag("--json", as_json, "Structured JSON report");

  VerifyArgs va;
  auto* ver = app.add_subcommand("verify", "Run an oracle property suite");
  std::vector<std::string> suites = verify::suite_names();
  ver->add_option("--suite", va.suite, "Suite name")->check(CLI::IsMember(suites));
  ver->add_option("--p", va.p, "Restrict to one precision");
  ver->add_option("--cases", va.cases, "Random cases per precision")->check(CLI::NonNegativeNumber);
  ver->add_option("--seed", va.seed, "Seed (default $EXACT_XFORMER_SEED or 1)");
  ver->add_flag("--no-exhaustive", va.no_exhaustive, "Skip exhaustive sweeps");
  ver->add_flag("--json", as_json, "Structured JSON report");

  std::string bg_model, bg_lengths = "4..256";
  auto* bg = app.add_subcommand("bitgrowth", "Measure exact bit growth in ahat mode");
  bg->add_option("model,--model", bg_model, "Model JSON file or builtin:NAME")->required();
  bg->add_option("--lengths", bg_lengths, "Comma list, or a..b doubling");
  bg->add_flag("--json", as_json, "Structured JSON report");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return usage_error;
  }

  Reporter rep{out, err, as_json};
  if (*eval) return cmd_eval(ea, rep);
  if (*ver) return cmd_verify(va, rep);
  return cmd_bitgrowth(bg_model, bg_lengths, rep);
}

}  // namespace exf::cli
