#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace exf::verify {

struct Failure {
  std::string suite;
  std::uint64_t seed = 0;   // case seed: rerun with --seed and the case index
  std::size_t index = 0;
  std::string detail;
  friend bool operator<(const Failure& a, const Failure& b) {
    return std::tie(a.suite, a.index, a.detail) < std::tie(b.suite, b.index, b.detail);
  }
};

struct Report {
  std::string suite;
  std::size_t cases = 0;
  std::vector<Failure> failures;          // sorted
  std::map<std::string, std::size_t> counters;  // e.g. which block-sum case was hit
  bool ok() const { return failures.empty(); }
  void merge(const Report& other);
};

struct Options {
  std::optional<int> p;    // restrict to one precision
  std::size_t cases = 1000;
  std::uint64_t seed = 1;
  // Exhaustive sweeps (rounding grid, p = 3 arithmetic, p = 4 sqrt) run
  // whenever their precision is selected; this disables them.
  bool exhaustive = true;
};

// sum, round, arith, exp, sqrt, softmax-delta, invsqrt-delta, all
std::vector<std::string> suite_names();
// DomainError for an unknown suite name.
Report run_suite(std::string_view name, const Options& opt);

// Individual suites, for the acceptance runner.
Report suite_sum(const Options& opt, std::size_t adversarial_cases);
Report suite_round(const Options& opt);
Report suite_arith(const Options& opt);
Report suite_exp(const Options& opt);
Report suite_sqrt(const Options& opt);
Report suite_softmax_delta(const Options& opt);
Report suite_invsqrt_delta(const Options& opt);

// Per-case generator seed; independent of execution order.
std::uint64_t case_seed(std::uint64_t seed, std::string_view suite, std::size_t index);

}  // namespace exf::verify
