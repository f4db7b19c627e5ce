#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "exf/rational.hpp"

namespace exf::cli {

enum ExitCode { ok = 0, verification_failure = 1, usage_error = 2, arithmetic_error = 3 };

// "a/b", "a", "a/2^k", "2^-k"; throws DomainError
Rat parse_rat_arg(std::string_view text);
// "4,8,16" or "4..256" (doubling from the first bound)
std::vector<std::size_t> parse_lengths(std::string_view text);
// ~20 significant digits, scientific notation
std::string decimal_approx(const Rat& x);

// args excludes the program name
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace exf::cli
