#pragma once

#include <string>
#include <string_view>

#include "exf/model.hpp"

namespace exf {

// JSON model documents, "format_version": 1. Strict: unknown fields,
// non-canonical rationals ("2/4", "+1", "1/0"), shape mismatches, c <= 0 and
// out-of-range parameters are LoadErrors naming the field path.
Model parse_model(std::string_view text);
std::string serialize_model(const Model& m);

// Reads a file, or a built-in fixture when `path` is "builtin:NAME".
Model load_model(const std::string& path);

}  // namespace exf
