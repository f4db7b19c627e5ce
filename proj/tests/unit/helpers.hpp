#pragma once

#include <string>

#include "exf/errors.hpp"
#include "exf/pfloat.hpp"
#include "exf/rational.hpp"

namespace exf::test {

inline Rat R(const std::string& s) { return Rat::parse(s); }
// a / b, reduced
inline Rat Q(const std::string& a, const std::string& b) { return Rat(BigInt::parse(a), BigInt::parse(b)); }
inline PFloat F(long m, long e, int p) { return PFloat::make(BigInt(m), BigInt(e), p); }

// f() or "overflow", for comparing two computations that may both overflow
template <class Fn>
std::string outcome(Fn&& f) {
  try {
    return f().str();
  } catch (const OverflowError&) {
    return "overflow";
  }
}

}  // namespace exf::test
