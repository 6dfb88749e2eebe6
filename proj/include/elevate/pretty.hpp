#pragma once

#include <string>

#include "elevate/syntax.hpp"

namespace elevate {

struct PrettyOptions {
  // Print explicit "r: ~{A,B}" kinds on row tails instead of a bare name.
  bool inline_tail_kinds = false;
  // Sort row label-type pairs into canonical label order (types only; term
  // records keep source order, which is also evaluation order).
  bool canonical_rows = true;
};

std::string pretty(const TermPtr& t);
std::string pretty(const PatternPtr& p);
std::string pretty(const TypeExprPtr& t, const PrettyOptions& opts = {});
std::string pretty(const Program& p);

}  // namespace elevate
