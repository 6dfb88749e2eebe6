#pragma once

#include <string>

#include "elevate/diagnostics.hpp"
#include "elevate/syntax.hpp"

namespace elevate {

struct ParseOptions {
  // '#'-prefixed identifiers belong to pattern elaboration; user source may
  // not use them. Tests re-parsing elaborated output switch this on.
  bool allow_internal_names = false;
};

// Parse a whole source file: declarations plus an optional trailing expression.
// Throws CompileError (code E-PARSE) on failure.
Program parse_program(const std::string& source, const ParseOptions& opts = {});

// Parse a single expression.
TermPtr parse_term(const std::string& source, const ParseOptions& opts = {});

// Parse a type expression, e.g. an annotation like "p -> <Success: p | >".
TypeExprPtr parse_type(const std::string& source);

}  // namespace elevate
