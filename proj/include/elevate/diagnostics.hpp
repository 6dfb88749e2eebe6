#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "elevate/syntax.hpp"

namespace elevate {

// Stable diagnostic codes; these are part of the CLI contract.
namespace codes {
inline constexpr const char* parse = "E-PARSE";
inline constexpr const char* kind = "E-KIND";
inline constexpr const char* unify = "E-UNIFY";
inline constexpr const char* nonlinear = "E-NONLINEAR";
inline constexpr const char* redundant = "E-REDUNDANT";
inline constexpr const char* dead_branch = "E-DEAD-BRANCH";
inline constexpr const char* unbound = "E-UNBOUND";
}  // namespace codes

enum class Severity { Error, Warning };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string code;
  std::string message;
  std::string file;
  Span span;
  std::vector<std::string> notes;

  // "CODE file:line:col-line:col message"
  std::string render(bool color = false) const;
};

// Thrown by the front-end phases; the driver turns it into a Diagnostic.
struct CompileError : std::runtime_error {
  std::string code;
  Span span;
  std::vector<std::string> notes;

  CompileError(std::string code_, const std::string& message, Span sp = {},
               std::vector<std::string> notes_ = {})
      : std::runtime_error(message), code(std::move(code_)), span(sp), notes(std::move(notes_)) {}
};

}  // namespace elevate
