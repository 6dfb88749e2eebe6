#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "elevate/diagnostics.hpp"
#include "elevate/elaborate.hpp"
#include "elevate/eval.hpp"
#include "elevate/infer.hpp"
#include "elevate/syntax.hpp"

namespace elevate {

struct CheckedLet {
  std::string name;
  Scheme scheme;
  PrintedScheme printed;
  TermPtr term;  // elaborated, dead branches pruned
  Span span;
  bool ok = true;
};

struct CheckedProgram {
  std::shared_ptr<TypeStore> store;
  std::vector<CheckedLet> lets;
  TermPtr final_expr;  // checked form; null when absent or failed
  std::optional<NodeId> final_type;
  std::vector<Diagnostic> diagnostics;
  Program surface;
  Program elaborated;
  std::shared_ptr<RhsLedger> ledger;

  bool ok() const;
  // Nested lets of every checked binding around the trailing expression.
  TermPtr runnable() const;
  const CheckedLet* find(const std::string& name) const;
};

// parse + alias resolution + elaboration + inference. Parse errors throw
// CompileError; later phases record diagnostics per declaration and continue.
CheckedProgram check_source(const std::string& source, const std::string& filename = "<input>");

// parse + alias resolution + elaboration only (cmd_elaborate).
Program elaborate_source(const std::string& source);

std::string render_diagnostics(const std::vector<Diagnostic>& ds, bool color = false);

}  // namespace elevate
