#pragma once

#include <map>
#include <string>

#include "elevate/syntax.hpp"

namespace elevate {

// Values: label applications of values, records of values, lambdas, fix.
bool is_value(const TermPtr& t);

struct StepOutcome {
  enum class Kind { Stepped, AlreadyValue, Stuck };
  Kind kind = Kind::AlreadyValue;
  TermPtr term;        // Stepped: the reduct
  std::string rule;    // Stepped: the ST-rule that fired
  std::string reason;  // Stuck
  Span span;
};

// Applies exactly one reduction at the redex selected by the evaluation
// contexts (function before argument, record fields left to right). Stuck is
// unreachable from well-typed closed terms.
StepOutcome step(const TermPtr& t);

struct EvalResult {
  enum class Kind { Value, FuelExhausted, Stuck };
  Kind kind = Kind::Value;
  TermPtr term;        // the value, or the last term at fuel exhaustion
  std::string reason;  // Stuck
  long steps = 0;
  std::map<std::string, long> rule_counts;
};

EvalResult eval(TermPtr t, long fuel = 100000);

}  // namespace elevate
