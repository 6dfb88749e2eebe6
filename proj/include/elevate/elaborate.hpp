#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "elevate/diagnostics.hpp"
#include "elevate/syntax.hpp"

namespace elevate {

// Pattern elaboration compiles complex patterns into cascades of core matches
// (simple patterns only). Every RHS expression is tagged with a ledger id and
// all duplications/removals are traced; a branch whose RHS count reaches zero
// is a redundant-patterns error.

using MatchId = std::vector<int>;

// The restricted subject shapes x, x.l, x.{}, x.l.{}.
struct FieldAccessForm {
  std::string root;
  std::optional<Label> sel;
  bool unit_mod = false;

  bool operator==(const FieldAccessForm& o) const = default;
};

TermPtr access_term(const FieldAccessForm& d);

struct SimplePattern {
  enum class Kind { Var, BareLabel, LabelVar };
  Kind kind = Kind::Var;
  std::string var;
  Label label;

  static SimplePattern mk_var(std::string v) { return {Kind::Var, std::move(v), {}}; }
  static SimplePattern bare(Label l) { return {Kind::BareLabel, {}, std::move(l)}; }
  static SimplePattern label_var(Label l, std::string v) {
    return {Kind::LabelVar, std::move(v), std::move(l)};
  }
};

// The expression counterpart of a simple pattern (bare labels carry a unit
// payload).
TermPtr pattern_as_term(const SimplePattern& p);

struct MatchChain;
using ChainPtr = std::shared_ptr<const MatchChain>;

struct MatchChain {
  bool leaf = false;
  TermPtr rhs;  // leaf only; root carries its rhs_id tag
  MatchId id;
  FieldAccessForm subject;
  std::vector<std::pair<SimplePattern, ChainPtr>> branches;
};

ChainPtr chain_leaf(TermPtr rhs);
ChainPtr chain_node(MatchId id, FieldAccessForm subject,
                    std::vector<std::pair<SimplePattern, ChainPtr>> branches);

struct RhsLedger {
  std::map<int, long> counts;
  std::map<int, Span> spans;
  std::map<int, int> branch_index;  // 1-based position within its match
  int next_id = 0;

  int fresh(Span sp, int branch);
  void add(int id, long delta);
  bool tracked(int id) const { return counts.count(id) > 0; }
};

// Occurrence counts of every tracked rhs id in a term / chain.
std::map<int, long> count_rhs_tags(const TermPtr& t);
std::map<int, long> count_rhs_tags(const ChainPtr& c);

class Elaborator {
 public:
  explicit Elaborator(RhsLedger& ledger) : ledger_(ledger) {}

  // Whole-term elaboration, innermost matches first.
  TermPtr elaborate_term(const TermPtr& t);

  // The pipeline stages, exposed individually.
  static void linearity_check(const PatternPtr& p);
  ChainPtr pat_expn(int rhs_id, MatchId id, const std::string& root,
                    FieldAccessForm subject, const PatternPtr& pat, TermPtr rhs);
  static ChainPtr sort_chain(const ChainPtr& c);
  ChainPtr merge(const ChainPtr& a, const ChainPtr& b);
  ChainPtr refine(std::vector<std::pair<std::string, TermPtr>> subst, const ChainPtr& c);
  TermPtr desugar(const ChainPtr& c);

  // Full elaboration of one match expression (subject must be a variable;
  // elaborate_term introduces the binding let for other subjects).
  TermPtr pat_elab(const TermPtr& match_term);

  std::string fresh_payload_var() { return "#x" + std::to_string(++payload_counter_); }
  std::string fresh_rest_var() { return "#r" + std::to_string(++rest_counter_); }
  std::string fresh_unit_var() { return "#u" + std::to_string(++unit_counter_); }
  std::string fresh_subject_var() { return "#m" + std::to_string(++subject_counter_); }

 private:
  RhsLedger& ledger_;
  int payload_counter_ = 0;
  int rest_counter_ = 0;
  int unit_counter_ = 0;
  int subject_counter_ = 0;

  ChainPtr subst_chain(const ChainPtr& c, const std::string& var, const SimplePattern& p);
};

// Elaborate every declaration value and the trailing expression.
Program elaborate_program(const Program& p, RhsLedger& ledger);

}  // namespace elevate
