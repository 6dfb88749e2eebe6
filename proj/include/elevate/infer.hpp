#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "elevate/diagnostics.hpp"
#include "elevate/elaborate.hpp"
#include "elevate/kinds.hpp"
#include "elevate/syntax.hpp"

namespace elevate {

using NodeId = int;

// ---------------------------------------------------------------------------
// Union-find store over type graph nodes. Cycles are legal in the type graph
// (equi-recursive types); the union-find parent chains stay acyclic.

struct TypeNode {
  enum class Tag { Var, Arrow, Record, Variant, RowEmpty, RowCons };
  Tag tag = Tag::Var;
  // Var
  Kind kind = Kind::type();
  bool generic = false;     // quantified in a scheme; never unified directly
  std::string name_hint;
  // Arrow: a -> b | Record/Variant: row = a | RowCons: payload = a, rest = b
  NodeId a = -1, b = -1;
  Label label;
  // union-find
  NodeId parent = -1;
  int rank = 0;
};

struct RowView {
  std::vector<std::pair<Label, NodeId>> items;
  NodeId tail = -1;  // -1: closed by the empty row; otherwise an unsolved row var
};

struct UnifyError {
  enum class Kind { ConstructorMismatch, MissingLabel, KindViolation, OccursFreeViolation };
};

class TypeStore {
 public:
  NodeId fresh_var(Kind k, std::string hint = "");
  NodeId arrow(NodeId a, NodeId b);
  NodeId record(NodeId row);
  NodeId variant(NodeId row);
  NodeId row_empty();
  NodeId row_cons(Label l, NodeId payload, NodeId rest);
  // convenience: builds the cons spine over the given tail (-1 for empty)
  NodeId row_of(const std::vector<std::pair<Label, NodeId>>& items, NodeId tail = -1);

  NodeId find(NodeId n);
  TypeNode& node(NodeId n) { return nodes_[n]; }
  const TypeNode& cnode(NodeId n) const { return nodes_[n]; }
  size_t size() const { return nodes_.size(); }

  // Equates the two types; graph-coinductive on cycles, row-rewriting with
  // kind checks on rows. Throws CompileError (E-UNIFY / E-KIND).
  void unify(NodeId x, NodeId y, Span sp);

  RowView row_view(NodeId row, Span sp);

  // Kind of a row spine, following declared kinds at variable tails.
  RowKind spine_kind(NodeId row, Span sp);

  // Every row variable ever created, with its kind at creation; the audit
  // checks solved rows still satisfy them.
  const std::vector<std::pair<NodeId, RowKind>>& row_vars() const { return row_vars_; }
  void audit_row_kinds();

 private:
  std::vector<TypeNode> nodes_;
  std::vector<std::pair<NodeId, RowKind>> row_vars_;

  NodeId alloc(TypeNode n);
  void point_at(NodeId var, NodeId target);
  void union_vars(NodeId a, NodeId b);
  void unify_inner(NodeId x, NodeId y, Span sp, std::set<std::pair<NodeId, NodeId>>& seen);
  void unify_rows(NodeId x, NodeId y, Span sp, std::set<std::pair<NodeId, NodeId>>& seen);
};

// ---------------------------------------------------------------------------
// Schemes

struct Scheme {
  std::vector<NodeId> quantified;  // generic Var nodes
  NodeId body = -1;
};

Scheme mono_scheme(NodeId body);

class TypeEnv {
 public:
  void push(const std::string& name, Scheme s) { entries_.emplace_back(name, std::move(s)); }
  void pop() { entries_.pop_back(); }
  const Scheme* lookup(const std::string& name) const;
  const std::vector<std::pair<std::string, Scheme>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, Scheme>> entries_;
};

// Unsolved, non-generic variables reachable from a type / the environment.
std::set<NodeId> free_type_vars(TypeStore& store, NodeId t);
std::set<NodeId> free_type_vars(TypeStore& store, const TypeEnv& env);

// Vars of t (in first-visit order) not free in env_ftv; does not mark them.
std::vector<NodeId> generalizable_vars(TypeStore& store, NodeId t, const std::set<NodeId>& env_ftv);

// Marks the given vars generic and forms the scheme.
Scheme make_scheme(TypeStore& store, std::vector<NodeId> vars, NodeId body);

Scheme generalize(TypeStore& store, const TypeEnv& env, NodeId t);

// Fresh copy of the scheme body; quantified variables become fresh unification
// variables of the same kind, everything else is shared.
NodeId instantiate(TypeStore& store, const Scheme& s);

// ---------------------------------------------------------------------------
// Readback, printing, comparison

struct ReadbackResult {
  TypeExprPtr type;
  // kinds of the row variables appearing as named tails (by printed name)
  std::map<std::string, RowKind> row_kinds;
  std::map<std::string, NodeId> var_nodes;
};

ReadbackResult readback(TypeStore& store, NodeId t);

struct PrintedScheme {
  std::string body;                         // "p -> <Success: p | >"
  std::map<std::string, std::string> kinds; // quantified vars, printed kinds
  std::string rendered;                     // body plus a kind legend when needed
};

PrintedScheme print_scheme(TypeStore& store, const Scheme& s);

// Alpha-equality of schemes (possibly across stores): quantified variables
// correspond bijectively with equal kinds, rows compare order-insensitively,
// recursive types compare by graph bisimulation.
bool scheme_equal_alpha(TypeStore& sa, const Scheme& a, TypeStore& sb, const Scheme& b);

// Is `specific` an instance of `general` (same store)? Quantified variables of
// `general` may be bound; everything else must coincide.
bool instance_of(TypeStore& store, const Scheme& general, NodeId specific);

// ---------------------------------------------------------------------------
// Inference

struct InferOutcome {
  NodeId type = -1;
  TermPtr term;  // dead branches pruned
};

class Inferencer {
 public:
  Inferencer(TypeStore& store, RhsLedger* ledger = nullptr, bool declarative = false)
      : store_(store), ledger_(ledger), declarative_(declarative) {}

  InferOutcome infer(const TermPtr& e, std::optional<NodeId> expected = {});

  TypeEnv& env() { return env_; }
  std::vector<Diagnostic>& warnings() { return warnings_; }

  // Builds the store graph for a resolved annotation; named variables get the
  // kinds collected from the annotation, implicit tails fresh negative kinds.
  NodeId build_type(const TypeExprPtr& t, std::map<std::string, NodeId>& vars,
                    const KindingEnv& var_kinds);

 private:
  TypeStore& store_;
  RhsLedger* ledger_;
  TypeEnv env_;
  // Declarative mode types matches exactly by the match rule, with no dead
  // branch removal or compatibility-variable substitution. The soundness
  // property suites run in this mode.
  bool declarative_ = false;
  std::vector<Diagnostic> warnings_;

  InferOutcome infer_match(const TermPtr& e);
};

}  // namespace elevate
