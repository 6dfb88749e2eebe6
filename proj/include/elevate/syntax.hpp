#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace elevate {

struct Span {
  int line = 0, col = 0, end_line = 0, end_col = 0;
  bool known() const { return line > 0; }
  std::string to_string() const;
};

// Labels are uppercase-initial identifiers or normalized natural-number
// literals; variables are lowercase-initial. The namespaces are disjoint.
using Label = std::string;

bool is_label_name(const std::string& s);
bool is_var_name(const std::string& s);

// Numeric labels order by value, everything else lexicographically.
bool label_less(const Label& a, const Label& b);

// ---------------------------------------------------------------------------
// Kinds

struct RowKind {
  bool negative = false;      // false: finite set of allowed labels
  std::set<Label> labels;     // true: cofinite, listed labels excluded
  bool operator==(const RowKind& o) const = default;
};

struct Kind {
  enum class Tag { Type, Row };
  Tag tag = Tag::Type;
  RowKind row;

  static Kind type() { return Kind{}; }
  static Kind row_pos(std::set<Label> ls) { return Kind{Tag::Row, {false, std::move(ls)}}; }
  static Kind row_neg(std::set<Label> ls) { return Kind{Tag::Row, {true, std::move(ls)}}; }
  bool is_row() const { return tag == Tag::Row; }
  bool operator==(const Kind& o) const = default;
  std::string to_string() const;  // "T", "{A,B}" or "~{A,B}"
};

// ---------------------------------------------------------------------------
// Patterns (surface, complex)

struct Pattern;
using PatternPtr = std::shared_ptr<const Pattern>;

struct Pattern {
  enum class Kind { Var, Lab, Record };
  Kind kind = Kind::Var;
  Span span;
  std::string var;                                   // Var
  Label label;                                       // Lab
  PatternPtr payload;                                // Lab; null = bare label
  std::vector<std::pair<Label, PatternPtr>> fields;  // Record
};

PatternPtr pat_var(std::string name, Span sp = {});
PatternPtr pat_label(Label l, PatternPtr payload = nullptr, Span sp = {});
PatternPtr pat_record(std::vector<std::pair<Label, PatternPtr>> fields, Span sp = {});

// ---------------------------------------------------------------------------
// Terms

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Branch {
  PatternPtr pattern;
  TermPtr rhs;
};

struct Term {
  enum class Kind {
    Var, App, Lam, Let, Fix, LabelApp, Record,
    FieldAccess, FieldRemove, RecordMod, RecordExt, Match
  };
  Kind kind = Kind::Var;
  Span span;
  std::string var;     // Var name, Lam param, Let binder
  TermPtr a, b;        // App(a b) | Lam body=a | Let value=a body=b
                       // LabelApp arg=a | Field*/RecordMod/Ext subject=a | Match subject=a
  Label label;         // LabelApp, FieldAccess, FieldRemove
  std::vector<std::pair<Label, TermPtr>> fields;  // Record, RecordMod, RecordExt
  std::vector<Branch> branches;                   // Match
  // Pattern elaboration tags RHS instances with a ledger id (see elaborate.hpp);
  // -1 means untracked.
  int rhs_id = -1;
};

TermPtr mk_var(std::string name, Span sp = {});
TermPtr mk_app(TermPtr f, TermPtr arg, Span sp = {});
TermPtr mk_lam(std::string param, TermPtr body, Span sp = {});
TermPtr mk_let(std::string name, TermPtr value, TermPtr body, Span sp = {});
TermPtr mk_fix(Span sp = {});
TermPtr mk_label(Label l, TermPtr arg, Span sp = {});
TermPtr mk_record(std::vector<std::pair<Label, TermPtr>> fields, Span sp = {});
TermPtr mk_unit(Span sp = {});  // {}
TermPtr mk_field_access(TermPtr subject, Label l, Span sp = {});
TermPtr mk_field_remove(TermPtr subject, Label l, Span sp = {});
TermPtr mk_record_mod(TermPtr subject, std::vector<std::pair<Label, TermPtr>> fields, Span sp = {});
TermPtr mk_record_ext(TermPtr subject, std::vector<std::pair<Label, TermPtr>> fields, Span sp = {});
TermPtr mk_match(TermPtr subject, std::vector<Branch> branches, Span sp = {});
TermPtr with_rhs_id(TermPtr t, int id);

// Free term variables, and capture-avoiding substitution.
std::set<std::string> free_vars(const TermPtr& t);
TermPtr subst_term(const TermPtr& t, const std::string& var, const TermPtr& replacement);

// Structural equality; rhs_id tags and spans are ignored.
bool term_equal(const TermPtr& a, const TermPtr& b);

// Core terms are what pattern elaboration produces: every match is either
// void <>, unit <{} => e>, or a two-branch <l x => e | y => e>.
bool is_core_term(const TermPtr& t);

// ---------------------------------------------------------------------------
// Type expressions (surface syntax and inference readback share this shape)

struct TypeExpr;
using TypeExprPtr = std::shared_ptr<const TypeExpr>;

enum class RowTailKind { Empty, Var, Implicit };

struct TypeExpr {
  enum class Kind { Var, Arrow, Record, Variant, Rec, Alias };
  Kind kind = Kind::Var;
  Span span;
  std::string var;       // Var name, Rec binder
  TypeExprPtr a, b;      // Arrow a -> b; Rec body = a
  // Row content for Record/Variant:
  std::vector<std::pair<Label, TypeExprPtr>> row;
  RowTailKind tail = RowTailKind::Empty;
  std::string tail_var;
  std::optional<RowKind> tail_kind;  // explicit "r: ~{...}" annotation
  // Alias reference:
  std::string alias;
  std::vector<TypeExprPtr> args;
};

TypeExprPtr ty_var(std::string name, Span sp = {});
TypeExprPtr ty_arrow(TypeExprPtr a, TypeExprPtr b, Span sp = {});
TypeExprPtr ty_record(std::vector<std::pair<Label, TypeExprPtr>> row, RowTailKind tail,
                      std::string tail_var = "", std::optional<RowKind> tail_kind = {}, Span sp = {});
TypeExprPtr ty_variant(std::vector<std::pair<Label, TypeExprPtr>> row, RowTailKind tail,
                       std::string tail_var = "", std::optional<RowKind> tail_kind = {}, Span sp = {});
TypeExprPtr ty_rec(std::string binder, TypeExprPtr body, Span sp = {});
TypeExprPtr ty_alias(std::string name, std::vector<TypeExprPtr> args, Span sp = {});

// Free type variables of a surface type (tail vars included, `as` binders bound).
std::set<std::string> free_type_vars(const TypeExprPtr& t);

// ---------------------------------------------------------------------------
// Programs

struct TypeAliasDecl {
  std::string name;
  std::vector<std::string> params;  // forall-bound parameters
  TypeExprPtr body;
  Span span;
};

struct LetDecl {
  std::string name;
  TypeExprPtr annotation;  // may be null
  TermPtr value;
  Span span;
};

struct Decl {
  enum class Kind { TypeAlias, Let };
  Kind kind;
  TypeAliasDecl alias;
  LetDecl let;
};

struct Program {
  std::vector<Decl> decls;
  TermPtr final_expr;  // may be null
};

}  // namespace elevate
