#pragma once

#include <map>
#include <optional>
#include <string>

#include "elevate/diagnostics.hpp"
#include "elevate/syntax.hpp"

namespace elevate {

// ---------------------------------------------------------------------------
// Row kind algebra. Positive kinds are finite sets of labels that may appear
// in a row; negative kinds are cofinite (all labels except the listed ones).

// k1 is a subset of k2 under the label-set denotation. Negative kinds are
// never subsets of positive ones (a cofinite set does not fit in a finite one).
bool row_kind_subset(const RowKind& k1, const RowKind& k2);

// Kind of the row (l: t | rho) given kind(rho) = k. Fails (nullopt) when the
// label may already occur in rho, i.e. the extended row could repeat l.
std::optional<RowKind> row_kind_extend(const RowKind& k, const Label& l);

// Can a row of kind k contain label l?
bool row_kind_admits(const RowKind& k, const Label& l);

// Kind for the rest of a row of kind k once label l is split off; the inverse
// direction of row_kind_extend.
RowKind row_kind_minus(const RowKind& k, const Label& l);

// Greatest lower bound of the two denotations; always exists.
RowKind row_kind_intersect(const RowKind& a, const RowKind& b);

std::string row_kind_to_string(const RowKind& k);

// ---------------------------------------------------------------------------
// Kinding judgment over surface types (aliases already expanded).

using KindingEnv = std::map<std::string, Kind>;

// Throws CompileError (E-KIND) on unbound variables, duplicate row labels,
// kind mismatches and non-contractive recursive bodies.
Kind kind_of(const KindingEnv& env, const TypeExprPtr& t);

// The body under `binder as ...` must start with an arrow, record or variant
// constructor once binder chains are peeled.
void check_contractive(const std::string& binder, const TypeExprPtr& body);

// Collect the implicitly quantified variables of an annotation: lowercase
// names in type position get kind T, row tail names get a negative row kind
// (the intersection of the explicit annotation, if any, with the labels each
// occurrence must exclude).
KindingEnv collect_annotation_vars(const TypeExprPtr& t);

// ---------------------------------------------------------------------------
// Type alias resolution (performed before kinding).

struct AliasDef {
  std::vector<std::string> params;
  TypeExprPtr body;
};

using AliasTable = std::map<std::string, AliasDef>;

// Expand alias references; `as` binders survive expansion. Detects cyclic
// references and arity mismatches.
TypeExprPtr expand_aliases(const TypeExprPtr& t, const AliasTable& table);

// Capture-avoiding substitution of type variables.
TypeExprPtr subst_type(const TypeExprPtr& t, const std::map<std::string, TypeExprPtr>& sub);

}  // namespace elevate
