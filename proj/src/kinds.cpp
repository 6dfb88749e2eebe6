#include "elevate/kinds.hpp"

#include <algorithm>
#include <set>

namespace elevate {

namespace {

std::set<Label> set_union(const std::set<Label>& a, const std::set<Label>& b) {
  std::set<Label> r = a;
  r.insert(b.begin(), b.end());
  return r;
}

std::set<Label> set_inter(const std::set<Label>& a, const std::set<Label>& b) {
  std::set<Label> r;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(r, r.begin()));
  return r;
}

std::set<Label> set_diff(const std::set<Label>& a, const std::set<Label>& b) {
  std::set<Label> r;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(r, r.begin()));
  return r;
}

bool disjoint(const std::set<Label>& a, const std::set<Label>& b) {
  return set_inter(a, b).empty();
}

bool subset(const std::set<Label>& a, const std::set<Label>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

bool row_kind_subset(const RowKind& k1, const RowKind& k2) {
  if (!k1.negative && !k2.negative) return subset(k1.labels, k2.labels);
  if (k1.negative && k2.negative) return subset(k2.labels, k1.labels);
  if (!k1.negative && k2.negative) return disjoint(k1.labels, k2.labels);
  return false;  // negative within positive: never
}

std::optional<RowKind> row_kind_extend(const RowKind& k, const Label& l) {
  if (!k.negative) {
    if (k.labels.count(l)) return std::nullopt;
    RowKind r = k;
    r.labels.insert(l);
    return r;
  }
  if (!k.labels.count(l)) return std::nullopt;
  RowKind r = k;
  r.labels.erase(l);
  return r;
}

bool row_kind_admits(const RowKind& k, const Label& l) {
  return k.negative ? !k.labels.count(l) : k.labels.count(l) > 0;
}

RowKind row_kind_minus(const RowKind& k, const Label& l) {
  RowKind r = k;
  if (k.negative)
    r.labels.insert(l);
  else
    r.labels.erase(l);
  return r;
}

RowKind row_kind_intersect(const RowKind& a, const RowKind& b) {
  if (!a.negative && !b.negative) return RowKind{false, set_inter(a.labels, b.labels)};
  if (a.negative && b.negative) return RowKind{true, set_union(a.labels, b.labels)};
  const RowKind& pos = a.negative ? b : a;
  const RowKind& neg = a.negative ? a : b;
  return RowKind{false, set_diff(pos.labels, neg.labels)};
}

std::string row_kind_to_string(const RowKind& k) {
  std::string out = k.negative ? "~{" : "{";
  bool first = true;
  for (const auto& l : k.labels) {
    if (!first) out += ",";
    out += l;
    first = false;
  }
  return out + "}";
}

namespace {

[[noreturn]] void kind_fail(const std::string& msg, Span sp) {
  throw CompileError(codes::kind, msg, sp);
}

// Kind of the row component of a record/variant node.
RowKind row_kind_of(const KindingEnv& env, const TypeExprPtr& t) {
  RowKind tail;
  switch (t->tail) {
    case RowTailKind::Empty:
      tail = RowKind{false, {}};
      break;
    case RowTailKind::Implicit: {
      // the most permissive well-formed kind: excludes exactly the labels
      // already present in this row
      std::set<Label> present;
      for (const auto& [l, u] : t->row) present.insert(l);
      tail = RowKind{true, std::move(present)};
      break;
    }
    case RowTailKind::Var: {
      auto it = env.find(t->tail_var);
      if (it == env.end()) {
        // inline kind annotations stand in for an environment entry
        if (!t->tail_kind)
          kind_fail("unbound row variable '" + t->tail_var + "'", t->span);
        tail = *t->tail_kind;
        break;
      }
      if (!it->second.is_row())
        kind_fail("variable '" + t->tail_var + "' is used as a row but has kind T", t->span);
      tail = it->second.row;
      break;
    }
  }
  for (auto it = t->row.rbegin(); it != t->row.rend(); ++it) {
    Kind field = kind_of(env, it->second);
    if (field.is_row()) kind_fail("row used where an ordinary type is expected", it->second->span);
    auto ext = row_kind_extend(tail, it->first);
    if (!ext) kind_fail("label '" + it->first + "' may occur twice in this row", t->span);
    tail = *ext;
  }
  return tail;
}

}  // namespace

void check_contractive(const std::string& binder, const TypeExprPtr& body) {
  TypeExprPtr b = body;
  while (b && b->kind == TypeExpr::Kind::Rec) b = b->a;
  if (!b || b->kind == TypeExpr::Kind::Var || b->kind == TypeExpr::Kind::Alias)
    kind_fail("body of '" + binder + " as ...' is not contractive", body ? body->span : Span{});
}

Kind kind_of(const KindingEnv& env, const TypeExprPtr& t) {
  switch (t->kind) {
    case TypeExpr::Kind::Var: {
      auto it = env.find(t->var);
      if (it == env.end()) kind_fail("unbound type variable '" + t->var + "'", t->span);
      return it->second;
    }
    case TypeExpr::Kind::Arrow: {
      if (kind_of(env, t->a).is_row() || kind_of(env, t->b).is_row())
        kind_fail("row used where an ordinary type is expected", t->span);
      return Kind::type();
    }
    case TypeExpr::Kind::Record:
    case TypeExpr::Kind::Variant:
      row_kind_of(env, t);
      return Kind::type();
    case TypeExpr::Kind::Rec: {
      check_contractive(t->var, t->a);
      KindingEnv inner = env;
      inner[t->var] = Kind::type();
      if (kind_of(inner, t->a).is_row())
        kind_fail("recursive body must be an ordinary type", t->span);
      return Kind::type();
    }
    case TypeExpr::Kind::Alias:
      kind_fail("unresolved type alias '" + t->alias + "'", t->span);
  }
  return Kind::type();
}

namespace {

void collect_vars(const TypeExprPtr& t, std::set<std::string>& bound, KindingEnv& out) {
  auto note = [&](const std::string& name, Kind k, Span sp) {
    if (bound.count(name)) return;
    auto it = out.find(name);
    if (it == out.end()) {
      out[name] = k;
      return;
    }
    if (it->second.is_row() != k.is_row())
      kind_fail("variable '" + name + "' is used both as a type and as a row", sp);
    if (k.is_row()) it->second = Kind{Kind::Tag::Row, row_kind_intersect(it->second.row, k.row)};
  };
  switch (t->kind) {
    case TypeExpr::Kind::Var:
      note(t->var, Kind::type(), t->span);
      break;
    case TypeExpr::Kind::Arrow:
      collect_vars(t->a, bound, out);
      collect_vars(t->b, bound, out);
      break;
    case TypeExpr::Kind::Record:
    case TypeExpr::Kind::Variant: {
      for (const auto& [l, u] : t->row) collect_vars(u, bound, out);
      if (t->tail == RowTailKind::Var) {
        std::set<Label> present;
        for (const auto& [l, u] : t->row) present.insert(l);
        RowKind k{true, std::move(present)};
        if (t->tail_kind) k = row_kind_intersect(k, *t->tail_kind);
        note(t->tail_var, Kind{Kind::Tag::Row, k}, t->span);
      }
      break;
    }
    case TypeExpr::Kind::Rec: {
      bool fresh = bound.insert(t->var).second;
      collect_vars(t->a, bound, out);
      if (fresh) bound.erase(t->var);
      break;
    }
    case TypeExpr::Kind::Alias:
      for (const auto& a : t->args) collect_vars(a, bound, out);
      break;
  }
}

}  // namespace

KindingEnv collect_annotation_vars(const TypeExprPtr& t) {
  KindingEnv out;
  std::set<std::string> bound;
  collect_vars(t, bound, out);
  return out;
}

namespace {

int alias_rename_counter = 0;

TypeExprPtr subst_one(const TypeExprPtr& t, const std::map<std::string, TypeExprPtr>& sub,
                      std::set<std::string>& bound) {
  switch (t->kind) {
    case TypeExpr::Kind::Var: {
      if (bound.count(t->var)) return t;
      auto it = sub.find(t->var);
      return it != sub.end() ? it->second : t;
    }
    case TypeExpr::Kind::Arrow:
      return ty_arrow(subst_one(t->a, sub, bound), subst_one(t->b, sub, bound), t->span);
    case TypeExpr::Kind::Record:
    case TypeExpr::Kind::Variant: {
      std::vector<std::pair<Label, TypeExprPtr>> row;
      for (const auto& [l, u] : t->row) row.emplace_back(l, subst_one(u, sub, bound));
      if (t->tail == RowTailKind::Var && !bound.count(t->tail_var) && sub.count(t->tail_var)) {
        auto rep = sub.at(t->tail_var);
        if (rep->kind != TypeExpr::Kind::Var)
          kind_fail("alias argument for row tail '" + t->tail_var + "' must be a type variable",
                    t->span);
        return t->kind == TypeExpr::Kind::Record
                   ? ty_record(std::move(row), RowTailKind::Var, rep->var, t->tail_kind, t->span)
                   : ty_variant(std::move(row), RowTailKind::Var, rep->var, t->tail_kind, t->span);
      }
      return t->kind == TypeExpr::Kind::Record
                 ? ty_record(std::move(row), t->tail, t->tail_var, t->tail_kind, t->span)
                 : ty_variant(std::move(row), t->tail, t->tail_var, t->tail_kind, t->span);
    }
    case TypeExpr::Kind::Rec: {
      // rename the binder when a replacement could capture it
      std::string binder = t->var;
      TypeExprPtr body = t->a;
      bool clash = false;
      for (const auto& [from, to] : sub)
        if (from != binder && free_type_vars(to).count(binder)) clash = true;
      if (clash) {
        std::string nb = binder + "'" + std::to_string(++alias_rename_counter);
        std::map<std::string, TypeExprPtr> rn{{binder, ty_var(nb)}};
        std::set<std::string> none;
        body = subst_one(body, rn, none);
        binder = nb;
      }
      bool fresh = bound.insert(binder).second;
      auto out = ty_rec(binder, subst_one(body, sub, bound), t->span);
      if (fresh) bound.erase(binder);
      return out;
    }
    case TypeExpr::Kind::Alias: {
      std::vector<TypeExprPtr> args;
      for (const auto& a : t->args) args.push_back(subst_one(a, sub, bound));
      return ty_alias(t->alias, std::move(args), t->span);
    }
  }
  return t;
}

TypeExprPtr expand(const TypeExprPtr& t, const AliasTable& table, std::set<std::string>& stack) {
  switch (t->kind) {
    case TypeExpr::Kind::Var:
      return t;
    case TypeExpr::Kind::Arrow:
      return ty_arrow(expand(t->a, table, stack), expand(t->b, table, stack), t->span);
    case TypeExpr::Kind::Record:
    case TypeExpr::Kind::Variant: {
      std::vector<std::pair<Label, TypeExprPtr>> row;
      for (const auto& [l, u] : t->row) row.emplace_back(l, expand(u, table, stack));
      return t->kind == TypeExpr::Kind::Record
                 ? ty_record(std::move(row), t->tail, t->tail_var, t->tail_kind, t->span)
                 : ty_variant(std::move(row), t->tail, t->tail_var, t->tail_kind, t->span);
    }
    case TypeExpr::Kind::Rec:
      return ty_rec(t->var, expand(t->a, table, stack), t->span);
    case TypeExpr::Kind::Alias: {
      auto it = table.find(t->alias);
      if (it == table.end()) kind_fail("unknown type alias '" + t->alias + "'", t->span);
      if (stack.count(t->alias))
        kind_fail("type alias '" + t->alias + "' refers to itself (use 'as' for recursion)",
                  t->span);
      const AliasDef& def = it->second;
      if (def.params.size() != t->args.size())
        kind_fail("alias '" + t->alias + "' expects " + std::to_string(def.params.size()) +
                      " argument(s), got " + std::to_string(t->args.size()),
                  t->span);
      std::map<std::string, TypeExprPtr> sub;
      for (size_t i = 0; i < def.params.size(); ++i)
        sub[def.params[i]] = expand(t->args[i], table, stack);
      std::set<std::string> bound;
      auto body = subst_one(def.body, sub, bound);
      stack.insert(t->alias);
      auto out = expand(body, table, stack);
      stack.erase(t->alias);
      return out;
    }
  }
  return t;
}

}  // namespace

TypeExprPtr subst_type(const TypeExprPtr& t, const std::map<std::string, TypeExprPtr>& sub) {
  std::set<std::string> bound;
  return subst_one(t, sub, bound);
}

TypeExprPtr expand_aliases(const TypeExprPtr& t, const AliasTable& table) {
  std::set<std::string> stack;
  return expand(t, table, stack);
}

}  // namespace elevate
