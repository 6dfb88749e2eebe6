#include "elevate/syntax.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <sstream>

namespace elevate {

std::string Span::to_string() const {
  std::ostringstream os;
  os << line << ':' << col << '-' << end_line << ':' << end_col;
  return os.str();
}

bool is_label_name(const std::string& s) {
  if (s.empty()) return false;
  if (std::isdigit(static_cast<unsigned char>(s[0]))) return true;
  return std::isupper(static_cast<unsigned char>(s[0]));
}

bool is_var_name(const std::string& s) {
  if (s.empty()) return false;
  char c = s[0];
  if (c == '#') return true;  // elaboration-internal namespace
  return std::islower(static_cast<unsigned char>(c)) || c == '_';
}

bool label_less(const Label& a, const Label& b) {
  bool na = !a.empty() && std::isdigit(static_cast<unsigned char>(a[0]));
  bool nb = !b.empty() && std::isdigit(static_cast<unsigned char>(b[0]));
  if (na && nb) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  }
  if (na != nb) return na;  // numeric labels sort first
  return a < b;
}

std::string Kind::to_string() const {
  if (tag == Tag::Type) return "T";
  std::string out = row.negative ? "~{" : "{";
  bool first = true;
  for (const auto& l : row.labels) {
    if (!first) out += ",";
    out += l;
    first = false;
  }
  out += "}";
  return out;
}

PatternPtr pat_var(std::string name, Span sp) {
  auto p = std::make_shared<Pattern>();
  p->kind = Pattern::Kind::Var;
  p->var = std::move(name);
  p->span = sp;
  return p;
}

PatternPtr pat_label(Label l, PatternPtr payload, Span sp) {
  auto p = std::make_shared<Pattern>();
  p->kind = Pattern::Kind::Lab;
  p->label = std::move(l);
  p->payload = std::move(payload);
  p->span = sp;
  return p;
}

PatternPtr pat_record(std::vector<std::pair<Label, PatternPtr>> fields, Span sp) {
  auto p = std::make_shared<Pattern>();
  p->kind = Pattern::Kind::Record;
  p->fields = std::move(fields);
  p->span = sp;
  return p;
}

namespace {
std::shared_ptr<Term> base(Term::Kind k, Span sp) {
  auto t = std::make_shared<Term>();
  t->kind = k;
  t->span = sp;
  return t;
}
}  // namespace

TermPtr mk_var(std::string name, Span sp) {
  auto t = base(Term::Kind::Var, sp);
  t->var = std::move(name);
  return t;
}

TermPtr mk_app(TermPtr f, TermPtr arg, Span sp) {
  auto t = base(Term::Kind::App, sp);
  t->a = std::move(f);
  t->b = std::move(arg);
  return t;
}

TermPtr mk_lam(std::string param, TermPtr body, Span sp) {
  auto t = base(Term::Kind::Lam, sp);
  t->var = std::move(param);
  t->a = std::move(body);
  return t;
}

TermPtr mk_let(std::string name, TermPtr value, TermPtr body, Span sp) {
  auto t = base(Term::Kind::Let, sp);
  t->var = std::move(name);
  t->a = std::move(value);
  t->b = std::move(body);
  return t;
}

TermPtr mk_fix(Span sp) { return base(Term::Kind::Fix, sp); }

TermPtr mk_label(Label l, TermPtr arg, Span sp) {
  auto t = base(Term::Kind::LabelApp, sp);
  t->label = std::move(l);
  t->a = std::move(arg);
  return t;
}

TermPtr mk_record(std::vector<std::pair<Label, TermPtr>> fields, Span sp) {
  auto t = base(Term::Kind::Record, sp);
  t->fields = std::move(fields);
  return t;
}

TermPtr mk_unit(Span sp) { return mk_record({}, sp); }

TermPtr mk_field_access(TermPtr subject, Label l, Span sp) {
  auto t = base(Term::Kind::FieldAccess, sp);
  t->a = std::move(subject);
  t->label = std::move(l);
  return t;
}

TermPtr mk_field_remove(TermPtr subject, Label l, Span sp) {
  auto t = base(Term::Kind::FieldRemove, sp);
  t->a = std::move(subject);
  t->label = std::move(l);
  return t;
}

TermPtr mk_record_mod(TermPtr subject, std::vector<std::pair<Label, TermPtr>> fields, Span sp) {
  auto t = base(Term::Kind::RecordMod, sp);
  t->a = std::move(subject);
  t->fields = std::move(fields);
  return t;
}

TermPtr mk_record_ext(TermPtr subject, std::vector<std::pair<Label, TermPtr>> fields, Span sp) {
  auto t = base(Term::Kind::RecordExt, sp);
  t->a = std::move(subject);
  t->fields = std::move(fields);
  return t;
}

TermPtr mk_match(TermPtr subject, std::vector<Branch> branches, Span sp) {
  auto t = base(Term::Kind::Match, sp);
  t->a = std::move(subject);
  t->branches = std::move(branches);
  return t;
}

TermPtr with_rhs_id(TermPtr t, int id) {
  auto copy = std::make_shared<Term>(*t);
  copy->rhs_id = id;
  return copy;
}

namespace {

void pattern_vars(const PatternPtr& p, std::vector<std::string>& out) {
  if (!p) return;
  switch (p->kind) {
    case Pattern::Kind::Var: out.push_back(p->var); break;
    case Pattern::Kind::Lab: pattern_vars(p->payload, out); break;
    case Pattern::Kind::Record:
      for (const auto& [l, q] : p->fields) pattern_vars(q, out);
      break;
  }
}

void free_vars_into(const TermPtr& t, std::set<std::string>& bound, std::set<std::string>& out) {
  if (!t) return;
  switch (t->kind) {
    case Term::Kind::Var:
      if (!bound.count(t->var)) out.insert(t->var);
      break;
    case Term::Kind::App:
      free_vars_into(t->a, bound, out);
      free_vars_into(t->b, bound, out);
      break;
    case Term::Kind::Lam: {
      bool fresh = bound.insert(t->var).second;
      free_vars_into(t->a, bound, out);
      if (fresh) bound.erase(t->var);
      break;
    }
    case Term::Kind::Let: {
      free_vars_into(t->a, bound, out);
      bool fresh = bound.insert(t->var).second;
      free_vars_into(t->b, bound, out);
      if (fresh) bound.erase(t->var);
      break;
    }
    case Term::Kind::Fix:
      break;
    case Term::Kind::LabelApp:
    case Term::Kind::FieldAccess:
    case Term::Kind::FieldRemove:
      free_vars_into(t->a, bound, out);
      break;
    case Term::Kind::Record:
      for (const auto& [l, e] : t->fields) free_vars_into(e, bound, out);
      break;
    case Term::Kind::RecordMod:
    case Term::Kind::RecordExt:
      free_vars_into(t->a, bound, out);
      for (const auto& [l, e] : t->fields) free_vars_into(e, bound, out);
      break;
    case Term::Kind::Match: {
      free_vars_into(t->a, bound, out);
      for (const auto& br : t->branches) {
        std::vector<std::string> vs;
        pattern_vars(br.pattern, vs);
        std::vector<std::string> added;
        for (const auto& v : vs)
          if (bound.insert(v).second) added.push_back(v);
        free_vars_into(br.rhs, bound, out);
        for (const auto& v : added) bound.erase(v);
      }
      break;
    }
  }
}

// Smallest decorated name avoiding the given sets; deterministic so that
// substitution (and with it single-stepping) is a pure function.
std::string rename_fresh(const std::string& base_name, const std::set<std::string>& avoid1,
                         const std::set<std::string>& avoid2) {
  for (int i = 1;; ++i) {
    std::string candidate = base_name + "~" + std::to_string(i);
    if (!avoid1.count(candidate) && !avoid2.count(candidate)) return candidate;
  }
}

PatternPtr rename_in_pattern(const PatternPtr& p, const std::string& from, const std::string& to) {
  if (!p) return p;
  switch (p->kind) {
    case Pattern::Kind::Var:
      if (p->var == from) return pat_var(to, p->span);
      return p;
    case Pattern::Kind::Lab: {
      auto q = rename_in_pattern(p->payload, from, to);
      if (q == p->payload) return p;
      return pat_label(p->label, q, p->span);
    }
    case Pattern::Kind::Record: {
      bool changed = false;
      std::vector<std::pair<Label, PatternPtr>> fs;
      for (const auto& [l, sub] : p->fields) {
        auto q = rename_in_pattern(sub, from, to);
        changed |= (q != sub);
        fs.emplace_back(l, q);
      }
      if (!changed) return p;
      return pat_record(std::move(fs), p->span);
    }
  }
  return p;
}

}  // namespace

std::set<std::string> free_vars(const TermPtr& t) {
  std::set<std::string> bound, out;
  free_vars_into(t, bound, out);
  return out;
}

TermPtr subst_term(const TermPtr& t, const std::string& var, const TermPtr& replacement) {
  if (!t) return t;
  auto keep_id = [&](TermPtr r) -> TermPtr {
    if (t->rhs_id >= 0 && r->rhs_id != t->rhs_id) return with_rhs_id(r, t->rhs_id);
    return r;
  };
  switch (t->kind) {
    case Term::Kind::Var:
      if (t->var == var) return keep_id(replacement);
      return t;
    case Term::Kind::Fix:
      return t;
    case Term::Kind::App:
      return keep_id(mk_app(subst_term(t->a, var, replacement), subst_term(t->b, var, replacement), t->span));
    case Term::Kind::Lam: {
      if (t->var == var) return t;
      auto repl_fv = free_vars(replacement);
      if (repl_fv.count(t->var)) {
        std::string nv = rename_fresh(t->var, repl_fv, free_vars(t->a));
        auto body = subst_term(t->a, t->var, mk_var(nv));
        return keep_id(mk_lam(nv, subst_term(body, var, replacement), t->span));
      }
      return keep_id(mk_lam(t->var, subst_term(t->a, var, replacement), t->span));
    }
    case Term::Kind::Let: {
      auto value = subst_term(t->a, var, replacement);
      if (t->var == var) return keep_id(mk_let(t->var, value, t->b, t->span));
      auto repl_fv = free_vars(replacement);
      if (repl_fv.count(t->var)) {
        std::string nv = rename_fresh(t->var, repl_fv, free_vars(t->b));
        auto body = subst_term(t->b, t->var, mk_var(nv));
        return keep_id(mk_let(nv, value, subst_term(body, var, replacement), t->span));
      }
      return keep_id(mk_let(t->var, value, subst_term(t->b, var, replacement), t->span));
    }
    case Term::Kind::LabelApp:
      return keep_id(mk_label(t->label, subst_term(t->a, var, replacement), t->span));
    case Term::Kind::FieldAccess:
      return keep_id(mk_field_access(subst_term(t->a, var, replacement), t->label, t->span));
    case Term::Kind::FieldRemove:
      return keep_id(mk_field_remove(subst_term(t->a, var, replacement), t->label, t->span));
    case Term::Kind::Record:
    case Term::Kind::RecordMod:
    case Term::Kind::RecordExt: {
      std::vector<std::pair<Label, TermPtr>> fs;
      for (const auto& [l, e] : t->fields) fs.emplace_back(l, subst_term(e, var, replacement));
      if (t->kind == Term::Kind::Record) return keep_id(mk_record(std::move(fs), t->span));
      auto subj = subst_term(t->a, var, replacement);
      if (t->kind == Term::Kind::RecordMod) return keep_id(mk_record_mod(subj, std::move(fs), t->span));
      return keep_id(mk_record_ext(subj, std::move(fs), t->span));
    }
    case Term::Kind::Match: {
      auto subj = subst_term(t->a, var, replacement);
      std::vector<Branch> bs;
      auto repl_fv = free_vars(replacement);
      for (const auto& br : t->branches) {
        std::vector<std::string> vs;
        pattern_vars(br.pattern, vs);
        bool shadows = std::find(vs.begin(), vs.end(), var) != vs.end();
        if (shadows) {
          bs.push_back(br);
          continue;
        }
        PatternPtr pat = br.pattern;
        TermPtr rhs = br.rhs;
        for (const auto& v : vs) {
          if (repl_fv.count(v)) {
            std::string nv = rename_fresh(v, repl_fv, free_vars(rhs));
            pat = rename_in_pattern(pat, v, nv);
            rhs = subst_term(rhs, v, mk_var(nv));
          }
        }
        bs.push_back(Branch{pat, subst_term(rhs, var, replacement)});
      }
      return keep_id(mk_match(subj, std::move(bs), t->span));
    }
  }
  return t;
}

namespace {

bool pattern_equal(const PatternPtr& a, const PatternPtr& b) {
  if (!a || !b) return a == b;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Pattern::Kind::Var: return a->var == b->var;
    case Pattern::Kind::Lab:
      return a->label == b->label && pattern_equal(a->payload, b->payload);
    case Pattern::Kind::Record: {
      if (a->fields.size() != b->fields.size()) return false;
      for (size_t i = 0; i < a->fields.size(); ++i) {
        if (a->fields[i].first != b->fields[i].first) return false;
        if (!pattern_equal(a->fields[i].second, b->fields[i].second)) return false;
      }
      return true;
    }
  }
  return false;
}

}  // namespace

bool term_equal(const TermPtr& a, const TermPtr& b) {
  if (!a || !b) return a == b;
  if (a->kind != b->kind) return false;
  if (a->var != b->var || a->label != b->label) return false;
  if (a->fields.size() != b->fields.size() || a->branches.size() != b->branches.size()) return false;
  for (size_t i = 0; i < a->fields.size(); ++i) {
    if (a->fields[i].first != b->fields[i].first) return false;
    if (!term_equal(a->fields[i].second, b->fields[i].second)) return false;
  }
  for (size_t i = 0; i < a->branches.size(); ++i) {
    if (!pattern_equal(a->branches[i].pattern, b->branches[i].pattern)) return false;
    if (!term_equal(a->branches[i].rhs, b->branches[i].rhs)) return false;
  }
  return term_equal(a->a, b->a) && term_equal(a->b, b->b);
}

bool is_core_term(const TermPtr& t) {
  if (!t) return true;
  switch (t->kind) {
    case Term::Kind::Match: {
      if (!is_core_term(t->a)) return false;
      const auto& bs = t->branches;
      bool shape_ok = false;
      if (bs.empty()) {
        shape_ok = true;
      } else if (bs.size() == 1) {
        shape_ok = bs[0].pattern->kind == Pattern::Kind::Record && bs[0].pattern->fields.empty();
      } else if (bs.size() == 2) {
        shape_ok = bs[0].pattern->kind == Pattern::Kind::Lab && bs[0].pattern->payload &&
                   bs[0].pattern->payload->kind == Pattern::Kind::Var &&
                   bs[1].pattern->kind == Pattern::Kind::Var;
      }
      if (!shape_ok) return false;
      for (const auto& br : bs)
        if (!is_core_term(br.rhs)) return false;
      return true;
    }
    case Term::Kind::Record:
    case Term::Kind::RecordMod:
    case Term::Kind::RecordExt: {
      if (!is_core_term(t->a)) return false;
      for (const auto& [l, e] : t->fields)
        if (!is_core_term(e)) return false;
      return true;
    }
    default:
      return is_core_term(t->a) && is_core_term(t->b);
  }
}

TypeExprPtr ty_var(std::string name, Span sp) {
  auto t = std::make_shared<TypeExpr>();
  t->kind = TypeExpr::Kind::Var;
  t->var = std::move(name);
  t->span = sp;
  return t;
}

TypeExprPtr ty_arrow(TypeExprPtr a, TypeExprPtr b, Span sp) {
  auto t = std::make_shared<TypeExpr>();
  t->kind = TypeExpr::Kind::Arrow;
  t->a = std::move(a);
  t->b = std::move(b);
  t->span = sp;
  return t;
}

namespace {
TypeExprPtr ty_rowed(TypeExpr::Kind k, std::vector<std::pair<Label, TypeExprPtr>> row,
                     RowTailKind tail, std::string tail_var, std::optional<RowKind> tail_kind, Span sp) {
  auto t = std::make_shared<TypeExpr>();
  t->kind = k;
  t->row = std::move(row);
  t->tail = tail;
  t->tail_var = std::move(tail_var);
  t->tail_kind = std::move(tail_kind);
  t->span = sp;
  return t;
}
}  // namespace

TypeExprPtr ty_record(std::vector<std::pair<Label, TypeExprPtr>> row, RowTailKind tail,
                      std::string tail_var, std::optional<RowKind> tail_kind, Span sp) {
  return ty_rowed(TypeExpr::Kind::Record, std::move(row), tail, std::move(tail_var), std::move(tail_kind), sp);
}

TypeExprPtr ty_variant(std::vector<std::pair<Label, TypeExprPtr>> row, RowTailKind tail,
                       std::string tail_var, std::optional<RowKind> tail_kind, Span sp) {
  return ty_rowed(TypeExpr::Kind::Variant, std::move(row), tail, std::move(tail_var), std::move(tail_kind), sp);
}

TypeExprPtr ty_rec(std::string binder, TypeExprPtr body, Span sp) {
  auto t = std::make_shared<TypeExpr>();
  t->kind = TypeExpr::Kind::Rec;
  t->var = std::move(binder);
  t->a = std::move(body);
  t->span = sp;
  return t;
}

TypeExprPtr ty_alias(std::string name, std::vector<TypeExprPtr> args, Span sp) {
  auto t = std::make_shared<TypeExpr>();
  t->kind = TypeExpr::Kind::Alias;
  t->alias = std::move(name);
  t->args = std::move(args);
  t->span = sp;
  return t;
}

namespace {
void ftv_into(const TypeExprPtr& t, std::set<std::string>& bound, std::set<std::string>& out) {
  if (!t) return;
  switch (t->kind) {
    case TypeExpr::Kind::Var:
      if (!bound.count(t->var)) out.insert(t->var);
      break;
    case TypeExpr::Kind::Arrow:
      ftv_into(t->a, bound, out);
      ftv_into(t->b, bound, out);
      break;
    case TypeExpr::Kind::Record:
    case TypeExpr::Kind::Variant:
      for (const auto& [l, u] : t->row) ftv_into(u, bound, out);
      if (t->tail == RowTailKind::Var && !bound.count(t->tail_var)) out.insert(t->tail_var);
      break;
    case TypeExpr::Kind::Rec: {
      bool fresh = bound.insert(t->var).second;
      ftv_into(t->a, bound, out);
      if (fresh) bound.erase(t->var);
      break;
    }
    case TypeExpr::Kind::Alias:
      for (const auto& u : t->args) ftv_into(u, bound, out);
      break;
  }
}
}  // namespace

std::set<std::string> free_type_vars(const TypeExprPtr& t) {
  std::set<std::string> bound, out;
  ftv_into(t, bound, out);
  return out;
}

}  // namespace elevate
