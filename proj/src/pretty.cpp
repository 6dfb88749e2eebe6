#include "elevate/pretty.hpp"

#include <algorithm>
#include <sstream>

namespace elevate {

namespace {

bool is_unit(const TermPtr& t) {
  return t && t->kind == Term::Kind::Record && t->fields.empty();
}

bool atom_term(const TermPtr& t) {
  switch (t->kind) {
    case Term::Kind::Var:
    case Term::Kind::Record:
    case Term::Kind::Fix:
      return true;
    case Term::Kind::LabelApp:
      return is_unit(t->a);  // bare constructor prints as a single token
    case Term::Kind::FieldAccess:
    case Term::Kind::FieldRemove:
    case Term::Kind::RecordMod:
    case Term::Kind::RecordExt:
      return atom_term(t->a);  // postfix chains bind tightest
    default:
      return false;
  }
}

class TermPrinter {
 public:
  std::string run(const TermPtr& t) {
    print(t, 0);
    return os_.str();
  }

 private:
  std::ostringstream os_;

  void indent(int n) {
    os_ << '\n';
    for (int i = 0; i < n; ++i) os_ << "  ";
  }

  void parens(const TermPtr& t, int depth, bool need) {
    if (need) os_ << '(';
    print(t, depth);
    if (need) os_ << ')';
  }

  void fields(const std::vector<std::pair<Label, TermPtr>>& fs, int depth) {
    os_ << '{';
    bool first = true;
    for (const auto& [l, e] : fs) {
      if (!first) os_ << " | ";
      os_ << l << ": ";
      print(e, depth);
      first = false;
    }
    os_ << '}';
  }

  void print(const TermPtr& t, int depth) {
    switch (t->kind) {
      case Term::Kind::Var:
        os_ << t->var;
        break;
      case Term::Kind::Fix:
        os_ << "fix";
        break;
      case Term::Kind::App: {
        bool fn_parens = !atom_term(t->a) && t->a->kind != Term::Kind::App &&
                         t->a->kind != Term::Kind::LabelApp;
        // a label application in function position must not re-absorb the
        // argument when re-parsed
        if (t->a->kind == Term::Kind::LabelApp && !is_unit(t->a->a)) fn_parens = true;
        parens(t->a, depth, fn_parens);
        os_ << ' ';
        parens(t->b, depth, !atom_term(t->b));
        break;
      }
      case Term::Kind::Lam:
        os_ << "lam " << t->var << " = ";
        print(t->a, depth);
        break;
      case Term::Kind::Let:
        os_ << "let " << t->var << " = ";
        print(t->a, depth);
        os_ << " in";
        indent(depth);
        print(t->b, depth);
        break;
      case Term::Kind::LabelApp:
        os_ << t->label;
        if (!is_unit(t->a)) {
          os_ << ' ';
          parens(t->a, depth, !atom_term(t->a));
        }
        break;
      case Term::Kind::Record:
        fields(t->fields, depth);
        break;
      case Term::Kind::FieldAccess:
        parens(t->a, depth, !atom_term(t->a));
        os_ << '.' << t->label;
        break;
      case Term::Kind::FieldRemove:
        parens(t->a, depth, !atom_term(t->a));
        os_ << ".-" << t->label;
        break;
      case Term::Kind::RecordMod:
        parens(t->a, depth, !atom_term(t->a));
        os_ << '.';
        fields(t->fields, depth);
        break;
      case Term::Kind::RecordExt:
        parens(t->a, depth, !atom_term(t->a));
        os_ << ".+";
        fields(t->fields, depth);
        break;
      case Term::Kind::Match: {
        os_ << "match ";
        bool subj_parens = !atom_term(t->a) && t->a->kind != Term::Kind::App &&
                           t->a->kind != Term::Kind::LabelApp;
        parens(t->a, depth, subj_parens);
        os_ << " with <";
        if (t->branches.empty()) {
          os_ << " >";
          break;
        }
        bool multiline = t->branches.size() > 1 || t->branches[0].rhs->kind == Term::Kind::Match ||
                         t->branches[0].rhs->kind == Term::Kind::Let;
        bool first = true;
        for (const auto& br : t->branches) {
          if (multiline)
            indent(depth + 1);
          else
            os_ << ' ';
          if (!first) os_ << "| ";
          os_ << pretty(br.pattern) << " => ";
          print(br.rhs, depth + 2);
          first = false;
        }
        os_ << " >";
        break;
      }
    }
  }
};

}  // namespace

std::string pretty(const TermPtr& t) { return TermPrinter().run(t); }

std::string pretty(const PatternPtr& p) {
  switch (p->kind) {
    case Pattern::Kind::Var:
      return p->var;
    case Pattern::Kind::Lab: {
      std::string out = p->label;
      if (p->payload) out += " " + pretty(p->payload);
      return out;
    }
    case Pattern::Kind::Record: {
      std::string out = "{";
      bool first = true;
      for (const auto& [l, q] : p->fields) {
        if (!first) out += " | ";
        out += l + ": " + pretty(q);
        first = false;
      }
      return out + "}";
    }
  }
  return "";
}

namespace {

bool atom_type(const TypeExprPtr& t) {
  return t->kind == TypeExpr::Kind::Var || t->kind == TypeExpr::Kind::Record ||
         t->kind == TypeExpr::Kind::Variant ||
         (t->kind == TypeExpr::Kind::Alias && t->args.empty());
}

void print_type(std::ostringstream& os, const TypeExprPtr& t, const PrettyOptions& opts);

void print_row(std::ostringstream& os, const TypeExprPtr& t, char open, char close,
               const PrettyOptions& opts) {
  os << open;
  auto row = t->row;
  if (opts.canonical_rows)
    std::stable_sort(row.begin(), row.end(),
                     [](const auto& a, const auto& b) { return label_less(a.first, b.first); });
  bool first = true;
  for (const auto& [l, u] : row) {
    if (!first) os << " | ";
    os << l << ": ";
    print_type(os, u, opts);
    first = false;
  }
  switch (t->tail) {
    case RowTailKind::Empty:
      if (row.empty())
        os << '*';
      else
        os << " | *";
      break;
    case RowTailKind::Implicit:
      os << " | ";
      break;
    case RowTailKind::Var:
      if (!row.empty()) os << " | ";
      os << t->tail_var;
      if (opts.inline_tail_kinds && t->tail_kind) {
        os << ": ~{";
        bool f = true;
        for (const auto& l : t->tail_kind->labels) {
          if (!f) os << ',';
          os << l;
          f = false;
        }
        os << '}';
      }
      break;
  }
  os << close;
}

void print_type(std::ostringstream& os, const TypeExprPtr& t, const PrettyOptions& opts) {
  switch (t->kind) {
    case TypeExpr::Kind::Var:
      os << t->var;
      break;
    case TypeExpr::Kind::Arrow: {
      bool lp = t->a->kind == TypeExpr::Kind::Arrow || t->a->kind == TypeExpr::Kind::Rec;
      if (lp) os << '(';
      print_type(os, t->a, opts);
      if (lp) os << ')';
      os << " -> ";
      print_type(os, t->b, opts);
      break;
    }
    case TypeExpr::Kind::Record:
      print_row(os, t, '{', '}', opts);
      break;
    case TypeExpr::Kind::Variant:
      print_row(os, t, '<', '>', opts);
      break;
    case TypeExpr::Kind::Rec:
      os << t->var << " as ";
      print_type(os, t->a, opts);
      break;
    case TypeExpr::Kind::Alias:
      os << t->alias;
      for (const auto& a : t->args) {
        os << ' ';
        bool p = !atom_type(a);
        if (p) os << '(';
        print_type(os, a, opts);
        if (p) os << ')';
      }
      break;
  }
}

}  // namespace

std::string pretty(const TypeExprPtr& t, const PrettyOptions& opts) {
  std::ostringstream os;
  print_type(os, t, opts);
  return os.str();
}

std::string pretty(const Program& p) {
  std::ostringstream os;
  PrettyOptions topts;
  topts.inline_tail_kinds = true;
  topts.canonical_rows = false;  // keep declarations as written
  for (const auto& d : p.decls) {
    if (d.kind == Decl::Kind::TypeAlias) {
      os << "type " << d.alias.name << " = ";
      if (!d.alias.params.empty()) {
        os << "forall";
        for (const auto& q : d.alias.params) os << ' ' << q;
        os << ". ";
      }
      os << pretty(d.alias.body, topts) << "\n";
    } else {
      os << "let " << d.let.name;
      if (d.let.annotation) os << " : " << pretty(d.let.annotation, topts);
      os << " = " << pretty(d.let.value) << "\n";
    }
  }
  if (p.final_expr) os << pretty(p.final_expr) << "\n";
  return os.str();
}

}  // namespace elevate
