#include "elevate/driver.hpp"

#include <sstream>

#include "elevate/kinds.hpp"
#include "elevate/parser.hpp"
#include "elevate/pretty.hpp"

namespace elevate {

std::string Diagnostic::render(bool color) const {
  std::ostringstream os;
  const char* kind = severity == Severity::Error ? "error" : "warning";
  const char* hue = severity == Severity::Error ? "\x1b[31m" : "\x1b[33m";
  if (color) os << hue;
  os << code;
  if (color) os << "\x1b[0m";
  os << ' ' << (file.empty() ? "<input>" : file) << ':' << span.to_string() << ' ' << kind << ": "
     << message;
  for (const auto& n : notes) os << "\n  note: " << n;
  return os.str();
}

std::string render_diagnostics(const std::vector<Diagnostic>& ds, bool color) {
  std::ostringstream os;
  for (const auto& d : ds) os << d.render(color) << "\n";
  return os.str();
}

bool CheckedProgram::ok() const {
  for (const auto& d : diagnostics)
    if (d.severity == Severity::Error) return false;
  return true;
}

TermPtr CheckedProgram::runnable() const {
  if (!final_expr) return nullptr;
  TermPtr t = final_expr;
  for (auto it = lets.rbegin(); it != lets.rend(); ++it) {
    if (!it->ok) return nullptr;
    t = mk_let(it->name, it->term, t, it->span);
  }
  return t;
}

const CheckedLet* CheckedProgram::find(const std::string& name) const {
  for (auto it = lets.rbegin(); it != lets.rend(); ++it)
    if (it->name == name) return &*it;
  return nullptr;
}

namespace {

Program resolve_program_aliases(const Program& p) {
  Program out;
  out.final_expr = p.final_expr;
  AliasTable table;
  for (const auto& d : p.decls) {
    if (d.kind == Decl::Kind::TypeAlias) {
      const auto& a = d.alias;
      if (table.count(a.name))
        throw CompileError(codes::kind, "type alias '" + a.name + "' is defined twice", a.span);
      // expand references inside the body now; recursion must go through 'as'
      AliasDef def{a.params, expand_aliases(a.body, table)};
      // parameters are ordinary type variables while validating the body
      KindingEnv env = collect_annotation_vars(def.body);
      for (const auto& q : a.params) env.emplace(q, Kind::type());
      kind_of(env, def.body);
      table[a.name] = std::move(def);
      out.decls.push_back(d);
    } else {
      Decl resolved = d;
      if (d.let.annotation)
        resolved.let.annotation = expand_aliases(d.let.annotation, table);
      out.decls.push_back(std::move(resolved));
    }
  }
  return out;
}

std::string describe_ann_var(const std::string& name) {
  if (name.rfind("#implicit", 0) == 0) return "an omitted row tail";
  return "variable '" + name + "'";
}

Diagnostic from_error(const CompileError& e, const std::string& file) {
  Diagnostic d;
  d.severity = Severity::Error;
  d.code = e.code;
  d.message = e.what();
  d.file = file;
  d.span = e.span;
  d.notes = e.notes;
  return d;
}

}  // namespace

Program elaborate_source(const std::string& source) {
  Program parsed = parse_program(source);
  Program resolved = resolve_program_aliases(parsed);
  RhsLedger ledger;
  return elaborate_program(resolved, ledger);
}

CheckedProgram check_source(const std::string& source, const std::string& filename) {
  CheckedProgram out;
  out.store = std::make_shared<TypeStore>();
  out.ledger = std::make_shared<RhsLedger>();
  out.surface = parse_program(source);

  Program resolved;
  try {
    resolved = resolve_program_aliases(out.surface);
  } catch (const CompileError& e) {
    out.diagnostics.push_back(from_error(e, filename));
    return out;
  }

  Inferencer inf(*out.store, out.ledger.get());
  Elaborator elab(*out.ledger);

  out.elaborated.final_expr = nullptr;
  for (const auto& d : resolved.decls) {
    out.elaborated.decls.push_back(d);
    if (d.kind != Decl::Kind::Let) continue;
    const LetDecl& let = d.let;

    CheckedLet checked;
    checked.name = let.name;
    checked.span = let.span;
    try {
      TermPtr elaborated = elab.elaborate_term(let.value);
      out.elaborated.decls.back().let.value = elaborated;

      Scheme scheme;
      TermPtr term;
      if (let.annotation) {
        KindingEnv var_kinds = collect_annotation_vars(let.annotation);
        kind_of(var_kinds, let.annotation);
        std::map<std::string, NodeId> vars;
        NodeId ann = inf.build_type(let.annotation, vars, var_kinds);
        std::map<std::string, Kind> declared;
        for (const auto& [name, id] : vars)
          declared[name] = out.store->cnode(out.store->find(id)).kind;

        auto res = inf.infer(elaborated, ann);
        term = res.term;

        // the annotation must be no more general than the inferred type:
        // every annotation variable stays unsolved, distinct, and unnarrowed
        std::set<NodeId> reps;
        for (const auto& [name, id] : vars) {
          NodeId rep = out.store->find(id);
          const TypeNode& n = out.store->cnode(rep);
          if (n.tag != TypeNode::Tag::Var)
            throw CompileError(codes::unify,
                               "annotation is more general than the inferred type: " +
                                   describe_ann_var(name) + " was forced to a concrete type",
                               let.span);
          if (!reps.insert(rep).second)
            throw CompileError(codes::unify,
                               "annotation is more general than the inferred type: " +
                                   describe_ann_var(name) +
                                   " was identified with another annotation variable",
                               let.span);
          if (!(n.kind == declared.at(name)))
            throw CompileError(codes::unify,
                               "annotation is more general than the inferred type: the kind of " +
                                   describe_ann_var(name) + " was narrowed to " + n.kind.to_string(),
                               let.span);
        }
        scheme = generalize(*out.store, inf.env(), ann);
      } else {
        auto res = inf.infer(elaborated);
        term = res.term;
        scheme = generalize(*out.store, inf.env(), res.type);
      }
      checked.term = term;
      checked.scheme = scheme;
      checked.printed = print_scheme(*out.store, scheme);
      inf.env().push(let.name, scheme);
    } catch (const CompileError& e) {
      checked.ok = false;
      out.diagnostics.push_back(from_error(e, filename));
      // later declarations may still refer to the name
      NodeId poison = out.store->fresh_var(Kind::type());
      inf.env().push(let.name, generalize(*out.store, inf.env(), poison));
    }
    out.lets.push_back(std::move(checked));
  }

  if (resolved.final_expr) {
    try {
      TermPtr elaborated = elab.elaborate_term(resolved.final_expr);
      out.elaborated.final_expr = elaborated;
      auto res = inf.infer(elaborated);
      out.final_expr = res.term;
      out.final_type = res.type;
    } catch (const CompileError& e) {
      out.diagnostics.push_back(from_error(e, filename));
    }
  }

  for (const auto& w : inf.warnings()) {
    Diagnostic d = w;
    d.file = filename;
    out.diagnostics.push_back(std::move(d));
  }
  return out;
}

}  // namespace elevate
