#include "elevate/eval.hpp"

#include <algorithm>

namespace elevate {

bool is_value(const TermPtr& t) {
  if (!t) return false;
  switch (t->kind) {
    case Term::Kind::Lam:
    case Term::Kind::Fix:
      return true;
    case Term::Kind::LabelApp:
      return is_value(t->a);
    case Term::Kind::Record:
      return std::all_of(t->fields.begin(), t->fields.end(),
                         [](const auto& f) { return is_value(f.second); });
    default:
      return false;
  }
}

namespace {

StepOutcome stepped(TermPtr t, std::string rule) {
  return StepOutcome{StepOutcome::Kind::Stepped, std::move(t), std::move(rule), "", {}};
}

StepOutcome stuck(const std::string& reason, Span sp) {
  return StepOutcome{StepOutcome::Kind::Stuck, nullptr, "", reason, sp};
}

std::string fresh_fix_arg(const TermPtr& v) {
  auto fv = free_vars(v);
  for (int i = 1;; ++i) {
    std::string name = "#fx" + std::to_string(i);
    if (!fv.count(name)) return name;
  }
}

// Steps inside the subterm and rebuilds via `wrap` on success.
template <typename Wrap>
StepOutcome context(const TermPtr& sub, Wrap wrap) {
  StepOutcome inner = step(sub);
  if (inner.kind == StepOutcome::Kind::Stepped) inner.term = wrap(inner.term);
  return inner;
}

// Rebuild a field list with one entry replaced.
std::vector<std::pair<Label, TermPtr>> with_field(
    const std::vector<std::pair<Label, TermPtr>>& fields, size_t i, TermPtr e) {
  auto out = fields;
  out[i].second = std::move(e);
  return out;
}

}  // namespace

StepOutcome step(const TermPtr& t) {
  if (is_value(t)) return StepOutcome{};  // AlreadyValue

  switch (t->kind) {
    case Term::Kind::Var:
      return stuck("free variable '" + t->var + "'", t->span);
    case Term::Kind::Lam:
    case Term::Kind::Fix:
      return StepOutcome{};

    case Term::Kind::App: {
      if (!is_value(t->a))
        return context(t->a, [&](TermPtr e) { return mk_app(e, t->b, t->span); });
      if (!is_value(t->b))
        return context(t->b, [&](TermPtr e) { return mk_app(t->a, e, t->span); });
      if (t->a->kind == Term::Kind::Lam)
        return stepped(subst_term(t->a->a, t->a->var, t->b), "ST-App");
      if (t->a->kind == Term::Kind::Fix) {
        // fix v ~> v (lam x = fix v x)
        const TermPtr& v = t->b;
        std::string x = fresh_fix_arg(v);
        auto unrolled = mk_app(
            v, mk_lam(x, mk_app(mk_app(mk_fix(), v), mk_var(x)), t->span), t->span);
        return stepped(unrolled, "ST-Fix");
      }
      return stuck("application of a non-function value", t->span);
    }

    case Term::Kind::Let: {
      if (!is_value(t->a))
        return context(t->a, [&](TermPtr e) { return mk_let(t->var, e, t->b, t->span); });
      return stepped(subst_term(t->b, t->var, t->a), "ST-Let");
    }

    case Term::Kind::LabelApp:
      return context(t->a, [&](TermPtr e) { return mk_label(t->label, e, t->span); });

    case Term::Kind::Record: {
      for (size_t i = 0; i < t->fields.size(); ++i) {
        if (!is_value(t->fields[i].second))
          return context(t->fields[i].second, [&](TermPtr e) {
            return mk_record(with_field(t->fields, i, std::move(e)), t->span);
          });
      }
      return StepOutcome{};
    }

    case Term::Kind::FieldAccess: {
      if (!is_value(t->a))
        return context(t->a, [&](TermPtr e) { return mk_field_access(e, t->label, t->span); });
      if (t->a->kind != Term::Kind::Record)
        return stuck("field access on a non-record value", t->span);
      for (const auto& [l, v] : t->a->fields)
        if (l == t->label) return stepped(v, "ST-FieldAccess");
      return stuck("field access on an absent label '" + t->label + "'", t->span);
    }

    case Term::Kind::FieldRemove: {
      if (!is_value(t->a))
        return context(t->a, [&](TermPtr e) { return mk_field_remove(e, t->label, t->span); });
      if (t->a->kind != Term::Kind::Record)
        return stuck("field removal on a non-record value", t->span);
      std::vector<std::pair<Label, TermPtr>> fields;
      bool found = false;
      for (const auto& [l, v] : t->a->fields) {
        if (l == t->label)
          found = true;
        else
          fields.emplace_back(l, v);
      }
      if (!found) return stuck("removal of an absent label '" + t->label + "'", t->span);
      return stepped(mk_record(std::move(fields), t->span), "ST-FieldDel");
    }

    case Term::Kind::RecordMod:
    case Term::Kind::RecordExt: {
      bool ext = t->kind == Term::Kind::RecordExt;
      if (!is_value(t->a))
        return context(t->a, [&](TermPtr e) {
          return ext ? mk_record_ext(e, t->fields, t->span) : mk_record_mod(e, t->fields, t->span);
        });
      for (size_t i = 0; i < t->fields.size(); ++i) {
        if (!is_value(t->fields[i].second))
          return context(t->fields[i].second, [&](TermPtr e) {
            auto fs = with_field(t->fields, i, std::move(e));
            return ext ? mk_record_ext(t->a, std::move(fs), t->span)
                       : mk_record_mod(t->a, std::move(fs), t->span);
          });
      }
      if (t->a->kind != Term::Kind::Record)
        return stuck("record operation on a non-record value", t->span);
      auto fields = t->a->fields;
      if (!ext) {
        // modification overwrites existing labels only
        for (const auto& [l, v] : t->fields) {
          auto it = std::find_if(fields.begin(), fields.end(),
                                 [&](const auto& f) { return f.first == l; });
          if (it == fields.end())
            return stuck("modification of an absent label '" + l + "'", t->span);
          it->second = v;
        }
        return stepped(mk_record(std::move(fields), t->span), "ST-RecordMod");
      }
      // extension adds absent labels only
      for (const auto& [l, v] : t->fields) {
        auto it = std::find_if(fields.begin(), fields.end(),
                               [&](const auto& f) { return f.first == l; });
        if (it != fields.end())
          return stuck("extension with an existing label '" + l + "'", t->span);
        fields.emplace_back(l, v);
      }
      return stepped(mk_record(std::move(fields), t->span), "ST-RecordExt");
    }

    case Term::Kind::Match: {
      if (!is_value(t->a))
        return context(t->a, [&](TermPtr e) { return mk_match(e, t->branches, t->span); });
      if (t->branches.empty()) return stuck("value reached the void match", t->span);
      if (t->branches.size() == 1) {
        const auto& p = t->branches[0].pattern;
        if (p->kind == Pattern::Kind::Record && p->fields.empty()) {
          if (t->a->kind == Term::Kind::Record && t->a->fields.empty())
            return stepped(t->branches[0].rhs, "ST-Match-Unit");
          return stuck("unit match against a non-empty value", t->span);
        }
        return stuck("match is not in core form", t->span);
      }
      const auto& lb = t->branches[0];
      const auto& db = t->branches[1];
      if (t->branches.size() != 2 || lb.pattern->kind != Pattern::Kind::Lab ||
          !lb.pattern->payload || lb.pattern->payload->kind != Pattern::Kind::Var ||
          db.pattern->kind != Pattern::Kind::Var)
        return stuck("match is not in core form", t->span);
      if (t->a->kind != Term::Kind::LabelApp)
        return stuck("label match against a non-variant value", t->span);
      if (t->a->label == lb.pattern->label)
        return stepped(subst_term(lb.rhs, lb.pattern->payload->var, t->a->a), "ST-Match-Match");
      return stepped(subst_term(db.rhs, db.pattern->var, t->a), "ST-Match-Skip");
    }
  }
  return stuck("no rule applies", t->span);
}

EvalResult eval(TermPtr t, long fuel) {
  EvalResult out;
  for (long i = 0; i < fuel; ++i) {
    StepOutcome s = step(t);
    switch (s.kind) {
      case StepOutcome::Kind::AlreadyValue:
        out.kind = EvalResult::Kind::Value;
        out.term = t;
        return out;
      case StepOutcome::Kind::Stuck:
        out.kind = EvalResult::Kind::Stuck;
        out.term = t;
        out.reason = s.reason;
        return out;
      case StepOutcome::Kind::Stepped:
        out.rule_counts[s.rule]++;
        out.steps++;
        t = s.term;
        break;
    }
  }
  out.kind = EvalResult::Kind::FuelExhausted;
  out.term = t;
  return out;
}

}  // namespace elevate
