#include "elevate/elaborate.hpp"

#include <algorithm>
#include <cassert>

#include "elevate/pretty.hpp"

namespace elevate {

TermPtr access_term(const FieldAccessForm& d) {
  TermPtr t = mk_var(d.root);
  if (d.sel) t = mk_field_access(t, *d.sel);
  if (d.unit_mod) t = mk_record_mod(t, {});
  return t;
}

TermPtr pattern_as_term(const SimplePattern& p) {
  switch (p.kind) {
    case SimplePattern::Kind::Var: return mk_var(p.var);
    case SimplePattern::Kind::BareLabel: return mk_label(p.label, mk_unit());
    case SimplePattern::Kind::LabelVar: return mk_label(p.label, mk_var(p.var));
  }
  return nullptr;
}

ChainPtr chain_leaf(TermPtr rhs) {
  auto c = std::make_shared<MatchChain>();
  c->leaf = true;
  c->rhs = std::move(rhs);
  return c;
}

ChainPtr chain_node(MatchId id, FieldAccessForm subject,
                    std::vector<std::pair<SimplePattern, ChainPtr>> branches) {
  auto c = std::make_shared<MatchChain>();
  c->id = std::move(id);
  c->subject = std::move(subject);
  c->branches = std::move(branches);
  return c;
}

int RhsLedger::fresh(Span sp, int branch) {
  int id = next_id++;
  counts[id] = 1;
  spans[id] = sp;
  branch_index[id] = branch;
  return id;
}

void RhsLedger::add(int id, long delta) {
  auto it = counts.find(id);
  if (it != counts.end()) it->second += delta;
}

namespace {

void count_tags_term(const TermPtr& t, std::map<int, long>& out) {
  if (!t) return;
  if (t->rhs_id >= 0) out[t->rhs_id]++;
  count_tags_term(t->a, out);
  count_tags_term(t->b, out);
  for (const auto& [l, e] : t->fields) count_tags_term(e, out);
  for (const auto& br : t->branches) count_tags_term(br.rhs, out);
}

void count_tags_chain(const ChainPtr& c, std::map<int, long>& out) {
  if (!c) return;
  if (c->leaf) {
    count_tags_term(c->rhs, out);
    return;
  }
  for (const auto& [p, sub] : c->branches) count_tags_chain(sub, out);
}

}  // namespace

std::map<int, long> count_rhs_tags(const TermPtr& t) {
  std::map<int, long> out;
  count_tags_term(t, out);
  return out;
}

std::map<int, long> count_rhs_tags(const ChainPtr& c) {
  std::map<int, long> out;
  count_tags_chain(c, out);
  return out;
}

// ---------------------------------------------------------------------------
// linearity

namespace {
void collect_pattern_vars(const PatternPtr& p, std::vector<std::pair<std::string, Span>>& out) {
  if (!p) return;
  switch (p->kind) {
    case Pattern::Kind::Var: out.emplace_back(p->var, p->span); break;
    case Pattern::Kind::Lab: collect_pattern_vars(p->payload, out); break;
    case Pattern::Kind::Record:
      for (const auto& [l, q] : p->fields) collect_pattern_vars(q, out);
      break;
  }
}
}  // namespace

void Elaborator::linearity_check(const PatternPtr& p) {
  std::vector<std::pair<std::string, Span>> vars;
  collect_pattern_vars(p, vars);
  std::map<std::string, Span> seen;
  for (const auto& [v, sp] : vars) {
    auto it = seen.find(v);
    if (it != seen.end())
      throw CompileError(codes::nonlinear,
                         "variable '" + v + "' occurs twice in one pattern", sp,
                         {"first occurrence at " + it->second.to_string()});
    seen.emplace(v, sp);
  }
}

// ---------------------------------------------------------------------------
// pattern expansion

namespace {

// Every chain produced by pat_expn is linear and ends in exactly one leaf.
ChainPtr replace_only_leaf(const ChainPtr& c, const ChainPtr& replacement) {
  if (c->leaf) return replacement;
  assert(c->branches.size() == 1);
  auto sub = replace_only_leaf(c->branches[0].second, replacement);
  return chain_node(c->id, c->subject, {{c->branches[0].first, sub}});
}

}  // namespace

ChainPtr Elaborator::pat_expn(int rhs_id, MatchId id, const std::string& root,
                              FieldAccessForm subject, const PatternPtr& pat, TermPtr rhs) {
  auto leaf_here = [&] { return chain_leaf(with_rhs_id(rhs, rhs_id)); };
  switch (pat->kind) {
    case Pattern::Kind::Var:
      return chain_node(id, subject, {{SimplePattern::mk_var(pat->var), leaf_here()}});
    case Pattern::Kind::Lab: {
      if (!pat->payload)
        return chain_node(id, subject, {{SimplePattern::bare(pat->label), leaf_here()}});
      if (pat->payload->kind == Pattern::Kind::Var)
        return chain_node(
            id, subject,
            {{SimplePattern::label_var(pat->label, pat->payload->var), leaf_here()}});
      // nested pattern under a label: bind a fresh payload variable and recurse
      std::string x = fresh_payload_var();
      MatchId inner = id;
      inner.push_back(0);
      auto sub = pat_expn(rhs_id, inner, x, FieldAccessForm{x, {}, false}, pat->payload, rhs);
      return chain_node(id, subject, {{SimplePattern::label_var(pat->label, x), sub}});
    }
    case Pattern::Kind::Record: {
      if (pat->fields.empty()) {
        // {} matches every record: an empty record modification on the
        // subject followed by a throwaway variable
        FieldAccessForm d = subject;
        d.unit_mod = true;
        return chain_node(id, d, {{SimplePattern::mk_var(fresh_unit_var()), leaf_here()}});
      }
      bool on_root = subject.root == root && !subject.sel && !subject.unit_mod;
      if (on_root) {
        if (pat->fields.size() == 1) {
          const auto& [l, q] = pat->fields[0];
          return pat_expn(rhs_id, id, root, FieldAccessForm{root, l, false}, q, rhs);
        }
        // expand the first field with a placeholder continuation, then splice
        // the expansion of the remaining fields into its leaf
        const auto& [l, q] = pat->fields[0];
        auto first = pat_expn(rhs_id, id, root, FieldAccessForm{root, l, false}, q, rhs);
        MatchId next = id;
        next.back() += 1;
        auto rest_pat = pat_record(
            std::vector<std::pair<Label, PatternPtr>>(pat->fields.begin() + 1, pat->fields.end()),
            pat->span);
        auto rest = pat_expn(rhs_id, next, root, FieldAccessForm{root, {}, false}, rest_pat, rhs);
        return replace_only_leaf(first, rest);
      }
      // a record pattern over a general subject: re-root it at a fresh
      // variable bound through the .{} access
      std::string x = fresh_payload_var();
      FieldAccessForm d = subject;
      d.unit_mod = true;
      MatchId inner = id;
      inner.push_back(0);
      auto sub = pat_expn(rhs_id, inner, x, FieldAccessForm{x, {}, false}, pat, rhs);
      return chain_node(id, d, {{SimplePattern::mk_var(x), sub}});
    }
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// sort: label tests keep their match-id order, matches binding user variables
// move after them. This reproduces the elaborated cascades of the reference
// examples while preserving the conjunctive semantics of a single branch.

namespace {

bool is_user_binding(const MatchChain& n) {
  return n.branches.size() == 1 && n.branches[0].first.kind == SimplePattern::Kind::Var &&
         !n.branches[0].first.var.empty() && n.branches[0].first.var[0] != '#';
}

}  // namespace

ChainPtr Elaborator::sort_chain(const ChainPtr& c) {
  std::vector<const MatchChain*> nodes;
  const MatchChain* cur = c.get();
  while (cur && !cur->leaf) {
    if (cur->branches.size() != 1) return c;  // only linear chains are sorted
    nodes.push_back(cur);
    cur = cur->branches[0].second.get();
  }
  if (!cur) return c;
  const MatchChain* leaf = cur;

  std::vector<const MatchChain*> tests, binds;
  for (const auto* n : nodes)
    (is_user_binding(*n) ? binds : tests).push_back(n);

  ChainPtr out = chain_leaf(leaf->rhs);
  auto prepend = [&](const MatchChain* n) {
    out = chain_node(n->id, n->subject, {{n->branches[0].first, out}});
  };
  for (auto it = binds.rbegin(); it != binds.rend(); ++it) prepend(*it);
  for (auto it = tests.rbegin(); it != tests.rend(); ++it) prepend(*it);
  return out;
}

// ---------------------------------------------------------------------------
// merging

ChainPtr Elaborator::subst_chain(const ChainPtr& c, const std::string& var,
                                 const SimplePattern& p) {
  if (c->leaf) return chain_leaf(subst_term(c->rhs, var, pattern_as_term(p)));
  FieldAccessForm subj = c->subject;
  if (subj.root == var) {
    // subjects can only be re-rooted at another variable
    if (p.kind != SimplePattern::Kind::Var)
      throw std::logic_error("match chain subject substituted with a non-variable");
    subj.root = p.var;
  }
  std::vector<std::pair<SimplePattern, ChainPtr>> bs;
  for (const auto& [pi, sub] : c->branches) {
    bool shadows = (pi.kind != SimplePattern::Kind::BareLabel) && pi.var == var;
    bs.emplace_back(pi, shadows ? sub : subst_chain(sub, var, p));
  }
  return chain_node(c->id, subj, std::move(bs));
}

ChainPtr Elaborator::merge(const ChainPtr& a, const ChainPtr& b) {
  // a leaf on the left absorbs the right chain entirely
  if (a->leaf) {
    for (const auto& [id, n] : count_rhs_tags(b)) ledger_.add(id, -n);
    return a;
  }

  bool aligned = !b->leaf && a->id.size() == b->id.size() && a->subject == b->subject;
  if (!aligned) {
    // re-root b under a fresh variable branch over a's own subject
    auto wrapped = chain_node(a->id, a->subject, {{SimplePattern::mk_var(fresh_payload_var()), b}});
    return merge(a, wrapped);
  }

  assert(b->branches.size() == 1);
  const auto& [bp, bc] = b->branches[0];

  bool a_has_var = !a->branches.empty() &&
                   a->branches.back().first.kind == SimplePattern::Kind::Var;

  if (bp.kind == SimplePattern::Kind::Var) {
    // b's variable branch merges into every branch of a; each copy duplicates
    // b's RHS occurrences
    std::vector<std::pair<SimplePattern, ChainPtr>> bs;
    auto occ = count_rhs_tags(bc);
    size_t copies = a->branches.size() + (a_has_var ? 0 : 1);
    for (const auto& [id, n] : occ) ledger_.add(id, static_cast<long>(copies - 1) * n);
    for (const auto& [pi, ci] : a->branches)
      bs.emplace_back(pi, merge(ci, subst_chain(bc, bp.var, pi)));
    if (!a_has_var) bs.emplace_back(bp, bc);
    return chain_node(a->id, a->subject, std::move(bs));
  }

  // b carries a label branch; look for the same label in the same form
  for (size_t i = 0; i < a->branches.size(); ++i) {
    const auto& [pi, ci] = a->branches[i];
    if (pi.kind != bp.kind || pi.label != bp.label) continue;
    auto bs = a->branches;
    if (bp.kind == SimplePattern::Kind::LabelVar)
      bs[i].second = merge(ci, subst_chain(bc, bp.var, SimplePattern::mk_var(pi.var)));
    else
      bs[i].second = merge(ci, bc);
    return chain_node(a->id, a->subject, std::move(bs));
  }

  if (a_has_var) {
    // push b beneath a's default branch, re-rooted at the default variable
    auto bs = a->branches;
    auto& [xa, ca] = bs.back();
    auto pushed = chain_node(b->id, FieldAccessForm{xa.var, {}, false}, {{bp, bc}});
    bs.back().second = merge(ca, pushed);
    return chain_node(a->id, a->subject, std::move(bs));
  }

  // unmatched label: append b's branch
  auto bs = a->branches;
  bs.emplace_back(bp, bc);
  return chain_node(a->id, a->subject, std::move(bs));
}

// ---------------------------------------------------------------------------
// refining

ChainPtr Elaborator::refine(std::vector<std::pair<std::string, TermPtr>> subst, const ChainPtr& c) {
  if (c->leaf) {
    TermPtr rhs = c->rhs;
    for (const auto& [v, rep] : subst) rhs = subst_term(rhs, v, rep);
    return chain_leaf(rhs);
  }
  std::vector<std::pair<SimplePattern, ChainPtr>> bs;
  for (const auto& [p, sub] : c->branches) {
    auto extended = subst;
    const auto& d = c->subject;
    if (!d.sel) {
      extended.emplace_back(d.root, pattern_as_term(p));
    } else {
      // x.l or x.l.{}: in this branch x's field l is known to be the pattern
      auto refined = mk_record_ext(mk_field_remove(mk_var(d.root), *d.sel),
                                   {{*d.sel, pattern_as_term(p)}});
      extended.emplace_back(d.root, refined);
    }
    bs.emplace_back(p, refine(std::move(extended), sub));
  }
  return chain_node(c->id, c->subject, std::move(bs));
}

// ---------------------------------------------------------------------------
// desugaring to core matches

TermPtr Elaborator::desugar(const ChainPtr& c) {
  if (c->leaf) return c->rhs;
  if (c->branches.empty()) return mk_match(access_term(c->subject), {});

  const auto& [p, sub] = c->branches.front();
  if (p.kind == SimplePattern::Kind::Var) {
    assert(c->branches.size() == 1);
    return mk_let(p.var, access_term(c->subject), desugar(sub));
  }

  auto rest_of = [&](const std::string& r) {
    std::vector<std::pair<SimplePattern, ChainPtr>> rest(c->branches.begin() + 1,
                                                         c->branches.end());
    return desugar(chain_node(c->id, FieldAccessForm{r, {}, false}, std::move(rest)));
  };

  std::string r = fresh_rest_var();
  if (p.kind == SimplePattern::Kind::LabelVar) {
    return mk_match(access_term(c->subject),
                    {Branch{pat_label(p.label, pat_var(p.var)), desugar(sub)},
                     Branch{pat_var(r), rest_of(r)}});
  }
  // bare label: the payload is immediately matched against the empty record
  std::string u = fresh_unit_var();
  auto unit_match = mk_match(mk_var(u), {Branch{pat_record({}), desugar(sub)}});
  return mk_match(access_term(c->subject),
                  {Branch{pat_label(p.label, pat_var(u)), unit_match},
                   Branch{pat_var(r), rest_of(r)}});
}

// ---------------------------------------------------------------------------
// the pipeline

TermPtr Elaborator::pat_elab(const TermPtr& m) {
  assert(m->kind == Term::Kind::Match);
  if (m->branches.empty()) return m;  // the void match is already core

  TermPtr subject = m->a;
  if (subject->kind != Term::Kind::Var) {
    std::string s = fresh_subject_var();
    auto inner = pat_elab(mk_match(mk_var(s, subject->span), m->branches, m->span));
    return mk_let(s, subject, inner, m->span);
  }
  const std::string& x = subject->var;

  std::vector<int> ids;
  ChainPtr folded;
  for (size_t i = 0; i < m->branches.size(); ++i) {
    const auto& br = m->branches[i];
    linearity_check(br.pattern);
    Span sp = br.pattern->span.known() ? br.pattern->span : m->span;
    int id = ledger_.fresh(sp, static_cast<int>(i) + 1);
    ids.push_back(id);
    assert(br.rhs->rhs_id < 0);
    auto chain = sort_chain(
        pat_expn(id, MatchId{0}, x, FieldAccessForm{x, {}, false}, br.pattern, br.rhs));
    folded = folded ? merge(folded, chain) : chain;
  }

  auto refined = refine({{x, mk_var(x)}}, folded);
  auto core = desugar(refined);

  std::vector<std::string> dead;
  for (int id : ids)
    if (ledger_.counts.at(id) <= 0)
      dead.push_back("branch " + std::to_string(ledger_.branch_index.at(id)) + " at " +
                     ledger_.spans.at(id).to_string());
  if (!dead.empty())
    throw CompileError(codes::redundant, "redundant patterns: every occurrence of the branch was removed",
                       ledger_.spans.at(ids[0]), dead);
  return core;
}

TermPtr Elaborator::elaborate_term(const TermPtr& t) {
  if (!t) return t;
  switch (t->kind) {
    case Term::Kind::Var:
    case Term::Kind::Fix:
      return t;
    case Term::Kind::App:
      return mk_app(elaborate_term(t->a), elaborate_term(t->b), t->span);
    case Term::Kind::Lam:
      return mk_lam(t->var, elaborate_term(t->a), t->span);
    case Term::Kind::Let:
      return mk_let(t->var, elaborate_term(t->a), elaborate_term(t->b), t->span);
    case Term::Kind::LabelApp:
      return mk_label(t->label, elaborate_term(t->a), t->span);
    case Term::Kind::FieldAccess:
      return mk_field_access(elaborate_term(t->a), t->label, t->span);
    case Term::Kind::FieldRemove:
      return mk_field_remove(elaborate_term(t->a), t->label, t->span);
    case Term::Kind::Record:
    case Term::Kind::RecordMod:
    case Term::Kind::RecordExt: {
      std::vector<std::pair<Label, TermPtr>> fs;
      for (const auto& [l, e] : t->fields) fs.emplace_back(l, elaborate_term(e));
      if (t->kind == Term::Kind::Record) return mk_record(std::move(fs), t->span);
      auto subj = elaborate_term(t->a);
      return t->kind == Term::Kind::RecordMod ? mk_record_mod(subj, std::move(fs), t->span)
                                              : mk_record_ext(subj, std::move(fs), t->span);
    }
    case Term::Kind::Match: {
      auto subject = elaborate_term(t->a);
      std::vector<Branch> bs;
      for (const auto& br : t->branches) bs.push_back(Branch{br.pattern, elaborate_term(br.rhs)});
      return pat_elab(mk_match(subject, std::move(bs), t->span));
    }
  }
  return t;
}

Program elaborate_program(const Program& p, RhsLedger& ledger) {
  Elaborator el(ledger);
  Program out;
  out.decls = p.decls;
  for (auto& d : out.decls)
    if (d.kind == Decl::Kind::Let) d.let.value = el.elaborate_term(d.let.value);
  if (p.final_expr) out.final_expr = el.elaborate_term(p.final_expr);
  return out;
}

}  // namespace elevate
