#include <doctest.h>

#include "elevate/elaborate.hpp"
#include "elevate/eval.hpp"
#include "elevate/parser.hpp"
#include "elevate/pretty.hpp"
#include "testutil.hpp"

using namespace elevate;
using namespace elevate::testing;

namespace {

TermPtr elaborate_one(const std::string& source, RhsLedger& ledger) {
  Elaborator el(ledger);
  return el.elaborate_term(parse_term(source));
}

TermPtr elaborate_one(const std::string& source) {
  RhsLedger ledger;
  return elaborate_one(source, ledger);
}

}  // namespace

TEST_CASE("linearity check") {
  Elaborator::linearity_check(parse_term("match s with <{A: x | B: y} => x>")->branches[0].pattern);
  CHECK_THROWS_AS(Elaborator::linearity_check(
                      parse_term("match s with <{A: x | B: x} => x>")->branches[0].pattern),
                  CompileError);
  CHECK_THROWS_WITH_AS(
      Elaborator::linearity_check(
          parse_term("match s with <App {Fun: g | Arg: g} => g>")->branches[0].pattern),
      doctest::Contains("'g'"), CompileError);
}

TEST_CASE("a single variable branch becomes a let") {
  auto t = elaborate_one("lam x = match x with <y => y>");
  REQUIRE(t->kind == Term::Kind::Lam);
  REQUIRE(t->a->kind == Term::Kind::Let);
  CHECK(t->a->var == "y");
}

TEST_CASE("a variable branch absorbs later branches: redundant patterns") {
  RhsLedger ledger;
  CHECK_THROWS_WITH_AS(elaborate_one("lam x = match x with <y => y | A => x>", ledger),
                       doctest::Contains("redundant"), CompileError);
}

TEST_CASE("merge keeps the first RHS when branches coincide") {
  RhsLedger ledger;
  CHECK_THROWS_AS(elaborate_one("lam x = match x with <A => One | A => Two>", ledger),
                  CompileError);  // the second A-branch is unreachable
}

TEST_CASE("two branches on the same label merge; the second is unreachable") {
  RhsLedger ledger;
  CHECK_THROWS_AS(elaborate_one("lam x = match x with <A y => y | A z => z>", ledger),
                  CompileError);
}

TEST_CASE("merge of a label branch and a default keeps both") {
  auto t = elaborate_one("lam x = match x with <A y => y | z => z>");
  // match x with <A y => y | #r => let z = #r in z>
  REQUIRE(t->a->kind == Term::Kind::Match);
  REQUIRE(t->a->branches.size() == 2);
  CHECK(t->a->branches[0].pattern->kind == Pattern::Kind::Lab);
  CHECK(t->a->branches[1].rhs->kind == Term::Kind::Let);
}

TEST_CASE("merge distributes the default under every label branch") {
  auto t = elaborate_one("lam x = match x with <A {F: u} => u | z => x>");
  // the default RHS x must be reachable both when the label differs and when
  // the nested field pattern cannot bind (it always binds, being a variable)
  auto result = eval(mk_app(t, mk_label("B", mk_unit())), 1000);
  REQUIRE(result.kind == EvalResult::Kind::Value);
  CHECK(term_equal(result.term, mk_label("B", mk_unit())));
}

TEST_CASE("non-variable subjects are let-bound before elaboration") {
  auto t = elaborate_one("match f x with <A => {} | y => {}>");
  REQUIRE(t->kind == Term::Kind::Let);
  CHECK(t->a->kind == Term::Kind::App);
}

TEST_CASE("elaborated output contains only simple patterns") {
  for (const char* src : {
           "lam x = match x with <App {Fun: App {Fun: Primitive Map | Arg: g} | Arg: xs} => g>",
           "lam x = match x with <A (B (C y)) => y | z => z>",
           "lam x = match x with <{F: {G: a}} => a>",
           "lam x = match x with <A => {} | B => {} | C y => y | w => w>",
       }) {
    auto t = elaborate_one(src);
    CHECK_MESSAGE(is_core_term(t), src);
  }
}

TEST_CASE("fresh names come from the reserved namespace and never capture") {
  auto t = elaborate_one("lam x = match x with <App {Fun: f | Arg: a} => f a>");
  CHECK(is_core_term(t));
  // evaluate: the user variables f and a must see the right fields
  auto arg = mk_label("App", mk_record({{"Fun", mk_lam("q", mk_var("q"))},
                                        {"Arg", mk_label("D", mk_unit())}}));
  auto result = eval(mk_app(t, arg), 1000);
  REQUIRE(result.kind == EvalResult::Kind::Value);
  CHECK(term_equal(result.term, mk_label("D", mk_unit())));
}

TEST_CASE("ledger conservation: final counts equal tag occurrences") {
  RhsLedger ledger;
  auto t = elaborate_one(
      "lam x = match x with <App {Fun: g | Arg: h} => g | B => x | z => z>", ledger);
  auto tags = count_rhs_tags(t);
  for (const auto& [id, count] : ledger.counts) {
    long in_term = tags.count(id) ? tags.at(id) : 0;
    CHECK_MESSAGE(count == in_term, "rhs id ", id);
  }
}

TEST_CASE("sort keeps label tests in match-id order ahead of user bindings") {
  // the nested pattern tests A and then C before binding u and v
  auto t = elaborate_one("lam x = match x with <A {F: u | G: C v} => u>");
  // walk the chain: subjects in order must be x, #?.G-test..., then lets
  std::vector<Term::Kind> kinds;
  TermPtr cur = t->a;
  while (cur) {
    kinds.push_back(cur->kind);
    if (cur->kind == Term::Kind::Match && !cur->branches.empty())
      cur = cur->branches[0].rhs;
    else if (cur->kind == Term::Kind::Let)
      cur = cur->b;
    else
      break;
  }
  // all matches precede all lets in the happy path
  bool seen_let = false;
  for (auto k : kinds) {
    if (k == Term::Kind::Let) seen_let = true;
    if (seen_let && k == Term::Kind::Match) FAIL("a label test followed a binding");
  }
}

TEST_CASE("reference matcher and elaborated evaluation agree on random cases") {
  Rng rng(20240817);
  int agreed = 0;
  for (int i = 0; i < 300; ++i) {
    int vc = 0;
    auto pat = gen_pattern(rng, 4, vc);
    auto value = rng.chance(0.5) ? gen_conforming_value(rng, pat, 2)
                                 : mutate_value(rng, gen_conforming_value(rng, pat, 2));

    // match v with <pat => Found {..bindings..} | z => NoMatch>
    std::vector<std::pair<std::string, Span>> vars;
    std::vector<std::pair<Label, TermPtr>> found_fields;
    {
      // collect pattern variables through the reference matcher on a
      // conforming instance (same binder set for any matching value)
      std::map<std::string, TermPtr> names;
      auto probe = ref_match(pat, gen_conforming_value(rng, pat, 1));
      REQUIRE(probe.has_value());
      int k = 0;
      for (const auto& [name, unused] : *probe)
        found_fields.emplace_back("V" + std::to_string(k++), mk_var(name));
    }
    auto body = mk_match(mk_var("s"), {Branch{pat, mk_label("Found", mk_record(found_fields))},
                                       Branch{pat_var("zz"), mk_label("NoMatch", mk_unit())}});
    auto term = mk_app(mk_lam("s", body), value);

    RhsLedger ledger;
    Elaborator el(ledger);
    TermPtr core;
    try {
      core = el.elaborate_term(term);
    } catch (const CompileError&) {
      continue;  // e.g. a nonlinear generated pattern
    }
    TypeStore store;
    Inferencer inf(store, &ledger);
    try {
      inf.infer(core);
    } catch (const CompileError&) {
      continue;  // shape-incompatible pattern/value pairs are not exercised
    }

    auto result = eval(core, 20000);
    REQUIRE(result.kind == EvalResult::Kind::Value);

    auto expected = ref_match(pat, value);
    if (expected) {
      REQUIRE(result.term->kind == Term::Kind::LabelApp);
      CHECK(result.term->label == "Found");
      int k = 0;
      for (const auto& [name, bound] : *expected) {
        const auto& fields = result.term->a->fields;
        REQUIRE(k < static_cast<int>(fields.size()));
        CHECK_MESSAGE(term_equal(fields[k].second, bound), "binding of ", name);
        ++k;
      }
    } else {
      CHECK(result.term->label == "NoMatch");
    }
    ++agreed;
  }
  CHECK(agreed >= 150);  // the acceptance suite runs the full 1000
}

TEST_CASE("pat_expn: a variable branch is a single node") {
  RhsLedger ledger;
  Elaborator el(ledger);
  int id = ledger.fresh({}, 1);
  auto chain = el.pat_expn(id, {0}, "s", FieldAccessForm{"s", {}, false},
                           pat_var("x"), mk_var("e"));
  REQUIRE_FALSE(chain->leaf);
  CHECK(chain->subject == FieldAccessForm{"s", {}, false});
  REQUIRE(chain->branches.size() == 1);
  CHECK(chain->branches[0].first.kind == SimplePattern::Kind::Var);
  CHECK(chain->branches[0].second->leaf);
}

TEST_CASE("pat_expn: a bare label keeps the bare simple pattern") {
  RhsLedger ledger;
  Elaborator el(ledger);
  int id = ledger.fresh({}, 1);
  auto chain = el.pat_expn(id, {0}, "s", FieldAccessForm{"s", {}, false},
                           pat_label("A", nullptr), mk_var("e"));
  REQUIRE(chain->branches.size() == 1);
  CHECK(chain->branches[0].first.kind == SimplePattern::Kind::BareLabel);
  CHECK(chain->branches[0].first.label == "A");
}

TEST_CASE("merge: a leaf absorbs the right chain, tracing the removal") {
  RhsLedger ledger;
  Elaborator el(ledger);
  int id1 = ledger.fresh({}, 1);
  int id2 = ledger.fresh({}, 2);
  auto leaf = chain_leaf(with_rhs_id(mk_var("e1"), id1));
  auto other = chain_node({0}, FieldAccessForm{"s", {}, false},
                          {{SimplePattern::bare("A"), chain_leaf(with_rhs_id(mk_var("e2"), id2))}});
  auto merged = el.merge(leaf, other);
  CHECK(merged->leaf);
  CHECK(ledger.counts.at(id2) == 0);
  CHECK(ledger.counts.at(id1) == 1);
}

TEST_CASE("merge: first branch wins, the variable default is appended") {
  RhsLedger ledger;
  Elaborator el(ledger);
  int id1 = ledger.fresh({}, 1);
  int id2 = ledger.fresh({}, 2);
  auto a = chain_node({0}, FieldAccessForm{"x", {}, false},
                      {{SimplePattern::label_var("A", "x1"),
                        chain_leaf(with_rhs_id(mk_var("e1"), id1))}});
  auto b = chain_node({0}, FieldAccessForm{"x", {}, false},
                      {{SimplePattern::mk_var("y"), chain_leaf(with_rhs_id(mk_var("e2"), id2))}});
  auto merged = el.merge(a, b);
  REQUIRE(merged->branches.size() == 2);
  CHECK(merged->branches[0].first.label == "A");
  CHECK(merged->branches[0].second->leaf);
  CHECK(term_equal(merged->branches[0].second->rhs, mk_var("e1")));
  CHECK(merged->branches[1].first.kind == SimplePattern::Kind::Var);
  // e2 was duplicated under A and immediately removed there
  CHECK(ledger.counts.at(id2) == 1);
}

TEST_CASE("refine rewrites subject occurrences in the RHS") {
  RhsLedger ledger;
  Elaborator el(ledger);
  int id = ledger.fresh({}, 1);
  // node on x.F with branch (A y => leaf x): the leaf sees x.-F.+{F: A y}
  auto chain = chain_node({0}, FieldAccessForm{"x", Label("F"), false},
                          {{SimplePattern::label_var("A", "y"),
                            chain_leaf(with_rhs_id(mk_var("x"), id))}});
  auto refined = el.refine({{"x", mk_var("x")}}, chain);
  const auto& leaf = refined->branches[0].second;
  REQUIRE(leaf->leaf);
  CHECK(term_equal(leaf->rhs,
                   mk_record_ext(mk_field_remove(mk_var("x"), "F"),
                                 {{"F", mk_label("A", mk_var("y"))}})));
}

TEST_CASE("desugar: a lone label branch forces the void remainder") {
  RhsLedger ledger;
  Elaborator el(ledger);
  int id = ledger.fresh({}, 1);
  auto chain = chain_node({0}, FieldAccessForm{"s", {}, false},
                          {{SimplePattern::label_var("A", "x"),
                            chain_leaf(with_rhs_id(mk_var("e"), id))}});
  auto core = el.desugar(chain);
  REQUIRE(core->kind == Term::Kind::Match);
  REQUIRE(core->branches.size() == 2);
  CHECK(core->branches[0].pattern->label == "A");
  const auto& rest = core->branches[1].rhs;
  REQUIRE(rest->kind == Term::Kind::Match);
  CHECK(rest->branches.empty());
}

TEST_CASE("refined subjects preserve evaluation results") {
  // the RHS mentions the subject; refinement rewrites it to the matched shape
  RhsLedger ledger;
  Elaborator el(ledger);
  auto t = el.elaborate_term(parse_term("lam x = match x with <A y => x | z => z>"));
  auto r1 = eval(mk_app(t, parse_term("A (B {})")), 1000);
  REQUIRE(r1.kind == EvalResult::Kind::Value);
  CHECK(term_equal(r1.term, parse_term("A (B {})")));
  auto r2 = eval(mk_app(t, parse_term("C {}")), 1000);
  REQUIRE(r2.kind == EvalResult::Kind::Value);
  CHECK(term_equal(r2.term, parse_term("C {}")));
}

TEST_CASE("multi-branch matches take the first matching branch, like the reference") {
  Rng rng(777001);
  int agreed = 0;
  for (int round = 0; round < 2500 && agreed < 300; ++round) {
    int vc = 0;
    int nbranches = 2 + rng.below(2);
    std::vector<Branch> branches;
    for (int i = 0; i < nbranches; ++i) {
      // distinct top labels keep the branches from shadowing each other
      auto pat = pat_label(label_universe()[(rng.below(2) + 2 * i) % 5],
                           gen_pattern(rng, 2, vc));
      std::vector<std::pair<Label, TermPtr>> fields;
      auto probe = ref_match(pat, gen_conforming_value(rng, pat, 1));
      if (!probe) continue;
      int k = 0;
      for (const auto& [name, unused] : *probe)
        fields.emplace_back("V" + std::to_string(k++), mk_var(name));
      branches.push_back(
          Branch{pat, mk_label("R" + std::to_string(i), mk_record(fields))});
    }
    if (branches.size() < 2) continue;
    branches.push_back(Branch{pat_var("dflt"), mk_label("Rdefault", mk_unit())});

    // a value conforming to one of the patterns, possibly mutated
    int pick = rng.below(static_cast<int>(branches.size()) - 1);
    auto value = gen_conforming_value(rng, branches[pick].pattern, 2);
    if (rng.chance(0.4)) value = mutate_value(rng, value);

    auto term = mk_app(mk_lam("s", mk_match(mk_var("s"), branches)), value);

    RhsLedger ledger;
    Elaborator el(ledger);
    TermPtr core;
    try {
      core = el.elaborate_term(term);
    } catch (const CompileError&) {
      continue;  // overlapping branches raise redundant patterns
    }
    TypeStore store;
    Inferencer inf(store, &ledger);
    try {
      inf.infer(core);
    } catch (const CompileError&) {
      continue;
    }

    auto result = eval(core, 40000);
    REQUIRE(result.kind == EvalResult::Kind::Value);
    auto expected = ref_match_branches(branches, value);
    REQUIRE(expected.has_value());  // the default makes matching total
    REQUIRE(result.term->kind == Term::Kind::LabelApp);
    std::string want = expected->branch == static_cast<int>(branches.size()) - 1
                           ? "Rdefault"
                           : "R" + std::to_string(expected->branch);
    CHECK_MESSAGE(result.term->label == want,
                  "value ", pretty(value), " took ", result.term->label);
    if (result.term->label == want && want != "Rdefault") {
      int k = 0;
      for (const auto& [name, bound] : expected->bindings) {
        const auto& fields = result.term->a->fields;
        REQUIRE(k < static_cast<int>(fields.size()));
        CHECK(term_equal(fields[k].second, bound));
        ++k;
      }
    }
    ++agreed;
  }
  CHECK(agreed >= 300);
}
