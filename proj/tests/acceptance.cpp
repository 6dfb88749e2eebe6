// Acceptance suite: one line per criterion, nonzero exit on any failure.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include "elevate/driver.hpp"
#include "elevate/elaborate.hpp"
#include "elevate/eval.hpp"
#include "elevate/infer.hpp"
#include "elevate/kinds.hpp"
#include "elevate/parser.hpp"
#include "elevate/pretty.hpp"
#include "testutil.hpp"

using namespace elevate;
using namespace elevate::testing;
namespace fs = std::filesystem;

namespace {

fs::path g_corpus;

[[noreturn]] void fail_check(const std::string& msg) { throw std::runtime_error(msg); }

void require(bool cond, const std::string& msg) {
  if (!cond) fail_check(msg);
}

std::string read_corpus(const std::string& name) {
  std::ifstream in(g_corpus / name);
  require(in.good(), "cannot open corpus file " + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CheckedProgram check_corpus(const std::string& name) {
  return check_source(read_corpus(name), name);
}

bool has_code(const CheckedProgram& p, const std::string& code) {
  for (const auto& d : p.diagnostics)
    if (d.severity == Severity::Error && d.code == code) return true;
  return false;
}

void expect_scheme(const CheckedProgram& p, const std::string& name,
                   const std::string& type_text) {
  const CheckedLet* let = p.find(name);
  require(let && let->ok, "binding '" + name + "' failed to check");
  auto want = scheme_from_type_text(type_text);
  require(scheme_equal_alpha(*p.store, let->scheme, *want.store, want.scheme),
          "scheme of '" + name + "' is " + let->printed.rendered + ", expected " + type_text);
}

int count_label(const TypeExprPtr& t, const Label& l) {
  if (!t) return 0;
  int n = 0;
  switch (t->kind) {
    case TypeExpr::Kind::Arrow:
      return count_label(t->a, l) + count_label(t->b, l);
    case TypeExpr::Kind::Rec:
      return count_label(t->a, l);
    case TypeExpr::Kind::Record:
    case TypeExpr::Kind::Variant:
      for (const auto& [fl, u] : t->row) n += (fl == l) + count_label(u, l);
      return n;
    default:
      return 0;
  }
}

// ---------------------------------------------------------------------------

void c1_combinator_schemes() {
  auto inferred = check_corpus("combinators_infer.elv");
  require(inferred.ok(), "combinators_infer.elv failed to check");
  expect_scheme(inferred, "id", "p -> <Success: p | >");
  expect_scheme(inferred, "fail", "p -> <Failure: {*} | >");
  expect_scheme(inferred, "seq",
                "(p1 -> <Success: p2 | Failure: {*} | *>) -> "
                "(p2 -> <Failure: {*} | r: ~{Failure}>) -> "
                "(p1 -> <Failure: {*} | r: ~{Failure}>)");
  expect_scheme(inferred, "lChoice",
                "(p1 -> <Success: p2 | Failure: {*} | *>) -> "
                "(p1 -> <Success: p2 | r: ~{Success}>) -> "
                "(p1 -> <Success: p2 | r: ~{Success}>)");
  expect_scheme(inferred, "try",
                "(p1 -> <Success: p1 | Failure: {*} | *>) -> (p1 -> <Success: p1 | >)");

  // the annotated spellings check and agree binding by binding
  auto annotated = check_corpus("combinators.elv");
  require(annotated.ok(), "combinators.elv failed to check");
  for (const char* name : {"id", "fail", "seq", "lChoice", "try"}) {
    const CheckedLet* a = inferred.find(name);
    const CheckedLet* b = annotated.find(name);
    require(a && b, std::string("missing binding ") + name);
    require(scheme_equal_alpha(*inferred.store, a->scheme, *annotated.store, b->scheme),
            std::string("inferred and annotated schemes differ for ") + name);
  }
  inferred.store->audit_row_kinds();
  annotated.store->audit_row_kinds();
}

const char* kMapFusionExpectedType =
    "<App: {Fun: <App: {Fun: <Primitive: <Map: {*} | *> | *> | Arg: g | } | *> |"
    "      Arg: <App: {Fun: <App: {Fun: <Primitive: <Map: {*} | *> | *> | Arg: f | } | *> |"
    "                  Arg: xs | } | *> | } | *>"
    " -> <Success: <App: {Fun: <App: {Fun: <Primitive: <Map: {*} | > | > |"
    "                           Arg: <Lam: {Param: <0: {*} | > |"
    "                                       Body: <App: {Fun: g |"
    "                                                    Arg: <App: {Fun: f |"
    "                                                                Arg: <Id: {Name: <0: {*} | > | *} | > |"
    "                                                                *} | > | *} | > | *} | > | *} | > |"
    "              Arg: xs | *} | > | >";

void c2_map_fusion_scheme() {
  auto p = check_corpus("map_fusion.elv");
  require(p.ok(), "map_fusion.elv failed to check");
  expect_scheme(p, "mapFusion", kMapFusionExpectedType);
}

void c3_seq_fail_id() {
  auto p = check_corpus("seq_fail_id.elv");
  require(p.ok(), "seq_fail_id.elv failed to check");
  expect_scheme(p, "sfi", "p1 -> <Failure: {*} | Success: p2 | r>");
}

void c4_composition_safety() {
  auto good = check_corpus("seq_map_fusion.elv");
  require(good.ok(), "seq mapFusion mapFusion must type-check");
  const CheckedLet* composed = good.find("composed");
  require(composed && composed->ok, "composed binding missing");
  auto rb = readback(*good.store, composed->scheme.body);
  require(rb.type->kind == TypeExpr::Kind::Arrow, "composed is not a function");
  int maps_in = count_label(rb.type->a, "Map");
  require(maps_in == 3, "argument side mentions Map " + std::to_string(maps_in) +
                            " times, expected 3");
  int maps_out = count_label(rb.type->b, "Map");
  require(maps_out == 1, "result side mentions Map " + std::to_string(maps_out) +
                             " times, expected the single fused map");

  good.store->audit_row_kinds();

  auto bad = check_corpus("reduce_then_map_seq.elv");
  require(!bad.ok(), "seq reduceMapFusion mapFusion must fail");
  require(has_code(bad, codes::unify), "expected E-UNIFY from the failing composition");
}

void c5_dead_branch_taxonomy() {
  const std::pair<const char*, const char*> files[] = {
      {"dead_repeated_label.elv", codes::redundant},
      {"dead_kind_excluded.elv", codes::redundant},
      {"true_false_dead.elv", codes::redundant},
      {"true_remainder_dead.elv", codes::redundant},
  };
  for (const auto& [file, code] : files) {
    auto p = check_corpus(file);
    require(!p.ok(), std::string(file) + " must fail");
    require(has_code(p, code), std::string(file) + " must report " + code);
  }
  // silent removal leaves a program checkable when the branch RHS survives
  auto silently = check_source(
      "let r = match Success {} with <Success x => x | y => {}>");
  require(silently.ok(), "alive Success match must check");
  bool warned = false;
  for (const auto& d : silently.diagnostics) warned |= d.code == codes::dead_branch;
  require(!warned, "no dead branch expected on the alive match");
}

const char* kExpectedFusionCascade = R"(
lam expr = match expr with <
  App w1 => match w1.Fun with <
  App w2 => match w2.Fun with <
  Primitive w3 => match w3 with <
  Map u1 => match u1 with < {} =>
    match w1.Arg with <
    App w4 => match w4.Fun with <
    App w5 => match w5.Fun with <
    Primitive w6 => match w6 with <
    Map u2 => match u2 with < {} =>
      let g = w2.Arg in
      let f = w5.Arg in
      let xs = w4.Arg in
      Success (App {Fun: App {Fun: Primitive Map |
        Arg: Lam {Param: 0 | Body: App {Fun: g |
          Arg: App {Fun: f | Arg: Id {Name: 0}}}}} |
        Arg: xs})
      >
    | k8 => match k8 with < > >
    | k7 => match k7 with < > >
    | k6 => match k6 with < > >
    | k5 => match k5 with < > >
    >
  | k4 => match k4 with < > >
  | k3 => match k3 with < > >
  | k2 => match k2 with < > >
  | k1 => match k1 with < > >
)";

void c6_elaboration_golden() {
  auto program = elaborate_source(read_corpus("map_fusion.elv"));
  require(program.decls.size() == 1 && program.decls[0].kind == Decl::Kind::Let,
          "unexpected corpus shape");
  TermPtr got = program.decls[0].let.value;
  require(is_core_term(got), "elaborated mapFusion is not core");
  TermPtr expected = parse_term(kExpectedFusionCascade);
  require(term_isomorphic(got, expected),
          "elaborated mapFusion does not match the expected cascade:\n" + pretty(got));
}

void c7_elaboration_oracle() {
  Rng rng(424242);
  int agreed = 0, attempts = 0;
  while (agreed < 1000 && attempts < 8000) {
    ++attempts;
    int vc = 0;
    auto pat = gen_pattern(rng, 4, vc);
    auto value = rng.chance(0.5) ? gen_conforming_value(rng, pat, 2)
                                 : mutate_value(rng, gen_conforming_value(rng, pat, 2));

    std::vector<std::pair<Label, TermPtr>> found_fields;
    {
      auto probe = ref_match(pat, gen_conforming_value(rng, pat, 1));
      if (!probe) continue;
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
      continue;
    }
    TypeStore store;
    Inferencer inf(store, &ledger);
    try {
      inf.infer(core);
    } catch (const CompileError&) {
      continue;
    }

    auto result = eval(core, 20000);
    require(result.kind == EvalResult::Kind::Value, "elaborated match failed to evaluate");

    auto expected = ref_match(pat, value);
    if (expected) {
      require(result.term->kind == Term::Kind::LabelApp && result.term->label == "Found",
              "reference matched but evaluation said NoMatch");
      int k = 0;
      for (const auto& [name, bound] : *expected) {
        const auto& fields = result.term->a->fields;
        require(k < static_cast<int>(fields.size()), "missing binding in result");
        require(term_equal(fields[k].second, bound), "binding of " + name + " differs");
        ++k;
      }
    } else {
      require(result.term->kind == Term::Kind::LabelApp && result.term->label == "NoMatch",
              "reference found no match but evaluation said Found");
    }
    ++agreed;
  }
  require(agreed >= 1000, "only " + std::to_string(agreed) + " agreeing cases");
}

void c8_row_kind_algebra() {
  const std::vector<Label> u = {"A", "B", "C", "D"};
  std::vector<RowKind> kinds;
  for (int mask = 0; mask < 16; ++mask) {
    std::set<Label> ls;
    for (int i = 0; i < 4; ++i)
      if (mask & (1 << i)) ls.insert(u[i]);
    kinds.push_back(RowKind{false, ls});
    kinds.push_back(RowKind{true, ls});
  }
  auto denote = [](const RowKind& k) {
    const std::set<Label> universe = {"A", "B", "C", "D", "W"};
    if (!k.negative) return k.labels;
    std::set<Label> out;
    for (const auto& l : universe)
      if (!k.labels.count(l)) out.insert(l);
    return out;
  };
  auto subset = [](const std::set<Label>& a, const std::set<Label>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
  };
  for (const auto& a : kinds) {
    require(row_kind_subset(a, a), "subset not reflexive");
    for (const auto& b : kinds) {
      require(row_kind_subset(a, b) == subset(denote(a), denote(b)),
              "subset disagrees with the denotation");
      for (const auto& c : kinds)
        if (row_kind_subset(a, b) && row_kind_subset(b, c))
          require(row_kind_subset(a, c), "subset not transitive");
    }
    for (const auto& l : u) {
      auto ext = row_kind_extend(a, l);
      require(ext.has_value() == !denote(a).count(l), "extension definedness disagrees");
      if (ext) {
        auto want = denote(a);
        want.insert(l);
        require(denote(*ext) == want, "extension disagrees with insertion");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Criterion 9: subject reduction and progress, in declarative match mode.

struct SoundnessStats {
  std::map<std::string, long> rules;
  int programs = 0;
  long sr_steps = 0;
};

void trace_program(const TermPtr& term, SoundnessStats& stats, long sr_window) {
  TypeStore store;
  Inferencer first(store, nullptr, /*declarative=*/true);
  NodeId t0 = first.infer(term).type;
  TypeEnv empty;
  Scheme prev = generalize(store, empty, t0);

  TermPtr cur = term;
  for (long i = 0; i < sr_window; ++i) {
    StepOutcome s = step(cur);
    if (s.kind == StepOutcome::Kind::AlreadyValue) break;
    require(s.kind != StepOutcome::Kind::Stuck,
            "progress violated: " + s.reason + " in " + pretty(cur));
    stats.rules[s.rule]++;
    cur = s.term;

    Inferencer again(store, nullptr, /*declarative=*/true);
    NodeId tn = again.infer(cur).type;
    Scheme next = generalize(store, empty, tn);
    bool preserved = scheme_equal_alpha(store, prev, store, next) ||
                     instance_of(store, next, prev.body) ||
                     instance_of(store, prev, next.body);
    require(preserved, "subject reduction violated at step " + std::to_string(i));
    prev = next;
    stats.sr_steps++;
  }

  // progress within the full fuel bound, without re-inference
  auto full = eval(term, 10000);
  require(full.kind != EvalResult::Kind::Stuck, "stuck within fuel: " + full.reason);
  for (const auto& [rule, n] : full.rule_counts) stats.rules[rule] += n;
  stats.programs++;
}

void c9_soundness() {
  SoundnessStats stats;

  // every well-typed corpus program
  for (const auto& entry : fs::directory_iterator(g_corpus)) {
    if (entry.path().extension() != ".elv") continue;
    auto checked = check_source(read_corpus(entry.path().filename().string()),
                                entry.path().filename().string());
    if (!checked.ok()) continue;
    TermPtr term = checked.runnable();
    if (!term) {
      // close the program over its last binding instead
      if (checked.lets.empty()) continue;
      term = mk_var(checked.lets.back().name);
      for (auto it = checked.lets.rbegin(); it != checked.lets.rend(); ++it)
        term = mk_let(it->name, it->term, term);
    }
    trace_program(term, stats, 400);
  }

  // generated well-typed closed terms
  Rng rng(31337);
  int kept = 0, tries = 0;
  while (kept < 200 && tries < 3000) {
    ++tries;
    auto t = gen_core_term(rng, 24);
    if (term_size(t) > 30) continue;
    {
      TypeStore probe;
      Inferencer inf(probe, nullptr, /*declarative=*/true);
      try {
        inf.infer(t);
      } catch (const CompileError&) {
        continue;
      }
    }
    trace_program(t, stats, 400);
    ++kept;
  }
  require(kept >= 200, "only generated " + std::to_string(kept) + " well-typed terms");

  for (const char* rule :
       {"ST-App", "ST-Let", "ST-Fix", "ST-FieldAccess", "ST-FieldDel", "ST-RecordMod",
        "ST-RecordExt", "ST-Match-Unit", "ST-Match-Match", "ST-Match-Skip"})
    require(stats.rules.count(rule) && stats.rules[rule] > 0,
            std::string("rule never fired: ") + rule);
}

const char* kRewriteResultExpected =
    "Success (App {Fun: App {Fun: Primitive Map |"
    "  Arg: Lam {Param: 0 | Body: App {Fun: Id {Name: 7} |"
    "    Arg: App {Fun: Id {Name: 8} | Arg: Id {Name: 0}}}}} |"
    "  Arg: Id {Name: 9}})";

void c10_runtime_rewrite() {
  auto checked = check_corpus("map_fusion_applied.elv");
  require(checked.ok(), "map_fusion_applied.elv failed to check");
  TermPtr term = checked.runnable();
  require(term != nullptr, "no trailing expression");
  auto result = eval(term, 10000);
  require(result.kind == EvalResult::Kind::Value, "evaluation did not reach a value");
  require(term_equal(result.term, parse_term(kRewriteResultExpected)),
          "rewritten program differs:\n" + pretty(result.term));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) {
    g_corpus = argv[1];
  } else if (const char* env = std::getenv("ELEVATE_CORPUS")) {
    g_corpus = env;
  } else {
    g_corpus = "corpus";
  }

  std::vector<std::pair<std::string, std::function<void()>>> criteria = {
      {"C1 combinator schemes match the annotated types", c1_combinator_schemes},
      {"C2 mapFusion scheme matches the expected inferred type", c2_map_fusion_scheme},
      {"C3 seq fail id pins to t0 -> <Failure | Success: t1 | r>", c3_seq_fail_id},
      {"C4 composition safety: fuse twice ok, reduce-then-map rejected", c4_composition_safety},
      {"C5 dead-branch taxonomy produces the pinned diagnostics", c5_dead_branch_taxonomy},
      {"C6 elaborating the fusion rule reproduces the reference cascade", c6_elaboration_golden},
      {"C7 elaboration agrees with the reference matcher on 1000 cases", c7_elaboration_oracle},
      {"C8 row-kind algebra matches its set denotation exhaustively", c8_row_kind_algebra},
      {"C9 subject reduction and progress over corpus and generated terms", c9_soundness},
      {"C10 runtime rewrite of map g (map f xs)", c10_runtime_rewrite},
  };

  int failures = 0;
  for (auto& [name, run] : criteria) {
    try {
      run();
      std::cout << "PASS  " << name << "\n";
    } catch (const std::exception& e) {
      ++failures;
      std::cout << "FAIL  " << name << "\n      " << e.what() << "\n";
    }
  }
  return failures == 0 ? 0 : 1;
}
