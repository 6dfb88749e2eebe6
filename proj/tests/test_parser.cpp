#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "elevate/parser.hpp"
#include "elevate/pretty.hpp"
#include "testutil.hpp"

using namespace elevate;

TEST_CASE("lambda with a label application body") {
  auto t = parse_term("lam expr = Success expr");
  REQUIRE(t->kind == Term::Kind::Lam);
  CHECK(t->var == "expr");
  REQUIRE(t->a->kind == Term::Kind::LabelApp);
  CHECK(t->a->label == "Success");
  CHECK(t->a->a->kind == Term::Kind::Var);
}

TEST_CASE("bare constructors take an empty record") {
  auto t = parse_term("Failure");
  REQUIRE(t->kind == Term::Kind::LabelApp);
  CHECK(t->label == "Failure");
  CHECK(t->a->kind == Term::Kind::Record);
  CHECK(t->a->fields.empty());
}

TEST_CASE("labels in argument position are bare, head labels consume one operand") {
  auto t = parse_term("f Success x");
  REQUIRE(t->kind == Term::Kind::App);     // (f Success) x
  CHECK(t->b->kind == Term::Kind::Var);
  REQUIRE(t->a->kind == Term::Kind::App);
  CHECK(t->a->b->kind == Term::Kind::LabelApp);
  CHECK(t->a->b->a->fields.empty());

  auto s = parse_term("Success f x");     // (Success f) x
  REQUIRE(s->kind == Term::Kind::App);
  CHECK(s->a->kind == Term::Kind::LabelApp);
}

TEST_CASE("the void match has zero branches") {
  auto t = parse_term("match e with < >");
  REQUIRE(t->kind == Term::Kind::Match);
  CHECK(t->branches.empty());
}

TEST_CASE("postfix record operators bind tighter than application") {
  auto t = parse_term("f x.Fun");
  REQUIRE(t->kind == Term::Kind::App);
  CHECK(t->b->kind == Term::Kind::FieldAccess);

  auto u = parse_term("x.-A.+{B: {}}.{C: {}}");
  CHECK(u->kind == Term::Kind::RecordMod);
  CHECK(u->a->kind == Term::Kind::RecordExt);
  CHECK(u->a->a->kind == Term::Kind::FieldRemove);
}

TEST_CASE("numeric labels normalize leading zeros") {
  auto t = parse_term("Id {Name: 007}");
  CHECK(t->a->fields[0].second->label == "7");
}

TEST_CASE("duplicate record labels are a parse error") {
  CHECK_THROWS_AS(parse_term("{A: {} | A: {}}"), CompileError);
  CHECK_THROWS_AS(parse_term("match x with <{A: y | A: z} => y>"), CompileError);
  CHECK_THROWS_AS(parse_type("<A: {*} | A: {*} | *>"), CompileError);
}

TEST_CASE("internal names are rejected in user source") {
  CHECK_THROWS_AS(parse_term("lam x = #x1"), CompileError);
  ParseOptions opts;
  opts.allow_internal_names = true;
  CHECK_NOTHROW(parse_term("lam x = match #q with < >", opts));
}

TEST_CASE("type syntax: arrows, implicit tails and kinded row variables") {
  auto t = parse_type("p -> <Success: p | >");
  REQUIRE(t->kind == TypeExpr::Kind::Arrow);
  CHECK(t->a->kind == TypeExpr::Kind::Var);
  REQUIRE(t->b->kind == TypeExpr::Kind::Variant);
  CHECK(t->b->row.size() == 1);
  CHECK(t->b->tail == RowTailKind::Implicit);

  auto u = parse_type("<Failure: {*} | r: ~{Failure}>");
  REQUIRE(u->kind == TypeExpr::Kind::Variant);
  CHECK(u->tail == RowTailKind::Var);
  CHECK(u->tail_var == "r");
  REQUIRE(u->tail_kind.has_value());
  CHECK(*u->tail_kind == RowKind{true, {"Failure"}});

  auto v = parse_type("{*}");
  REQUIRE(v->kind == TypeExpr::Kind::Record);
  CHECK(v->row.empty());
  CHECK(v->tail == RowTailKind::Empty);

  auto w = parse_type("t as <Id: {Name: Nat | *} | *>");
  REQUIRE(w->kind == TypeExpr::Kind::Rec);
  CHECK(w->var == "t");
}

TEST_CASE("programs: declarations and a trailing expression") {
  auto p = parse_program("type Box = forall a. {V: a | *}\n"
                         "let f = lam x = x\n"
                         "f {}\n");
  REQUIRE(p.decls.size() == 2);
  CHECK(p.decls[0].kind == Decl::Kind::TypeAlias);
  CHECK(p.decls[0].alias.params == std::vector<std::string>{"a"});
  CHECK(p.decls[1].kind == Decl::Kind::Let);
  REQUIRE(p.final_expr != nullptr);
  CHECK(p.final_expr->kind == Term::Kind::App);
}

TEST_CASE("a fresh unindented line ends the application chain") {
  auto p = parse_program("let d = fix (lam f = lam x = f x)\nd {}\n");
  REQUIRE(p.decls.size() == 1);
  CHECK(p.decls[0].let.value->kind == Term::Kind::App);
  REQUIRE(p.final_expr != nullptr);

  // indented continuations still belong to the declaration
  auto q = parse_program("let g = f\n  {}\n");
  CHECK(q.decls[0].let.value->kind == Term::Kind::App);
  CHECK(q.final_expr == nullptr);
}

TEST_CASE("comments run to the end of the line") {
  auto p = parse_program("-- a comment\nlet x = {} -- trailing\n");
  CHECK(p.decls.size() == 1);
}

TEST_CASE("parse spans are 1-based") {
  try {
    parse_term("lam x = ???");
    FAIL("expected a parse error");
  } catch (const CompileError& e) {
    CHECK(e.code == codes::parse);
    CHECK(e.span.line == 1);
    CHECK(e.span.col == 9);
  }
}

TEST_CASE("round-trip: parse(pretty(parse(f))) equals parse(f) on the corpus") {
  namespace fs = std::filesystem;
  const char* dir_env = std::getenv("ELEVATE_CORPUS");
  fs::path dir = dir_env ? fs::path(dir_env) : fs::path("corpus");
  if (!fs::exists(dir)) dir = fs::path(__FILE__).parent_path().parent_path() / "corpus";
  REQUIRE(fs::exists(dir));
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".elv") continue;
    std::ifstream in(entry.path());
    std::stringstream ss;
    ss << in.rdbuf();
    Program p1 = parse_program(ss.str());
    Program p2 = parse_program(pretty(p1));
    REQUIRE_MESSAGE(p1.decls.size() == p2.decls.size(), entry.path().string());
    for (size_t i = 0; i < p1.decls.size(); ++i) {
      if (p1.decls[i].kind != Decl::Kind::Let) continue;
      CHECK_MESSAGE(term_equal(p1.decls[i].let.value, p2.decls[i].let.value),
                    entry.path().string());
    }
    CHECK_MESSAGE((p1.final_expr == nullptr) == (p2.final_expr == nullptr),
                  entry.path().string());
    if (p1.final_expr) CHECK(term_equal(p1.final_expr, p2.final_expr));
    ++seen;
  }
  CHECK(seen >= 15);
}

TEST_CASE("type row printing is stable under permutation of the input pairs") {
  auto a = parse_type("<A: {*} | B: {*} | C: {*} | *>");
  auto b = parse_type("<C: {*} | A: {*} | B: {*} | *>");
  CHECK(pretty(a) == pretty(b));
}
