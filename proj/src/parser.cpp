#include "elevate/parser.hpp"

#include <cctype>
#include <map>
#include <sstream>
#include <vector>

namespace elevate {

namespace {

enum class Tok {
  Ident, Number,
  KwLam, KwLet, KwIn, KwMatch, KwWith, KwFix, KwType, KwForall, KwAs,
  LParen, RParen, LBrace, RBrace, Lt, Gt,
  Pipe, Colon, Comma, Star, Tilde, Dot, Minus, Plus,
  Eq, Arrow, FatArrow,
  End
};

struct Token {
  Tok type;
  std::string text;
  Span span;
};

const std::map<std::string, Tok> kKeywords = {
    {"lam", Tok::KwLam}, {"let", Tok::KwLet}, {"in", Tok::KwIn},
    {"match", Tok::KwMatch}, {"with", Tok::KwWith}, {"fix", Tok::KwFix},
    {"type", Tok::KwType}, {"forall", Tok::KwForall}, {"as", Tok::KwAs},
};

[[noreturn]] void fail(const std::string& msg, Span sp) {
  throw CompileError(codes::parse, msg, sp);
}

std::vector<Token> lex(const std::string& src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto here = [&] { return Span{line, col, line, col}; };
  auto push = [&](Tok t, std::string text, Span sp) {
    sp.end_line = line;
    sp.end_col = col - 1;
    out.push_back(Token{t, std::move(text), sp});
  };
  auto advance = [&](size_t n = 1) {
    for (size_t k = 0; k < n && i < src.size(); ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance();
      continue;
    }
    if (c == '-' && i + 1 < src.size() && src[i + 1] == '-') {
      while (i < src.size() && src[i] != '\n') advance();
      continue;
    }
    Span sp = here();
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string num;
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) {
        num += src[i];
        advance();
      }
      // normalize: numeric labels carry no leading zeros
      size_t nz = num.find_first_not_of('0');
      num = (nz == std::string::npos) ? "0" : num.substr(nz);
      push(Tok::Number, num, sp);
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '#') {
      std::string id;
      if (c == '#') {
        id += '#';
        advance();
      }
      while (i < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) {
        id += src[i];
        advance();
      }
      if (id == "#") fail("stray '#'", sp);
      auto kw = kKeywords.find(id);
      push(kw != kKeywords.end() ? kw->second : Tok::Ident, id, sp);
      continue;
    }
    auto two = [&](char a, char b) {
      return c == a && i + 1 < src.size() && src[i + 1] == b;
    };
    if (two('-', '>')) { advance(2); push(Tok::Arrow, "->", sp); continue; }
    if (two('=', '>')) { advance(2); push(Tok::FatArrow, "=>", sp); continue; }
    Tok t;
    switch (c) {
      case '(': t = Tok::LParen; break;
      case ')': t = Tok::RParen; break;
      case '{': t = Tok::LBrace; break;
      case '}': t = Tok::RBrace; break;
      case '<': t = Tok::Lt; break;
      case '>': t = Tok::Gt; break;
      case '|': t = Tok::Pipe; break;
      case ':': t = Tok::Colon; break;
      case ',': t = Tok::Comma; break;
      case '*': t = Tok::Star; break;
      case '~': t = Tok::Tilde; break;
      case '.': t = Tok::Dot; break;
      case '-': t = Tok::Minus; break;
      case '+': t = Tok::Plus; break;
      case '=': t = Tok::Eq; break;
      default:
        fail(std::string("unexpected character '") + c + "'", sp);
    }
    advance();
    push(t, std::string(1, c), sp);
  }
  out.push_back(Token{Tok::End, "", here()});
  return out;
}

class Parser {
 public:
  Parser(const std::string& src, ParseOptions opts)
      : tokens_(lex(src)), opts_(opts) {}

  Program program() {
    Program p;
    while (!at(Tok::End)) {
      block_indent_ = peek().span.col;
      if (at(Tok::KwType)) {
        p.decls.push_back(Decl{Decl::Kind::TypeAlias, type_alias(), {}});
      } else if (at(Tok::KwLet)) {
        LetDecl d = let_decl();
        if (at(Tok::KwIn)) {
          // the trailing expression happened to start with let ... in
          next();
          if (d.annotation) fail("expression-level let takes no annotation", d.span);
          p.final_expr = mk_let(d.name, d.value, expr(), d.span);
          expect(Tok::End, "end of file after trailing expression");
          break;
        }
        p.decls.push_back(Decl{Decl::Kind::Let, {}, std::move(d)});
      } else {
        p.final_expr = expr();
        expect(Tok::End, "end of file after trailing expression");
        break;
      }
    }
    return p;
  }

  TermPtr whole_term() {
    auto t = expr();
    expect(Tok::End, "end of input");
    return t;
  }

  TypeExprPtr whole_type() {
    auto t = type_expr();
    expect(Tok::End, "end of input");
    return t;
  }

 private:
  std::vector<Token> tokens_;
  size_t pos_ = 0;
  ParseOptions opts_;
  // Column of the current top-level declaration. A new line starting at or
  // left of it ends any pending application chain, so consecutive unseparated
  // declarations and the trailing expression do not run together.
  int block_indent_ = 0;

  bool layout_break() const {
    if (block_indent_ <= 0 || pos_ == 0) return false;
    const Token& cur = peek();
    const Token& prev = tokens_[pos_ - 1];
    return cur.span.line > prev.span.line && cur.span.col <= block_indent_;
  }

  const Token& peek(size_t k = 0) const {
    size_t i = pos_ + k;
    return i < tokens_.size() ? tokens_[i] : tokens_.back();
  }
  bool at(Tok t, size_t k = 0) const { return peek(k).type == t; }
  Token next() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }
  Token expect(Tok t, const std::string& what) {
    if (!at(t)) fail("expected " + what + ", found '" + peek().text + "'", peek().span);
    return next();
  }

  std::string var_name() {
    Token t = expect(Tok::Ident, "identifier");
    if (!is_var_name(t.text)) fail("expected a variable (lowercase-initial) name", t.span);
    if (t.text[0] == '#' && !opts_.allow_internal_names)
      fail("'#'-prefixed names are reserved for elaboration", t.span);
    return t.text;
  }

  bool at_label() const {
    return at(Tok::Number) || (at(Tok::Ident) && is_label_name(peek().text));
  }

  Label label_name() {
    if (at(Tok::Number)) return next().text;
    Token t = expect(Tok::Ident, "label");
    if (!is_label_name(t.text)) fail("expected a label (uppercase or numeric)", t.span);
    return t.text;
  }

  // ----- declarations -----

  TypeAliasDecl type_alias() {
    Span sp = peek().span;
    expect(Tok::KwType, "'type'");
    Token name = expect(Tok::Ident, "type alias name");
    if (!is_label_name(name.text)) fail("type alias names are uppercase-initial", name.span);
    expect(Tok::Eq, "'='");
    std::vector<std::string> params;
    if (at(Tok::KwForall)) {
      next();
      while (at(Tok::Ident) && is_var_name(peek().text)) params.push_back(next().text);
      if (params.empty()) fail("expected type parameters after 'forall'", peek().span);
      expect(Tok::Dot, "'.' after forall parameters");
    }
    auto body = type_expr();
    return TypeAliasDecl{name.text, std::move(params), body, sp};
  }

  LetDecl let_decl() {
    Span sp = peek().span;
    expect(Tok::KwLet, "'let'");
    std::string name = var_name();
    TypeExprPtr ann;
    if (at(Tok::Colon)) {
      next();
      ann = type_expr();
    }
    expect(Tok::Eq, "'='");
    auto value = expr();
    return LetDecl{name, ann, value, sp};
  }

  // ----- terms -----

  TermPtr expr() {
    Span sp = peek().span;
    if (at(Tok::KwLam)) {
      next();
      std::string param = var_name();
      expect(Tok::Eq, "'=' after lambda parameter");
      return mk_lam(param, expr(), sp);
    }
    if (at(Tok::KwLet)) {
      next();
      std::string name = var_name();
      expect(Tok::Eq, "'=' in let expression");
      auto value = expr();
      expect(Tok::KwIn, "'in'");
      return mk_let(name, value, expr(), sp);
    }
    if (at(Tok::KwMatch)) return match_expr();
    return app_expr();
  }

  TermPtr match_expr() {
    Span sp = peek().span;
    expect(Tok::KwMatch, "'match'");
    auto subject = app_expr();
    expect(Tok::KwWith, "'with'");
    expect(Tok::Lt, "'<'");
    std::vector<Branch> branches;
    if (!at(Tok::Gt)) {
      for (;;) {
        auto pat = pattern();
        expect(Tok::FatArrow, "'=>'");
        auto rhs = expr();
        branches.push_back(Branch{pat, rhs});
        if (at(Tok::Pipe)) {
          next();
          continue;
        }
        break;
      }
    }
    expect(Tok::Gt, "'>' closing match");
    return mk_match(subject, std::move(branches), sp);
  }

  bool starts_operand() const {
    return at(Tok::Ident) || at(Tok::Number) || at(Tok::LBrace) || at(Tok::LParen) || at(Tok::KwFix);
  }

  TermPtr app_expr() {
    auto e = operand(true);
    while (starts_operand() && !layout_break()) e = mk_app(e, operand(false), e->span);
    return e;
  }

  // A label at the head of an application chain applies to the operand that
  // follows it; labels in argument position are bare-constructor sugar.
  TermPtr operand(bool label_takes_arg) {
    auto e = atom(label_takes_arg);
    for (;;) {
      if (!at(Tok::Dot)) break;
      Span sp = peek().span;
      next();
      if (at(Tok::Minus)) {
        next();
        e = mk_field_remove(e, label_name(), sp);
      } else if (at(Tok::Plus)) {
        next();
        e = mk_record_ext(e, record_fields(), sp);
      } else if (at(Tok::LBrace)) {
        e = mk_record_mod(e, record_fields(), sp);
      } else {
        e = mk_field_access(e, label_name(), sp);
      }
    }
    return e;
  }

  TermPtr atom(bool label_takes_arg) {
    Span sp = peek().span;
    if (at(Tok::LParen)) {
      next();
      auto e = expr();
      expect(Tok::RParen, "')'");
      return e;
    }
    if (at(Tok::LBrace)) return mk_record(record_fields(), sp);
    if (at(Tok::KwFix)) {
      next();
      return mk_fix(sp);
    }
    if (at(Tok::Number) || (at(Tok::Ident) && is_label_name(peek().text))) {
      Label l = label_name();
      if (label_takes_arg && starts_operand() && !layout_break())
        return mk_label(l, operand(false), sp);
      return mk_label(l, mk_unit(sp), sp);  // bare constructor
    }
    if (at(Tok::Ident)) return mk_var(var_name(), sp);
    fail("expected an expression, found '" + peek().text + "'", sp);
  }

  std::vector<std::pair<Label, TermPtr>> record_fields() {
    expect(Tok::LBrace, "'{'");
    std::vector<std::pair<Label, TermPtr>> fields;
    if (!at(Tok::RBrace)) {
      for (;;) {
        Span sp = peek().span;
        Label l = label_name();
        for (const auto& [seen, unused] : fields)
          if (seen == l) fail("duplicate label '" + l + "' in record", sp);
        expect(Tok::Colon, "':'");
        fields.emplace_back(l, expr());
        if (at(Tok::Pipe)) {
          next();
          continue;
        }
        break;
      }
    }
    expect(Tok::RBrace, "'}'");
    return fields;
  }

  // ----- patterns -----

  bool starts_pattern() const {
    return at(Tok::Ident) || at(Tok::Number) || at(Tok::LBrace) || at(Tok::LParen);
  }

  PatternPtr pattern() {
    Span sp = peek().span;
    if (at(Tok::LParen)) {
      next();
      auto p = pattern();
      expect(Tok::RParen, "')'");
      return p;
    }
    if (at(Tok::LBrace)) {
      next();
      std::vector<std::pair<Label, PatternPtr>> fields;
      if (!at(Tok::RBrace)) {
        for (;;) {
          Span fsp = peek().span;
          Label l = label_name();
          for (const auto& [seen, unused] : fields)
            if (seen == l) fail("duplicate label '" + l + "' in record pattern", fsp);
          expect(Tok::Colon, "':'");
          fields.emplace_back(l, pattern());
          if (at(Tok::Pipe)) {
            next();
            continue;
          }
          break;
        }
      }
      expect(Tok::RBrace, "'}'");
      return pat_record(std::move(fields), sp);
    }
    if (at(Tok::Number) || (at(Tok::Ident) && is_label_name(peek().text))) {
      Label l = label_name();
      PatternPtr payload;
      if (starts_pattern()) payload = pattern();
      return pat_label(l, payload, sp);
    }
    if (at(Tok::Ident)) return pat_var(var_name(), sp);
    fail("expected a pattern, found '" + peek().text + "'", sp);
  }

  // ----- types -----

  TypeExprPtr type_expr() {
    auto left = type_app();
    if (at(Tok::Arrow)) {
      Span sp = peek().span;
      next();
      return ty_arrow(left, type_expr(), sp);
    }
    return left;
  }

  TypeExprPtr type_app() {
    if (at(Tok::Ident) && is_label_name(peek().text)) {
      Span sp = peek().span;
      std::string name = next().text;
      std::vector<TypeExprPtr> args;
      while (starts_type_atom() && !layout_break()) args.push_back(type_atom());
      return ty_alias(name, std::move(args), sp);
    }
    return type_atom();
  }

  bool starts_type_atom() const {
    return at(Tok::LBrace) || at(Tok::Lt) || at(Tok::LParen) || at(Tok::Ident);
  }

  TypeExprPtr type_atom() {
    Span sp = peek().span;
    if (at(Tok::LParen)) {
      next();
      auto t = type_expr();
      expect(Tok::RParen, "')'");
      return t;
    }
    if (at(Tok::LBrace)) return row_type(TypeExpr::Kind::Record, Tok::RBrace, "'}'");
    if (at(Tok::Lt)) return row_type(TypeExpr::Kind::Variant, Tok::Gt, "'>'");
    if (at(Tok::Ident)) {
      if (is_label_name(peek().text)) return ty_alias(next().text, {}, sp);
      std::string v = next().text;
      if (at(Tok::KwAs)) {
        next();
        return ty_rec(v, type_expr(), sp);
      }
      return ty_var(v, sp);
    }
    fail("expected a type, found '" + peek().text + "'", sp);
  }

  TypeExprPtr row_type(TypeExpr::Kind kind, Tok close, const std::string& close_text) {
    Span sp = peek().span;
    next();  // consume opener
    std::vector<std::pair<Label, TypeExprPtr>> row;
    RowTailKind tail = RowTailKind::Empty;
    std::string tail_var;
    std::optional<RowKind> tail_kind;

    auto finish = [&]() {
      expect(close, close_text);
      return kind == TypeExpr::Kind::Record
                 ? ty_record(std::move(row), tail, tail_var, tail_kind, sp)
                 : ty_variant(std::move(row), tail, tail_var, tail_kind, sp);
    };

    if (at(close)) return finish();
    if (at(Tok::Star)) {
      next();
      return finish();
    }
    for (;;) {
      if (at(Tok::Ident) && is_var_name(peek().text)) {
        // row tail variable, optionally kinded: r | r: ~{A,B}
        tail = RowTailKind::Var;
        tail_var = next().text;
        if (at(Tok::Colon)) {
          next();
          expect(Tok::Tilde, "'~' in row kind annotation");
          expect(Tok::LBrace, "'{'");
          std::set<Label> labels;
          if (!at(Tok::RBrace)) {
            for (;;) {
              labels.insert(label_name());
              if (at(Tok::Comma)) {
                next();
                continue;
              }
              break;
            }
          }
          expect(Tok::RBrace, "'}'");
          tail_kind = RowKind{true, std::move(labels)};
        }
        return finish();
      }
      Span psp = peek().span;
      Label l = label_name();
      for (const auto& [seen, unused] : row)
        if (seen == l) fail("duplicate label '" + l + "' in row", psp);
      expect(Tok::Colon, "':'");
      row.emplace_back(l, type_expr());
      if (at(Tok::Pipe)) {
        next();
        if (at(close)) {
          tail = RowTailKind::Implicit;
          return finish();
        }
        if (at(Tok::Star)) {
          next();
          return finish();
        }
        continue;
      }
      return finish();
    }
  }
};

}  // namespace

Program parse_program(const std::string& source, const ParseOptions& opts) {
  return Parser(source, opts).program();
}

TermPtr parse_term(const std::string& source, const ParseOptions& opts) {
  return Parser(source, opts).whole_term();
}

TypeExprPtr parse_type(const std::string& source) {
  return Parser(source, {}).whole_type();
}

}  // namespace elevate
