#pragma once

// Concrete syntax.
//
//   program ::= ("prim" x ":" type "=" term "in")* term
//   term    ::= "fun" "(" x ":" type ")" "=>" term
//             | "tfun" "[" X "<:" type "]" "=>" term
//             | "let" x "=" term "in" term
//             | app
//   app     ::= head (atom | "[" type "]")*
//   head    ::= "box" atom | "unbox" cset atom | atom
//   atom    ::= x | "(" term ")"
//   type    ::= cset? arrow
//   arrow   ::= operand ("->" type)?
//   operand ::= "Top" | X | "Box" cset? operand | "(" type ")"
//             | "forall" "(" x ":" type ")" "->" type
//             | "forall" "[" X "<:" type "]" "->" type
//   cset    ::= "{" ((x | "*") ("," (x | "*"))*)? "}"
//
// Comments run from "--" to end of line. Identifiers are resolved while
// parsing; term and type variables share one namespace.

#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "diagnostic.hpp"
#include "syntax.hpp"

namespace capcheck {

// ---------------------------------------------------------------------------
// Surface terms (direct style)
// ---------------------------------------------------------------------------

struct SurfaceNode;
using SurfaceTerm = std::shared_ptr<const SurfaceNode>;

namespace surface {
struct Var {
  Name name;
};
struct Abs {
  Name param;
  Type param_type;
  SurfaceTerm body;
};
struct TAbs {
  Name tparam;
  Shape bound;
  SurfaceTerm body;
};
struct App {
  SurfaceTerm fn;
  SurfaceTerm arg;
};
struct TApp {
  SurfaceTerm fn;
  Shape type_arg;
};
struct Let {
  Name binder;
  SurfaceTerm bound;
  SurfaceTerm body;
};
struct Box {
  SurfaceTerm operand;
};
struct Unbox {
  CaptureSet keys;
  SurfaceTerm operand;
};
}  // namespace surface

struct SurfaceNode {
  std::variant<surface::Var, surface::Abs, surface::TAbs, surface::App, surface::TApp, surface::Let,
               surface::Box, surface::Unbox>
      node;
  SourceSpan span;
};

inline SurfaceTerm make_surface(auto n, SourceSpan span = {}) {
  return std::make_shared<const SurfaceNode>(SurfaceNode{std::move(n), std::move(span)});
}

struct SurfacePrim {
  Name name;
  Type type;
  SurfaceTerm value;
  SourceSpan span;
};

struct SurfaceProgram {
  std::vector<SurfacePrim> prims;
  SurfaceTerm body;
};

struct Prim {
  Name name;
  Type type;
  Term value;
  SourceSpan span;
};

struct Program {
  std::vector<Prim> prims;
  Term body;
};

/// Nests the prims as outer lets around the body.
inline Term program_term(const Program& p) {
  Term t = p.body;
  for (auto it = p.prims.rbegin(); it != p.prims.rend(); ++it) t = mk::let(it->name, it->value, t);
  return t;
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

enum class Tok {
  Ident, Star, LParen, RParen, LBracket, RBracket, LBrace, RBrace, Comma, Colon, Equals,
  FatArrow, Arrow, SubType, Semicolon,
  KwFun, KwTFun, KwLet, KwIn, KwBox, KwUnbox, KwTop, KwBoxT, KwForall, KwPrim,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  SourceSpan span;
};

inline const char* tok_name(Tok k) {
  switch (k) {
    case Tok::Ident: return "identifier";
    case Tok::Star: return "'*'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::Comma: return "','";
    case Tok::Colon: return "':'";
    case Tok::Equals: return "'='";
    case Tok::FatArrow: return "'=>'";
    case Tok::Arrow: return "'->'";
    case Tok::SubType: return "'<:'";
    case Tok::Semicolon: return "';'";
    case Tok::KwFun: return "'fun'";
    case Tok::KwTFun: return "'tfun'";
    case Tok::KwLet: return "'let'";
    case Tok::KwIn: return "'in'";
    case Tok::KwBox: return "'box'";
    case Tok::KwUnbox: return "'unbox'";
    case Tok::KwTop: return "'Top'";
    case Tok::KwBoxT: return "'Box'";
    case Tok::KwForall: return "'forall'";
    case Tok::KwPrim: return "'prim'";
    case Tok::End: return "end of input";
  }
  return "?";
}

inline Result<std::vector<Token>> lex(std::string_view src, const std::string& file = {}) {
  static const std::map<std::string, Tok, std::less<>> keywords = {
      {"fun", Tok::KwFun},     {"tfun", Tok::KwTFun},   {"let", Tok::KwLet},
      {"in", Tok::KwIn},       {"box", Tok::KwBox},     {"unbox", Tok::KwUnbox},
      {"Top", Tok::KwTop},     {"Box", Tok::KwBoxT},    {"forall", Tok::KwForall},
      {"prim", Tok::KwPrim},
  };
  std::vector<Token> out;
  std::size_t i = 0, line = 1, col = 1;
  auto pos = [&] { return SourcePos{i, line, col}; };
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (src.substr(i, 2) == "--") {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    SourcePos start = pos();
    auto emit = [&](Tok k, std::size_t n) {
      std::string text(src.substr(i, n));
      advance(n);
      out.push_back(Token{k, std::move(text), SourceSpan{file, start, pos()}});
    };
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_' || src[j] == '\''))
        ++j;
      std::string_view word = src.substr(i, j - i);
      auto kw = keywords.find(word);
      emit(kw == keywords.end() ? Tok::Ident : kw->second, j - i);
      continue;
    }
    std::string_view two = src.substr(i, 2);
    if (two == "=>") { emit(Tok::FatArrow, 2); continue; }
    if (two == "->") { emit(Tok::Arrow, 2); continue; }
    if (two == "<:") { emit(Tok::SubType, 2); continue; }
    switch (c) {
      case '*': emit(Tok::Star, 1); continue;
      case '(': emit(Tok::LParen, 1); continue;
      case ')': emit(Tok::RParen, 1); continue;
      case '[': emit(Tok::LBracket, 1); continue;
      case ']': emit(Tok::RBracket, 1); continue;
      case '{': emit(Tok::LBrace, 1); continue;
      case '}': emit(Tok::RBrace, 1); continue;
      case ',': emit(Tok::Comma, 1); continue;
      case ':': emit(Tok::Colon, 1); continue;
      case '=': emit(Tok::Equals, 1); continue;
      case ';': emit(Tok::Semicolon, 1); continue;
      default: break;
    }
    advance(1);
    return make_diag(code::kSyntax, std::string("unexpected character '") + c + "'",
                     SourceSpan{file, start, pos()});
  }
  out.push_back(Token{Tok::End, "", SourceSpan{file, pos(), pos()}});
  return out;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct ParseOptions {
  std::string file;
  /// Names visible at the top level.
  Env env;
  /// When set, unbound identifiers are declared on first use and recorded here
  /// instead of being reported.
  std::map<std::string, Name>* free = nullptr;
};

namespace detail {

class ParseError : public std::exception {
 public:
  explicit ParseError(Diagnostic d) : diag(std::move(d)) {}
  const char* what() const noexcept override { return diag.message.c_str(); }
  Diagnostic diag;
};

class Parser {
 public:
  Parser(std::vector<Token> toks, ParseOptions opts) : toks_(std::move(toks)), opts_(std::move(opts)) {
    for (const Binding& b : opts_.env.bindings()) {
      bool is_type = std::holds_alternative<TypeBinding>(b);
      scope_.push_back({binding_name(b), is_type});
    }
  }

  SurfaceProgram program() {
    SurfaceProgram p;
    while (peek().kind == Tok::KwPrim) {
      SourceSpan start = next().span;
      Token id = expect(Tok::Ident);
      expect(Tok::Colon);
      Type ty = type();
      expect(Tok::Equals);
      SurfaceTerm v = term();
      expect(Tok::KwIn);
      Name n = fresh_name(id.text);
      scope_.push_back({n, false});
      p.prims.push_back(SurfacePrim{n, ty, v, join(start, v->span)});
    }
    p.body = term();
    expect(Tok::End);
    return p;
  }

  SurfaceTerm whole_term() {
    SurfaceTerm t = term();
    expect(Tok::End);
    return t;
  }

  Type whole_type() {
    Type t = type();
    expect(Tok::End);
    return t;
  }

 private:
  struct Entry {
    Name name;
    bool is_type;
  };

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  [[noreturn]] void fail(const std::string& msg, const SourceSpan& span) const {
    throw ParseError(make_diag(code::kSyntax, msg, span));
  }

  const Token& expect(Tok k) {
    if (peek().kind != k) {
      std::string got = peek().kind == Tok::Ident ? "identifier '" + peek().text + "'" : tok_name(peek().kind);
      fail(std::string("expected ") + tok_name(k) + ", found " + got, peek().span);
    }
    return next();
  }

  static SourceSpan join(const SourceSpan& a, const SourceSpan& b) { return SourceSpan{a.file, a.start, b.end}; }

  Name resolve(const Token& id, bool want_type) {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it) {
      if (it->name.text != id.text) continue;
      if (it->is_type != want_type) {
        throw ParseError(make_diag(code::kUnbound,
                                   "'" + id.text + "' is a " + (it->is_type ? "type" : "term") +
                                       " variable, expected a " + (want_type ? "type" : "term") + " variable",
                                   id.span));
      }
      return it->name;
    }
    if (opts_.free) {
      auto [it, inserted] = opts_.free->try_emplace(id.text, Name{});
      if (inserted) it->second = fresh_name(id.text);
      return it->second;
    }
    throw ParseError(make_diag(code::kUnbound, "unbound identifier '" + id.text + "'", id.span));
  }

  template <class F>
  auto scoped(const Name& n, bool is_type, F&& f) {
    scope_.push_back({n, is_type});
    struct Pop {
      std::vector<Entry>& s;
      ~Pop() { s.pop_back(); }
    } pop{scope_};
    return f();
  }

  // -- terms ---------------------------------------------------------------

  SurfaceTerm term() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::KwFun: {
        SourceSpan start = next().span;
        expect(Tok::LParen);
        Token id = expect(Tok::Ident);
        expect(Tok::Colon);
        Type ty = type();
        expect(Tok::RParen);
        expect(Tok::FatArrow);
        Name n = fresh_name(id.text);
        SurfaceTerm body = scoped(n, false, [&] { return term(); });
        return make_surface(surface::Abs{n, ty, body}, join(start, body->span));
      }
      case Tok::KwTFun: {
        SourceSpan start = next().span;
        expect(Tok::LBracket);
        Token id = expect(Tok::Ident);
        expect(Tok::SubType);
        Shape bound = pure_shape("type bound");
        expect(Tok::RBracket);
        expect(Tok::FatArrow);
        Name n = fresh_name(id.text);
        SurfaceTerm body = scoped(n, true, [&] { return term(); });
        return make_surface(surface::TAbs{n, bound, body}, join(start, body->span));
      }
      case Tok::KwLet: {
        SourceSpan start = next().span;
        Token id = expect(Tok::Ident);
        expect(Tok::Equals);
        SurfaceTerm bound = term();
        expect(Tok::KwIn);
        Name n = fresh_name(id.text);
        SurfaceTerm body = scoped(n, false, [&] { return term(); });
        return make_surface(surface::Let{n, bound, body}, join(start, body->span));
      }
      default:
        return app();
    }
  }

  bool starts_atom() const { return peek().kind == Tok::Ident || peek().kind == Tok::LParen; }

  SurfaceTerm app() {
    SurfaceTerm t = head();
    for (;;) {
      if (starts_atom()) {
        SurfaceTerm a = atom();
        t = make_surface(surface::App{t, a}, join(t->span, a->span));
      } else if (peek().kind == Tok::LBracket) {
        next();
        Shape s = pure_shape("type argument");
        SourceSpan end = expect(Tok::RBracket).span;
        t = make_surface(surface::TApp{t, s}, join(t->span, end));
      } else {
        return t;
      }
    }
  }

  SurfaceTerm head() {
    if (peek().kind == Tok::KwBox) {
      SourceSpan start = next().span;
      SurfaceTerm a = atom();
      return make_surface(surface::Box{a}, join(start, a->span));
    }
    if (peek().kind == Tok::KwUnbox) {
      SourceSpan start = next().span;
      CaptureSet keys = cset();
      SurfaceTerm a = atom();
      return make_surface(surface::Unbox{keys, a}, join(start, a->span));
    }
    return atom();
  }

  SurfaceTerm atom() {
    if (peek().kind == Tok::Ident) {
      const Token& id = next();
      return make_surface(surface::Var{resolve(id, false)}, id.span);
    }
    if (peek().kind == Tok::LParen) {
      next();
      SurfaceTerm t = term();
      expect(Tok::RParen);
      return t;
    }
    fail(std::string("expected a term, found ") + tok_name(peek().kind), peek().span);
  }

  // -- types ---------------------------------------------------------------

  CaptureSet cset() {
    expect(Tok::LBrace);
    std::vector<Name> names;
    bool star = false;
    if (peek().kind != Tok::RBrace) {
      for (;;) {
        if (peek().kind == Tok::Star) {
          next();
          star = true;
        } else {
          names.push_back(resolve(expect(Tok::Ident), false));
        }
        if (peek().kind != Tok::Comma) break;
        next();
      }
    }
    expect(Tok::RBrace);
    return CaptureSet(std::move(names), star);
  }

  Shape pure_shape(const char* what) {
    SourceSpan at = peek().span;
    Type t = type();
    if (!t.capture.empty()) fail(std::string(what) + " must be a shape type without a capture set", at);
    return t.shape;
  }

  Type type() {
    if (peek().kind == Tok::LBrace) {
      SourceSpan at = peek().span;
      CaptureSet c = cset();
      Type t = arrow();
      if (!t.capture.empty()) fail("nested capture sets", at);
      return Type{c, t.shape};
    }
    return arrow();
  }

  Type arrow() {
    Type lhs = operand();
    if (peek().kind != Tok::Arrow) return lhs;
    next();
    Type rhs = type();
    return pure(arrow_shape(lhs, rhs));
  }

  Type operand() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::KwTop:
        next();
        return pure(top_shape());
      case Tok::Ident:
        next();
        return pure(tvar_shape(resolve(t, true)));
      case Tok::KwBoxT: {
        next();
        if (peek().kind == Tok::LBrace) {
          SourceSpan at = peek().span;
          CaptureSet c = cset();
          Type inner = operand();
          if (!inner.capture.empty()) fail("nested capture sets", at);
          return pure(box_shape(Type{c, inner.shape}));
        }
        return pure(box_shape(operand()));
      }
      case Tok::LParen: {
        next();
        Type inner = type();
        expect(Tok::RParen);
        return inner;
      }
      case Tok::KwForall: {
        next();
        if (peek().kind == Tok::LParen) {
          next();
          Token id = expect(Tok::Ident);
          expect(Tok::Colon);
          Type pt = type();
          expect(Tok::RParen);
          expect(Tok::Arrow);
          Name n = fresh_name(id.text);
          Type res = scoped(n, false, [&] { return type(); });
          return pure(fun_shape(n, pt, res));
        }
        expect(Tok::LBracket);
        Token id = expect(Tok::Ident);
        expect(Tok::SubType);
        Shape bound = pure_shape("type bound");
        expect(Tok::RBracket);
        expect(Tok::Arrow);
        Name n = fresh_name(id.text);
        Type res = scoped(n, true, [&] { return type(); });
        return pure(tfun_shape(n, bound, res));
      }
      default:
        fail(std::string("expected a type, found ") + tok_name(t.kind), t.span);
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  ParseOptions opts_;
  std::vector<Entry> scope_;
};

template <class T, class F>
Result<T> run_parser(std::string_view src, const ParseOptions& opts, F&& f) {
  auto toks = lex(src, opts.file);
  if (!toks) return toks.error();
  try {
    Parser p(std::move(toks).value(), opts);
    return f(p);
  } catch (const ParseError& e) {
    return e.diag;
  }
}

}  // namespace detail

inline Result<SurfaceTerm> parse(std::string_view src, const ParseOptions& opts = {}) {
  return detail::run_parser<SurfaceTerm>(src, opts, [](detail::Parser& p) { return p.whole_term(); });
}

inline Result<SurfaceProgram> parse_surface_program(std::string_view src, const ParseOptions& opts = {}) {
  return detail::run_parser<SurfaceProgram>(src, opts, [](detail::Parser& p) { return p.program(); });
}

inline Result<Type> parse_type(std::string_view src, const ParseOptions& opts = {}) {
  return detail::run_parser<Type>(src, opts, [](detail::Parser& p) { return p.whole_type(); });
}

// ---------------------------------------------------------------------------
// MNF normalization
// ---------------------------------------------------------------------------

namespace detail {

inline Term mnf(const SurfaceTerm& t);

/// Returns a name for `t`, pushing a binding onto `lets` when `t` is not
/// already a variable.
inline Name atomize(const SurfaceTerm& t, std::vector<std::pair<Name, Term>>& lets) {
  if (const auto* v = std::get_if<surface::Var>(&t->node)) return v->name;
  Name n = fresh_name("t");
  lets.emplace_back(n, mnf(t));
  return n;
}

inline Term wrap(std::vector<std::pair<Name, Term>> lets, Term body, const SourceSpan& span) {
  for (auto it = lets.rbegin(); it != lets.rend(); ++it)
    body = mk::node(Let{it->first, it->second, body}, span);
  return body;
}

inline Term mnf(const SurfaceTerm& t) {
  const SourceSpan& sp = t->span;
  return std::visit(
      overloaded{
          [&](const surface::Var& v) { return mk::node(Var{v.name}, sp); },
          [&](const surface::Abs& a) { return mk::node(Abs{a.param, a.param_type, mnf(a.body)}, sp); },
          [&](const surface::TAbs& a) { return mk::node(TAbs{a.tparam, a.bound, mnf(a.body)}, sp); },
          [&](const surface::Let& l) { return mk::node(Let{l.binder, mnf(l.bound), mnf(l.body)}, sp); },
          [&](const surface::App& a) {
            std::vector<std::pair<Name, Term>> lets;
            Name f = atomize(a.fn, lets);
            Name x = atomize(a.arg, lets);
            return wrap(std::move(lets), mk::node(App{f, x}, sp), sp);
          },
          [&](const surface::TApp& a) {
            std::vector<std::pair<Name, Term>> lets;
            Name f = atomize(a.fn, lets);
            return wrap(std::move(lets), mk::node(TApp{f, a.type_arg}, sp), sp);
          },
          [&](const surface::Box& b) {
            std::vector<std::pair<Name, Term>> lets;
            Name x = atomize(b.operand, lets);
            return wrap(std::move(lets), mk::node(BoxVal{x}, sp), sp);
          },
          [&](const surface::Unbox& u) {
            std::vector<std::pair<Name, Term>> lets;
            Name x = atomize(u.operand, lets);
            return wrap(std::move(lets), mk::node(Unbox{u.keys, x}, sp), sp);
          },
      },
      t->node);
}

}  // namespace detail

inline Term to_mnf(const SurfaceTerm& t) { return detail::mnf(t); }

inline Program to_mnf(const SurfaceProgram& p) {
  Program out;
  for (const auto& prim : p.prims) out.prims.push_back(Prim{prim.name, prim.type, to_mnf(prim.value), prim.span});
  out.body = to_mnf(p.body);
  return out;
}

/// Embeds an MNF term back into the surface language.
inline SurfaceTerm to_surface(const Term& t) {
  const SourceSpan& sp = t->span;
  auto var = [&](const Name& n) { return make_surface(surface::Var{n}, sp); };
  return std::visit(
      overloaded{
          [&](const Var& v) { return var(v.name); },
          [&](const Abs& a) { return make_surface(surface::Abs{a.param, a.param_type, to_surface(a.body)}, sp); },
          [&](const TAbs& a) { return make_surface(surface::TAbs{a.tparam, a.bound, to_surface(a.body)}, sp); },
          [&](const BoxVal& b) { return make_surface(surface::Box{var(b.name)}, sp); },
          [&](const App& a) { return make_surface(surface::App{var(a.fn), var(a.arg)}, sp); },
          [&](const TApp& a) { return make_surface(surface::TApp{var(a.fn), a.type_arg}, sp); },
          [&](const Let& l) {
            return make_surface(surface::Let{l.binder, to_surface(l.bound), to_surface(l.body)}, sp);
          },
          [&](const Unbox& u) { return make_surface(surface::Unbox{u.keys, var(u.name)}, sp); },
      },
      t->node);
}

/// Parses and normalizes a single term.
inline Result<Term> parse_term(std::string_view src, const ParseOptions& opts = {}) {
  auto s = parse(src, opts);
  if (!s) return s.error();
  return to_mnf(*s);
}

inline Result<Program> parse_program(std::string_view src, const ParseOptions& opts = {}) {
  auto s = parse_surface_program(src, opts);
  if (!s) return s.error();
  return to_mnf(*s);
}

inline void collect_fv(const SurfaceTerm& t, NameSet& out) {
  auto under = [&](const Name& b, const SurfaceTerm& body) {
    NameSet inner;
    collect_fv(body, inner);
    inner.erase(b);
    out.insert(inner.begin(), inner.end());
  };
  std::visit(overloaded{
                 [&](const surface::Var& v) { out.insert(v.name); },
                 [&](const surface::Abs& a) {
                   collect_fv(a.param_type, out);
                   under(a.param, a.body);
                 },
                 [&](const surface::TAbs& a) {
                   collect_fv(a.bound, out);
                   under(a.tparam, a.body);
                 },
                 [&](const surface::App& a) {
                   collect_fv(a.fn, out);
                   collect_fv(a.arg, out);
                 },
                 [&](const surface::TApp& a) {
                   collect_fv(a.fn, out);
                   collect_fv(a.type_arg, out);
                 },
                 [&](const surface::Let& l) {
                   collect_fv(l.bound, out);
                   under(l.binder, l.body);
                 },
                 [&](const surface::Box& b) { collect_fv(b.operand, out); },
                 [&](const surface::Unbox& u) {
                   collect_fv(u.keys, out);
                   collect_fv(u.operand, out);
                 },
             },
             t->node);
}

}  // namespace capcheck
