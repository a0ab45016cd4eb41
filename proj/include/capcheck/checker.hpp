#pragma once

// Type synthesis and checking.

#include <map>
#include <string>

#include "capture.hpp"
#include "diagnostic.hpp"
#include "parser.hpp"
#include "printer.hpp"
#include "subtyping.hpp"
#include "syntax.hpp"

namespace capcheck {

struct CheckerOptions {
  SubtypeOptions subtyping;
  /// Mutation switch: accept `*` in unbox key sets. Only for testing that the
  /// test suites notice a broken checker.
  bool allow_star_keys = false;
  /// Optional per-rule firing counters ("var", "abs", ...).
  std::map<std::string, std::size_t>* counters = nullptr;
};

namespace detail {

class TypeError : public std::exception {
 public:
  explicit TypeError(Diagnostic d) : diag(std::move(d)) {}
  const char* what() const noexcept override { return diag.message.c_str(); }
  Diagnostic diag;
};

class Checker {
 public:
  explicit Checker(CheckerOptions opts) : opts_(std::move(opts)) {}

  Type synth(const Env& env, const Term& t) {
    return std::visit([&](const auto& n) { return apply_rule(env, t, n); }, t->node);
  }

  bool sub(const Env& env, const Type& a, const Type& b) {
    try {
      return subtype(env, a, b, opts_.subtyping);
    } catch (const SubtypeLimit&) {
      throw TypeError(make_diag(code::kLimit, "subtyping did not terminate within its budget"));
    }
  }

  bool subsh(const Env& env, const Shape& a, const Shape& b) {
    try {
      return subshape(env, a, b, opts_.subtyping);
    } catch (const SubtypeLimit&) {
      throw TypeError(make_diag(code::kLimit, "subtyping did not terminate within its budget"));
    }
  }

  [[noreturn]] static void fail(const char* code, std::string msg, const Term& t) {
    throw TypeError(make_diag(code, std::move(msg), t->span));
  }

 private:
  void count(const char* rule) {
    if (opts_.counters) ++(*opts_.counters)[rule];
  }

  static std::string show(const Name& n) { return "'" + n.text + "'"; }

  Type lookup(const Env& env, const Name& x, const Term& at) {
    const Binding* b = env.find(x);
    if (!b) fail(code::kUnbound, "unbound variable " + show(x), at);
    const auto* tb = std::get_if<TermBinding>(b);
    if (!tb) fail(code::kUnbound, show(x) + " is a type variable, expected a term", at);
    return tb->type;
  }

  Type var_type(const Env& env, const Name& x, const Term& at) {
    return Type{CaptureSet{x}, lookup(env, x, at).shape};
  }

  Type apply_rule(const Env& env, const Term& t, const Var& v) {
    count("var");
    return var_type(env, v.name, t);
  }

  Type apply_rule(const Env& env, const Term& t, const Abs& a) {
    count("abs");
    if (!wf_type(env, a.param_type))
      fail(code::kWf, "ill-formed parameter type " + print(a.param_type), t);
    Name x = a.param;
    Term body = a.body;
    if (env.binds(x)) {
      x = freshen(a.param);
      body = subst_var(a.body, a.param, x);
    }
    Type result = synth(env.with_term(x, a.param_type), body);
    CaptureSet c = cv(body).without(x);
    return Type{c, fun_shape(x, a.param_type, result)};
  }

  Type apply_rule(const Env& env, const Term& t, const TAbs& a) {
    count("tabs");
    if (!wf_shape(env, a.bound)) fail(code::kWf, "ill-formed type bound " + print(a.bound), t);
    Name x = a.tparam;
    Term body = a.body;
    if (env.binds(x)) {
      x = freshen(a.tparam);
      body = subst_type_var(a.body, a.tparam, tvar_shape(x));
    }
    Type result = synth(env.with_type(x, a.bound), body);
    return Type{cv(body), tfun_shape(x, a.bound, result)};
  }

  Type apply_rule(const Env& env, const Term& t, const BoxVal& b) {
    count("box");
    return pure(box_shape(var_type(env, b.name, t)));
  }

  Type apply_rule(const Env& env, const Term& t, const App& a) {
    count("app");
    Type ft = lookup(env, a.fn, t);
    Shape s = expose(env, ft.shape);
    const auto* f = shape_as<FunShape>(s);
    if (!f) fail(code::kNotFun, show(a.fn) + " has type " + print(ft) + ", which is not a function", t);
    Type at = var_type(env, a.arg, t);
    if (!sub(env, at, f->param_type)) {
      Diagnostic d = make_diag(code::kArg,
                               "argument " + show(a.arg) + " of type " + print(at) +
                                   " does not conform to parameter type " + print(f->param_type),
                               t->span);
      throw TypeError(std::move(d));
    }
    return subst_var(f->result, f->param, a.arg);
  }

  Type apply_rule(const Env& env, const Term& t, const TApp& a) {
    count("tapp");
    if (!wf_shape(env, a.type_arg)) fail(code::kWf, "ill-formed type argument " + print(a.type_arg), t);
    Type ft = lookup(env, a.fn, t);
    Shape s = expose(env, ft.shape);
    const auto* f = shape_as<TFunShape>(s);
    if (!f) fail(code::kNotTFun, show(a.fn) + " has type " + print(ft) + ", which is not a type function", t);
    if (!subsh(env, a.type_arg, f->bound))
      fail(code::kTArg, "type argument " + print(a.type_arg) + " exceeds bound " + print(f->bound), t);
    return subst_type_var(f->result, f->tparam, a.type_arg);
  }

  Type apply_rule(const Env& env, const Term& t, const Unbox& u) {
    count("unbox");
    if (u.keys.has_star() && !opts_.allow_star_keys)
      fail(code::kRootLeak,
           "the key set of this unbox is not allowed to capture the root capability `*`", t);
    if (!wf_cset(env, u.keys)) fail(code::kWf, "ill-formed key set " + print(u.keys), t);
    Type bt = lookup(env, u.name, t);
    Shape s = expose(env, bt.shape);
    const auto* b = shape_as<BoxShape>(s);
    if (!b) fail(code::kNotBox, show(u.name) + " has type " + print(bt) + ", which is not a box", t);
    if (!subcapture(env, CaptureSet{u.name}, CaptureSet{}))
      fail(code::kNotBox,
           show(u.name) + " has type " + print(bt) + "; only a pure box can be opened", t);
    if (!subcapture(env, b->inner.capture, u.keys))
      fail(code::kKeys,
           "box contents " + print(b->inner) + " are not accounted for by the keys " + print(u.keys), t);
    return Type{u.keys, b->inner.shape};
  }

  Type apply_rule(const Env& env, const Term&, const Let& l) {
    count("let");
    Type bound = synth(env, l.bound);
    Name x = l.binder;
    Term body = l.body;
    if (env.binds(x)) {
      x = freshen(l.binder);
      body = subst_var(l.body, l.binder, x);
    }
    Type result = synth(env.with_term(x, bound), body);
    return avoid(x, bound.capture, result);
  }

  CheckerOptions opts_;
};

}  // namespace detail

/// Synthesizes the most specific type of `t` in `env`.
inline Result<Type> synth(const Env& env, const Term& t, const CheckerOptions& opts = {}) {
  try {
    return detail::Checker(opts).synth(env, t);
  } catch (const detail::TypeError& e) {
    return e.diag;
  }
}

/// Checks `t` against `expected` (subsumption at the root).
inline Result<bool> check_type(const Env& env, const Term& t, const Type& expected,
                               const CheckerOptions& opts = {}) {
  if (!wf_type(env, expected)) return make_diag(code::kWf, "ill-formed expected type " + print(expected), t->span);
  try {
    detail::Checker c(opts);
    Type actual = c.synth(env, t);
    if (!c.sub(env, actual, expected))
      return make_diag(code::kMismatch,
                       "expected " + print(expected) + ", found " + print(actual), t->span);
    return true;
  } catch (const detail::TypeError& e) {
    return e.diag;
  }
}

// ---------------------------------------------------------------------------
// Programs
// ---------------------------------------------------------------------------

struct TypedProgram {
  /// `prim` bindings, each at its `{*} S` annotation.
  Env platform;
  Type type;
};

/// Checks the platform declarations and then synthesizes the body's type in
/// the platform environment.
inline Result<Env> check_platform(const std::vector<Prim>& prims, const CheckerOptions& opts = {}) {
  Env env;
  for (const Prim& p : prims) {
    auto bad = [&](std::string msg) {
      return make_diag(code::kPlatform, "primitive '" + p.name.text + "': " + msg, p.span);
    };
    if (!is_value(p.value)) return bad("the bound term must be a value");
    if (!free_vars(p.value).empty()) return bad("the bound value must be closed");
    if (!(p.type.capture == CaptureSet::universal())) return bad("the declared type must have capture set {*}");
    if (!wf_type(env, p.type)) return bad("ill-formed declared type " + print(p.type));
    auto ok = check_type(env, p.value, p.type, opts);
    if (!ok) {
      Diagnostic d = bad("value does not check at " + print(p.type));
      d.notes.push_back({ok.error().code + ": " + ok.error().message, ok.error().span});
      return d;
    }
    env = env.with_term(p.name, p.type);
  }
  return env;
}

inline Result<TypedProgram> check_program(const Program& prog, const CheckerOptions& opts = {}) {
  auto env = check_platform(prog.prims, opts);
  if (!env) return env.error();
  auto t = synth(*env, prog.body, opts);
  if (!t) return t.error();
  return TypedProgram{*env, *t};
}

}  // namespace capcheck
