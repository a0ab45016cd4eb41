#pragma once

// Random generation of well-typed programs and property-based checking of
// the calculus' metatheory over their reductions.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "capture.hpp"
#include "checker.hpp"
#include "evaluator.hpp"
#include "json.hpp"
#include "parser.hpp"
#include "printer.hpp"
#include "subtyping.hpp"
#include "syntax.hpp"

namespace capcheck {

struct GenConfig {
  std::uint64_t seed = 1;
  int max_depth = 5;
  int max_env = 4;
  double star_bias = 0.3;
  double box_bias = 0.25;
  double let_bias = 0.5;
  /// Lets generated unbox forms use `*` keys; pairs with the checker's
  /// mutation switch.
  bool allow_star_keys = false;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

// ---------------------------------------------------------------------------
// Generator
// ---------------------------------------------------------------------------

class Generator {
 public:
  Generator(GenConfig cfg, std::uint64_t seed, CheckerOptions copts = {})
      : cfg_(cfg), rng_(seed), copts_(std::move(copts)) {
    copts_.allow_star_keys = copts_.allow_star_keys || cfg_.allow_star_keys;
  }

  // -- types ---------------------------------------------------------------

  CaptureSet gen_cset(const Env& env, bool allow_star) {
    std::vector<Name> names;
    for (const Name& n : env.term_names())
      if (coin(0.25)) names.push_back(n);
    return CaptureSet(std::move(names), allow_star && coin(cfg_.star_bias));
  }

  Shape gen_shape(const Env& env, int depth) {
    auto tvars = type_vars(env);
    if (depth <= 1) {
      if (!tvars.empty() && coin(0.4)) return tvar_shape(pick(tvars));
      return top_shape();
    }
    double r = unit();
    if (r < 0.2) return top_shape();
    if (r < 0.3 && !tvars.empty()) return tvar_shape(pick(tvars));
    if (r < 0.6) {
      Name x = fresh_name(param_text());
      Type u = gen_type(env, depth - 1);
      return fun_shape(x, u, gen_type(env.with_term(x, u), depth - 1));
    }
    if (r < 0.75) {
      Name x = fresh_name("X");
      Shape b = gen_shape(env, depth - 1);
      return tfun_shape(x, b, gen_type(env.with_type(x, b), depth - 1));
    }
    return box_shape(gen_type(env, depth - 1));
  }

  Type gen_type(const Env& env, int depth) { return Type{gen_cset(env, true), gen_shape(env, depth)}; }

  // -- terms ---------------------------------------------------------------

  /// A term that synthesizes in `env`. Never fails: falls back to a variable
  /// or the identity on Top.
  Term gen_term(const Env& env, int depth) {
    for (int attempt = 0; attempt < 8; ++attempt) {
      std::optional<Term> t = attempt_term(env, depth);
      if (t && synth_ok(env, *t)) return *t;
    }
    return fallback_term(env);
  }

  /// A term that checks against `goal`, or nothing if none was found.
  std::optional<Term> gen_goal(const Env& env, const Type& goal, int depth) {
    for (int attempt = 0; attempt < 4; ++attempt) {
      std::optional<Term> t = attempt_goal(env, goal, depth - attempt);
      if (t && check_ok(env, *t, goal)) return t;
    }
    return std::nullopt;
  }

  /// A closed program: closed primitive values typed at `{*} S`, then a
  /// let-structured body over them.
  std::optional<Program> gen_program() {
    Program p;
    Env env;
    int n = cfg_.max_env <= 0 ? 0 : static_cast<int>(below(cfg_.max_env) + 1);
    for (int i = 0; i < n; ++i) {
      std::optional<Term> v = gen_closed_value();
      if (!v) continue;
      auto ty = synth(Env{}, *v, copts_);
      if (!ty) continue;
      Type annot{CaptureSet::universal(), ty->shape};
      Name name = fresh_name(prim_text(i));
      p.prims.push_back(Prim{name, annot, *v, {}});
      env = env.with_term(name, annot);
    }
    p.body = gen_body(env, cfg_.max_depth);
    if (!check_program(p, copts_)) return std::nullopt;
    return p;
  }

  const CheckerOptions& checker_options() const { return copts_; }

 private:
  // -- helpers -------------------------------------------------------------

  bool coin(double p) { return unit() < p; }
  double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  std::size_t below(std::size_t n) { return n == 0 ? 0 : std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

  std::string param_text() { return std::string(1, "xyzuvw"[below(6)]); }
  static std::string prim_text(int i) {
    static const char* names[] = {"io", "fs", "net", "ct", "log", "rnd", "clk", "db"};
    return i < 8 ? names[i] : "p" + std::to_string(i);
  }

  static std::vector<Name> type_vars(const Env& env) {
    std::vector<Name> out;
    for (const auto& b : env.bindings())
      if (const auto* tb = std::get_if<TypeBinding>(&b)) out.push_back(tb->name);
    return out;
  }

  static std::vector<TermBinding> term_vars(const Env& env) {
    std::vector<TermBinding> out;
    for (const auto& b : env.bindings())
      if (const auto* tb = std::get_if<TermBinding>(&b)) out.push_back(*tb);
    return out;
  }

  bool synth_ok(const Env& env, const Term& t) { return synth(env, t, copts_).ok(); }
  bool check_ok(const Env& env, const Term& t, const Type& goal) {
    auto r = check_type(env, t, goal, copts_);
    return r.ok() && *r;
  }
  bool sub_ok(const Env& env, const Type& a, const Type& b) {
    try {
      return subtype(env, a, b, copts_.subtyping);
    } catch (const SubtypeLimit&) {
      return false;
    }
  }

  static Term identity_top() {
    Name x = fresh_name("x");
    return mk::abs(x, pure(top_shape()), mk::var(x));
  }

  Term fallback_term(const Env& env) {
    auto vars = term_vars(env);
    if (!vars.empty()) return mk::var(pick(vars).name);
    return identity_top();
  }

  std::vector<TermBinding> vars_matching(const Env& env, const Type& goal) {
    std::vector<TermBinding> out;
    for (const auto& tb : term_vars(env))
      if (sub_ok(env, Type{CaptureSet{tb.name}, tb.type.shape}, goal)) out.push_back(tb);
    return out;
  }

  template <class ShapeT>
  std::vector<std::pair<TermBinding, const ShapeT*>> vars_with_shape(const Env& env,
                                                                      std::vector<Shape>& keep) {
    std::vector<std::pair<TermBinding, const ShapeT*>> out;
    for (const auto& tb : term_vars(env)) {
      Shape s = expose(env, tb.type.shape);
      if (const auto* x = shape_as<ShapeT>(s)) {
        keep.push_back(s);
        out.emplace_back(tb, x);
      }
    }
    return out;
  }

  // -- term forms ----------------------------------------------------------

  enum class Form { Var, Abs, TAbs, App, TApp, Box, Let };

  Form choose_form(int depth) {
    double let_w = depth > 1 ? cfg_.let_bias : 0.0;
    double box_w = cfg_.box_bias;
    double total = let_w + box_w;
    double scale = total > 1.0 ? 1.0 / total : 1.0;
    double r = unit();
    if (r < let_w * scale) return Form::Let;
    if (r < (let_w + box_w) * scale) return Form::Box;
    if (depth <= 1) {
      static const Form leaf[] = {Form::Var, Form::App, Form::App, Form::TApp, Form::Abs};
      return leaf[below(5)];
    }
    static const Form inner[] = {Form::Var, Form::Abs, Form::TAbs, Form::App, Form::App, Form::TApp};
    return inner[below(6)];
  }

  std::optional<Term> attempt_term(const Env& env, int depth) {
    switch (choose_form(depth)) {
      case Form::Var: {
        auto vars = term_vars(env);
        if (vars.empty()) return std::nullopt;
        return mk::var(pick(vars).name);
      }
      case Form::Abs: {
        Name x = fresh_name(param_text());
        Type u = gen_type(env, std::min(depth, 3));
        return mk::abs(x, u, gen_term(env.with_term(x, u), depth - 1));
      }
      case Form::TAbs: {
        Name x = fresh_name("X");
        Shape b = gen_shape(env, std::min(depth, 2));
        return mk::tabs(x, b, gen_term(env.with_type(x, b), depth - 1));
      }
      case Form::App: return attempt_app(env, depth);
      case Form::TApp: return attempt_tapp(env, depth);
      case Form::Box: return attempt_box(env);
      case Form::Let: {
        Term s = coin(0.6) ? gen_value(env, depth - 1) : gen_term(env, depth - 1);
        auto t1 = synth(env, s, copts_);
        if (!t1) return std::nullopt;
        Name x = fresh_name(let_text());
        return mk::let(x, s, gen_term(env.with_term(x, *t1), depth - 1));
      }
    }
    return std::nullopt;
  }

  std::string let_text() { return std::string(1, "abcdefgh"[below(8)]); }

  Term gen_value(const Env& env, int depth) {
    for (int attempt = 0; attempt < 6; ++attempt) {
      double r = unit();
      std::optional<Term> t;
      if (r < 0.6) {
        Name x = fresh_name(param_text());
        Type u = gen_type(env, std::min(std::max(depth, 1), 3));
        t = mk::abs(x, u, gen_term(env.with_term(x, u), depth - 1));
      } else if (r < 0.8) {
        Name x = fresh_name("X");
        Shape b = gen_shape(env, std::min(std::max(depth, 1), 2));
        t = mk::tabs(x, b, gen_term(env.with_type(x, b), depth - 1));
      } else {
        auto vars = term_vars(env);
        if (vars.empty()) continue;
        t = mk::box(pick(vars).name);
      }
      if (t && synth_ok(env, *t)) return *t;
    }
    return identity_top();
  }

  std::optional<Term> attempt_app(const Env& env, int depth) {
    std::vector<Shape> keep;
    auto fns = vars_with_shape<FunShape>(env, keep);
    if (fns.empty()) return std::nullopt;
    const auto& [fb, f] = fns[below(fns.size())];
    auto args = vars_matching(env, f->param_type);
    if (!args.empty() && (depth <= 1 || coin(0.7))) return mk::app(fb.name, pick(args).name);
    if (depth <= 1) return std::nullopt;
    auto arg = gen_goal(env, f->param_type, depth - 1);
    if (!arg) return std::nullopt;
    Name y = fresh_name(let_text());
    return mk::let(y, *arg, mk::app(fb.name, y));
  }

  std::optional<Term> attempt_tapp(const Env& env, int depth) {
    std::vector<Shape> keep;
    auto fns = vars_with_shape<TFunShape>(env, keep);
    if (fns.empty()) return std::nullopt;
    const auto& [fb, f] = fns[below(fns.size())];
    std::vector<Shape> cands{f->bound};
    for (const Name& x : type_vars(env)) cands.push_back(tvar_shape(x));
    for (int i = 0; i < 2; ++i) cands.push_back(gen_shape(env, std::min(depth, 2)));
    std::vector<Shape> ok;
    for (const Shape& s : cands) {
      try {
        if (subshape(env, s, f->bound, copts_.subtyping)) ok.push_back(s);
      } catch (const SubtypeLimit&) {
      }
    }
    if (ok.empty()) return std::nullopt;
    return mk::tapp(fb.name, pick(ok));
  }

  CaptureSet gen_keys(const Env& env, const CaptureSet& inner) {
    if (copts_.allow_star_keys && coin(0.5)) return CaptureSet::universal();
    CaptureSet keys = inner.with_star(false);
    for (const Name& n : env.term_names())
      if (coin(0.15)) keys = keys.with(n);
    return keys;
  }

  std::optional<Term> attempt_box(const Env& env) {
    double r = unit();
    auto vars = term_vars(env);
    if (r < 0.35) {
      // unbox an existing pure box
      std::vector<Shape> keep;
      auto boxes = vars_with_shape<BoxShape>(env, keep);
      std::vector<std::pair<TermBinding, const BoxShape*>> usable;
      for (const auto& b : boxes)
        if ((!b.second->inner.capture.has_star() || copts_.allow_star_keys) &&
            subcapture(env, CaptureSet{b.first.name}, CaptureSet{}))
          usable.push_back(b);
      if (!usable.empty()) {
        const auto& [bb, bs] = usable[below(usable.size())];
        return mk::unbox(gen_keys(env, bs->inner.capture), bb.name);
      }
    }
    if (vars.empty()) return std::nullopt;
    const TermBinding& x = pick(vars);
    if (r < 0.55) return mk::box(x.name);
    // box/unbox round trip: let b = box x in unbox {keys} b
    CaptureSet keys = CaptureSet{x.name};
    if (copts_.allow_star_keys && coin(0.5))
      keys = CaptureSet::universal();
    else if (!x.type.capture.has_star() && coin(0.5))
      keys = gen_keys(env, x.type.capture);
    Name b = fresh_name(let_text());
    return mk::let(b, mk::box(x.name), mk::unbox(keys, b));
  }

  std::optional<Term> attempt_goal(const Env& env, const Type& goal, int depth) {
    auto vars = vars_matching(env, goal);
    if (!vars.empty() && (depth <= 1 || coin(0.4))) return mk::var(pick(vars).name);
    if (depth > 1 && coin(cfg_.let_bias * 0.5)) {
      Term s = gen_term(env, depth - 1);
      auto t1 = synth(env, s, copts_);
      if (t1) {
        Name w = fresh_name(let_text());
        auto body = gen_goal(env.with_term(w, *t1), goal, depth - 1);
        if (body) return mk::let(w, s, *body);
      }
    }
    Shape s = goal.shape;
    if (shape_as<TopShape>(s)) {
      if (depth > 1 && coin(0.5)) return gen_term(env, depth - 1);
      return identity_top();
    }
    if (const auto* f = shape_as<FunShape>(s)) {
      Name z = fresh_name(f->param.text);
      Env inner = env.with_term(z, f->param_type);
      auto body = gen_goal(inner, subst_var(f->result, f->param, z), depth - 1);
      if (!body) return std::nullopt;
      return mk::abs(z, f->param_type, *body);
    }
    if (const auto* f = shape_as<TFunShape>(s)) {
      Name x = fresh_name(f->tparam.text);
      Env inner = env.with_type(x, f->bound);
      auto body = gen_goal(inner, subst_type_var(f->result, f->tparam, tvar_shape(x)), depth - 1);
      if (!body) return std::nullopt;
      return mk::tabs(x, f->bound, *body);
    }
    if (const auto* b = shape_as<BoxShape>(s)) {
      auto inner = gen_goal(env, b->inner, depth - 1);
      if (!inner) return std::nullopt;
      if (const auto* v = term_as<Var>(*inner)) return mk::box(v->name);
      Name y = fresh_name(let_text());
      return mk::let(y, *inner, mk::box(y));
    }
    return std::nullopt;
  }

  std::optional<Term> gen_closed_value() {
    for (int attempt = 0; attempt < 4; ++attempt) {
      Term v = gen_value(Env{}, std::max(2, cfg_.max_depth - 2));
      if (free_vars(v).empty() && !term_as<BoxVal>(v)) return v;
    }
    return std::nullopt;
  }

  /// Prefers forms that reduce: applications, type applications, unboxing.
  Term gen_active(const Env& env, int depth) {
    for (int attempt = 0; attempt < 6; ++attempt) {
      std::optional<Term> t;
      double r = unit();
      if (r < 0.5) t = attempt_app(env, depth);
      else if (r < 0.7) t = attempt_tapp(env, depth);
      else if (r < 0.7 + 0.3 * cfg_.box_bias * 2) t = attempt_box(env);
      else t = attempt_term(env, depth);
      if (t && synth_ok(env, *t)) return *t;
    }
    return gen_term(env, depth);
  }

  /// Let chains binding values and intermediate results, ending in an
  /// active form.
  Term gen_body(const Env& env, int depth) {
    int lets = static_cast<int>(below(static_cast<std::size_t>(std::max(1, cfg_.max_env)) + 1));
    std::vector<std::pair<Name, Term>> chain;
    Env cur = env;
    for (int i = 0; i < lets; ++i) {
      Term s = coin(cfg_.let_bias) ? gen_value(cur, depth - 1) : gen_active(cur, depth - 1);
      auto t1 = synth(cur, s, copts_);
      if (!t1) continue;
      Name x = fresh_name(let_text());
      chain.emplace_back(x, s);
      cur = cur.with_term(x, *t1);
    }
    Term body = gen_active(cur, depth);
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) body = mk::let(it->first, it->second, body);
    return body;
  }

  GenConfig cfg_;
  std::mt19937_64 rng_;
  CheckerOptions copts_;
};

// ---------------------------------------------------------------------------
// Properties
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& property_names() {
  static const std::vector<std::string> names = {
      "generator", "progress", "preservation", "capture-answers",
      "capture-terms", "authority", "used", "determinism",
  };
  return names;
}

struct PropertyFailure {
  std::uint64_t seed;
  std::string term;
  std::string expected;
  std::string actual;
};

struct PropertyReport {
  std::string name;
  std::size_t cases = 0;
  std::size_t resampled = 0;
  std::vector<PropertyFailure> failures;
};

struct RunConfig {
  GenConfig gen;
  std::size_t cases = 1000;
  std::size_t max_steps = 200;
  std::vector<std::string> properties;  // empty = all
  CheckerOptions checker;
};

/// Rule firing counts gathered across a property run.
struct Coverage {
  std::map<std::string, std::size_t> typing;
  std::map<std::string, std::size_t> evaluation;
};

namespace detail {

struct Violation {
  std::string expected;
  std::string actual;
};

/// A program together with its reduction sequence.
struct Execution {
  Program program;
  Env platform_env;
  std::size_t platform_size;
  std::vector<Term> states;  // states[0] is the whole program
  std::vector<TraceStep> steps;
  Outcome outcome;
  std::string stuck_reason;
};

inline std::optional<Execution> execute(const Program& p, std::size_t max_steps, const CheckerOptions& opts) {
  auto env = check_platform(p.prims, opts);
  if (!env) return std::nullopt;
  Execution ex{p, *env, p.prims.size(), {program_term(p)}, {}, Outcome::Timeout, {}};
  RunResult r = run(ex.states[0], max_steps, [&](const TraceStep& s) { ex.states.push_back(s.term); });
  ex.steps = r.trace.steps;
  ex.outcome = r.outcome;
  ex.stuck_reason = r.stuck_reason;
  return ex;
}

/// Removes the first `n` lets of `t`, which must be there.
inline std::optional<Term> strip_lets(const Term& t, std::size_t n) {
  Term cur = t;
  for (std::size_t i = 0; i < n; ++i) {
    const auto* l = term_as<Let>(cur);
    if (!l) return std::nullopt;
    cur = l->body;
  }
  return cur;
}

/// Typing environment matching a store: platform bindings at their `{*} S`
/// types, the remaining bindings at their synthesized types.
inline Result<Env> matching_env(const Execution& ex, const StoreContext& store, const CheckerOptions& opts) {
  StoreContext rest;
  for (std::size_t i = ex.platform_size; i < store.bindings.size(); ++i) rest.bindings.push_back(store.bindings[i]);
  return store_env(rest, ex.platform_env, opts);
}

inline std::string show(const Term& t) { return print(t); }

using PropertyFn = std::function<std::optional<Violation>(const Execution&, const CheckerOptions&)>;

inline std::optional<Violation> prop_generator(const Execution& ex, const CheckerOptions& opts) {
  auto r = check_program(ex.program, opts);
  if (!r) return Violation{"program typechecks", r.error().code + ": " + r.error().message};
  return std::nullopt;
}

inline std::optional<Violation> prop_progress(const Execution& ex, const CheckerOptions&) {
  if (ex.outcome == Outcome::Stuck)
    return Violation{"every state is an answer or steps",
                     "stuck after " + std::to_string(ex.steps.size()) + " steps: " + ex.stuck_reason};
  return std::nullopt;
}

inline std::optional<Violation> prop_preservation(const Execution& ex, const CheckerOptions& opts) {
  for (std::size_t i = 0; i < ex.steps.size(); ++i) {
    Split sp = canonical_split(ex.states[i]);
    auto delta = matching_env(ex, sp.store, opts);
    if (!delta) return Violation{"store matches an environment", delta.error().message};
    auto ty = synth(*delta, sp.plug, opts);
    if (!ty) return Violation{"plug typechecks at step " + std::to_string(i), ty.error().message};
    auto next = strip_lets(ex.states[i + 1], sp.store.bindings.size());
    if (!next) return Violation{"store is preserved", "store shrank at step " + std::to_string(i)};
    auto ok = check_type(*delta, *next, *ty, opts);
    if (!ok || !*ok)
      return Violation{"after " + std::string(rule_name(ex.steps[i].rule)) + " at step " + std::to_string(i) +
                           ", plug still has type " + print(*ty),
                       ok ? "rejected" : ok.error().code + ": " + ok.error().message};
  }
  return std::nullopt;
}

inline std::optional<Violation> prop_capture_answers(const Execution& ex, const CheckerOptions& opts) {
  if (ex.outcome != Outcome::Normal) return std::nullopt;
  const Term& fin = ex.states.back();
  auto whole = synth(Env{}, fin, opts);
  if (!whole) return Violation{"final term typechecks", whole.error().message};
  CaptureSet c = cv(fin);
  if (!subcapture(Env{}, c, whole->capture))
    return Violation{"cv(final) <: " + print(whole->capture), "cv(final) = " + print(c)};
  auto body = strip_lets(fin, ex.platform_size);
  if (!body) return Violation{"platform preserved", "platform prefix missing"};
  auto bt = synth(ex.platform_env, *body, opts);
  if (!bt) return Violation{"final body typechecks", bt.error().message};
  CaptureSet bc = cv(*body);
  if (!subcapture(ex.platform_env, bc, bt->capture))
    return Violation{"cv(body) <: " + print(bt->capture), "cv(body) = " + print(bc)};
  return std::nullopt;
}

inline std::optional<Violation> prop_capture_terms(const Execution& ex, const CheckerOptions& opts) {
  if (ex.outcome != Outcome::Normal) return std::nullopt;
  const Term& fin = ex.states.back();
  for (std::size_t i = 0; i < ex.states.size(); ++i) {
    Split sp = canonical_split(ex.states[i]);
    auto delta = matching_env(ex, sp.store, opts);
    if (!delta) return Violation{"store matches an environment", delta.error().message};
    auto ty = synth(*delta, sp.plug, opts);
    if (!ty) return Violation{"plug typechecks at state " + std::to_string(i), ty.error().message};
    auto rest = strip_lets(fin, sp.store.bindings.size());
    if (!rest) return Violation{"store is preserved", "final term lost the store of state " + std::to_string(i)};
    CaptureSet c = cv(*rest);
    if (!subcapture(*delta, c, ty->capture))
      return Violation{"state " + std::to_string(i) + ": cv of the reached answer <: " + print(ty->capture),
                       "cv = " + print(c)};
  }
  return std::nullopt;
}

inline std::optional<Violation> prop_authority(const Execution& ex, const CheckerOptions&) {
  for (std::size_t i = 0; i + 1 < ex.states.size(); ++i) {
    auto a = strip_lets(ex.states[i], ex.platform_size);
    auto b = strip_lets(ex.states[i + 1], ex.platform_size);
    if (!a || !b) return Violation{"platform preserved", "platform prefix missing"};
    CaptureSet ca = cv(*a), cb = cv(*b);
    if (!cb.subset_of(ca))
      return Violation{"step " + std::to_string(i) + " (" + rule_name(ex.steps[i].rule) + "): cv after ⊆ " + print(ca),
                       "cv after = " + print(cb)};
  }
  return std::nullopt;
}

inline std::optional<Violation> prop_used(const Execution& ex, const CheckerOptions&) {
  std::set<Name> platform;
  for (const Prim& p : ex.program.prims) platform.insert(p.name);
  CaptureSet used;
  for (std::size_t k = ex.steps.size(); k-- > 0;) {
    for (const Name& n : ex.steps[k].used.names())
      if (platform.contains(n)) used = used.with(n);
    auto body = strip_lets(ex.states[k], ex.platform_size);
    if (!body) return Violation{"platform preserved", "platform prefix missing"};
    CaptureSet auth = cv(*body);
    if (!used.subset_of(auth))
      return Violation{"primitives used from state " + std::to_string(k) + " on ⊆ " + print(auth),
                       "used = " + print(used)};
  }
  return std::nullopt;
}

inline std::optional<Violation> prop_determinism(const Execution& ex, const CheckerOptions&) {
  for (std::size_t i = 0; i < ex.states.size(); ++i) {
    std::size_t m = count_rule_matches(ex.states[i]);
    std::size_t expect = i + 1 < ex.states.size() || std::holds_alternative<Stepped>(step(ex.states[i])) ? 1 : 0;
    if (m != expect)
      return Violation{std::to_string(expect) + " matching rule(s) at state " + std::to_string(i),
                       std::to_string(m) + " matching rule(s)"};
  }
  return std::nullopt;
}

inline PropertyFn property_fn(const std::string& name) {
  if (name == "generator") return prop_generator;
  if (name == "progress") return prop_progress;
  if (name == "preservation") return prop_preservation;
  if (name == "capture-answers") return prop_capture_answers;
  if (name == "capture-terms") return prop_capture_terms;
  if (name == "authority") return prop_authority;
  if (name == "used") return prop_used;
  if (name == "determinism") return prop_determinism;
  return nullptr;
}

// -- shrinking ---------------------------------------------------------------

/// One-step shrinks: replace some subterm by one of its immediate subterms,
/// or drop a let whose binder is unused.
inline std::vector<Term> shrink_candidates(const Term& t) {
  std::vector<Term> out;
  const SourceSpan& sp = t->span;
  std::visit(overloaded{
                 [&](const Abs& a) {
                   out.push_back(a.body);
                   for (const Term& b : shrink_candidates(a.body)) out.push_back(mk::node(Abs{a.param, a.param_type, b}, sp));
                 },
                 [&](const TAbs& a) {
                   out.push_back(a.body);
                   for (const Term& b : shrink_candidates(a.body)) out.push_back(mk::node(TAbs{a.tparam, a.bound, b}, sp));
                 },
                 [&](const Let& l) {
                   out.push_back(l.body);
                   out.push_back(l.bound);
                   for (const Term& b : shrink_candidates(l.bound)) out.push_back(mk::node(Let{l.binder, b, l.body}, sp));
                   for (const Term& b : shrink_candidates(l.body)) out.push_back(mk::node(Let{l.binder, l.bound, b}, sp));
                 },
                 [&](const auto&) {},
             },
             t->node);
  return out;
}

inline bool fails(const Program& p, const PropertyFn& fn, const RunConfig& rc, Violation* v) {
  if (!check_program(p, rc.checker)) return false;
  auto ex = execute(p, rc.max_steps, rc.checker);
  if (!ex) return false;
  auto r = fn(*ex, rc.checker);
  if (r && v) *v = *r;
  return r.has_value();
}

inline Program shrink(Program p, const PropertyFn& fn, const RunConfig& rc, Violation& v) {
  for (int round = 0; round < 200; ++round) {
    bool improved = false;
    // Drop primitives first, then shrink the body.
    for (std::size_t i = 0; i < p.prims.size() && !improved; ++i) {
      Program q = p;
      q.prims.erase(q.prims.begin() + static_cast<std::ptrdiff_t>(i));
      if (fails(q, fn, rc, &v)) {
        p = std::move(q);
        improved = true;
      }
    }
    if (!improved) {
      std::size_t size = term_size(p.body);
      for (const Term& c : shrink_candidates(p.body)) {
        if (term_size(c) >= size) continue;
        Program q = p;
        q.body = c;
        if (fails(q, fn, rc, &v)) {
          p = std::move(q);
          improved = true;
          break;
        }
      }
    }
    if (!improved) break;
  }
  return p;
}

inline std::string show_program(const Program& p) {
  std::string out;
  Printer pr;
  for (const Prim& prim : p.prims) {
    std::string ty = pr.type(prim.type);
    std::string v = pr.term(prim.value);
    out += "prim " + pr.name(prim.name) + " : " + ty + " = " + v + " in ";
  }
  return out + pr.term(p.body);
}

}  // namespace detail

inline std::string format_program(const Program& p) { return detail::show_program(p); }

inline std::uint64_t case_seed(std::uint64_t base, const std::string& property, std::uint64_t index) {
  return splitmix64(base ^ fnv1a(property) ^ splitmix64(index));
}

/// Runs one property over `rc.cases` generated programs.
inline PropertyReport run_property(const std::string& name, const RunConfig& rc, Coverage* coverage = nullptr) {
  PropertyReport rep;
  rep.name = name;
  detail::PropertyFn fn = detail::property_fn(name);
  if (!fn) return rep;
  CheckerOptions copts = rc.checker;
  for (std::size_t i = 0; i < rc.cases; ++i) {
    std::uint64_t seed = case_seed(rc.gen.seed, name, i);
    std::optional<Program> prog;
    for (int tries = 0; tries < 16 && !prog; ++tries) {
      if (tries > 0) ++rep.resampled;
      std::uint64_t s = tries == 0 ? seed : splitmix64(seed + static_cast<std::uint64_t>(tries));
      CheckerOptions gen_opts = copts;
      if (coverage) gen_opts.counters = &coverage->typing;
      Generator g(rc.gen, s, gen_opts);
      prog = g.gen_program();
      if (prog) seed = s;
    }
    if (!prog) continue;
    ++rep.cases;
    auto ex = detail::execute(*prog, rc.max_steps, copts);
    if (!ex) {
      rep.failures.push_back({seed, format_program(*prog), "platform checks", "platform rejected"});
      continue;
    }
    if (coverage)
      for (const auto& s : ex->steps) ++coverage->evaluation[rule_name(s.rule)];
    auto v = fn(*ex, copts);
    if (!v) continue;
    detail::Violation shrunk = *v;
    Program small = detail::shrink(*prog, fn, rc, shrunk);
    rep.failures.push_back({seed, format_program(small), shrunk.expected, shrunk.actual});
  }
  return rep;
}

inline std::vector<PropertyReport> run_properties(const RunConfig& rc, Coverage* coverage = nullptr) {
  std::vector<PropertyReport> out;
  const auto& names = rc.properties.empty() ? property_names() : rc.properties;
  for (const auto& n : names) out.push_back(run_property(n, rc, coverage));
  return out;
}

inline nlohmann::json to_json(const PropertyReport& r) {
  auto failures = nlohmann::json::array();
  for (const auto& f : r.failures)
    failures.push_back({{"seed", f.seed}, {"term", f.term}, {"expected", f.expected}, {"actual", f.actual}});
  return {{"property", r.name}, {"cases", r.cases}, {"resampled", r.resampled}, {"failures", failures}};
}

}  // namespace capcheck
