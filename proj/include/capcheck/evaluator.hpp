#pragma once

// Small-step reduction over store and evaluation contexts.

#include <optional>
#include <string>
#include <vector>

#include "capture.hpp"
#include "checker.hpp"
#include "printer.hpp"
#include "syntax.hpp"

namespace capcheck {

enum class Rule { Apply, TApply, Open, Rename, Lift };

inline const char* rule_name(Rule r) {
  switch (r) {
    case Rule::Apply: return "apply";
    case Rule::TApply: return "tapply";
    case Rule::Open: return "open";
    case Rule::Rename: return "rename";
    case Rule::Lift: return "lift";
  }
  return "?";
}

struct Split {
  StoreContext store;
  Term plug;
};

/// Peels the maximal prefix of value-bound lets.
inline Split canonical_split(const Term& t) {
  Split s;
  Term cur = t;
  while (const auto* l = term_as<Let>(cur)) {
    if (!is_value(l->bound)) break;
    s.store.bindings.push_back({l->binder, l->bound});
    cur = l->body;
  }
  s.plug = cur;
  return s;
}

/// Decomposes a plug into an evaluation context and the term in its hole.
/// Descends through let-bound positions whose bound term is neither a value
/// nor a variable.
struct Focus {
  EvalContext ctx;
  Term redex;
};

inline Focus focus(const Term& plug) {
  Focus f;
  Term cur = plug;
  for (;;) {
    const auto* l = term_as<Let>(cur);
    if (!l || is_answer(l->bound)) break;
    f.ctx.frames.push_back({l->binder, l->body, cur->span});
    cur = l->bound;
  }
  f.redex = cur;
  return f;
}

struct Stepped {
  Term term;
  Rule rule;
  CaptureSet used;
};
struct NormalForm {};
struct Stuck {
  std::string reason;
  Term redex;
};

using StepResult = std::variant<Stepped, NormalForm, Stuck>;

namespace detail {

inline std::string store_excerpt(const StoreContext& s, const Name& x) {
  const Term* v = s.lookup(x);
  return v ? x.text + " = " + print(*v) : x.text + " is not bound in the store";
}

}  // namespace detail

inline StepResult step(const Term& t) {
  Split split = canonical_split(t);
  Focus f = focus(split.plug);
  const Term& r = f.redex;
  auto done = [&](Term inner, Rule rule, CaptureSet used = {}) -> StepResult {
    return Stepped{split.store.plug(f.ctx.plug(std::move(inner))), rule, std::move(used)};
  };

  if (const auto* l = term_as<Let>(r)) {
    if (const auto* v = term_as<Var>(l->bound)) return done(subst_var(l->body, l->binder, v->name), Rule::Rename);
    // Value-bound: only reachable under a non-empty context, since the
    // canonical split absorbed any value-bound let at the top.
    Name fresh = freshen(l->binder);
    Term body = subst_var(l->body, l->binder, fresh);
    Term outer = f.ctx.plug(body);
    f.ctx.frames.clear();
    return done(mk::node(Let{fresh, l->bound, outer}, r->span), Rule::Lift);
  }

  if (!f.ctx.empty() && is_answer(r)) return Stuck{"answer in evaluation position", r};

  if (const auto* a = term_as<App>(r)) {
    const Term* fn = split.store.lookup(a->fn);
    const Abs* abs = fn ? term_as<Abs>(*fn) : nullptr;
    if (!abs) return Stuck{"application of a non-function: " + detail::store_excerpt(split.store, a->fn), r};
    Term body = subst_var(freshen_binders(abs->body), abs->param, a->arg);
    return done(body, Rule::Apply, CaptureSet{a->fn});
  }
  if (const auto* a = term_as<TApp>(r)) {
    const Term* fn = split.store.lookup(a->fn);
    const TAbs* tabs = fn ? term_as<TAbs>(*fn) : nullptr;
    if (!tabs)
      return Stuck{"type application of a non-type-function: " + detail::store_excerpt(split.store, a->fn), r};
    Term body = subst_type_var(freshen_binders(tabs->body), tabs->tparam, a->type_arg);
    return done(body, Rule::TApply, CaptureSet{a->fn});
  }
  if (const auto* u = term_as<Unbox>(r)) {
    const Term* bx = split.store.lookup(u->name);
    const BoxVal* b = bx ? term_as<BoxVal>(*bx) : nullptr;
    if (!b) return Stuck{"unbox of a non-box: " + detail::store_excerpt(split.store, u->name), r};
    return done(mk::var(b->name), Rule::Open);
  }
  return NormalForm{};
}

// ---------------------------------------------------------------------------
// Rule matching (independent of `step`)
// ---------------------------------------------------------------------------

/// Counts every (store prefix, evaluation context, rule) decomposition of `t`
/// whose left-hand side matches one of the reduction rules.
inline std::size_t count_rule_matches(const Term& t) {
  std::size_t matches = 0;
  StoreContext store;
  Term rest = t;
  for (;;) {
    // All evaluation contexts over `rest`.
    Term cur = rest;
    bool empty_ctx = true;
    for (;;) {
      if (const auto* l = term_as<Let>(cur)) {
        if (term_as<Var>(l->bound)) ++matches;             // rename
        if (is_value(l->bound) && !empty_ctx) ++matches;   // lift
      } else if (const auto* a = term_as<App>(cur)) {
        const Term* v = store.lookup(a->fn);
        if (v && term_as<Abs>(*v)) ++matches;
      } else if (const auto* a = term_as<TApp>(cur)) {
        const Term* v = store.lookup(a->fn);
        if (v && term_as<TAbs>(*v)) ++matches;
      } else if (const auto* u = term_as<Unbox>(cur)) {
        const Term* v = store.lookup(u->name);
        if (v && term_as<BoxVal>(*v)) ++matches;
      }
      const auto* l = term_as<Let>(cur);
      if (!l) break;
      cur = l->bound;
      empty_ctx = false;
    }
    const auto* l = term_as<Let>(rest);
    if (!l || !is_value(l->bound)) break;
    store.bindings.push_back({l->binder, l->bound});
    rest = l->body;
  }
  return matches;
}

// ---------------------------------------------------------------------------
// Runs and traces
// ---------------------------------------------------------------------------

struct TraceStep {
  Rule rule;
  CaptureSet used;
  Term term;
};

struct Trace {
  std::vector<TraceStep> steps;
};

enum class Outcome { Normal, Stuck, Timeout };

inline const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Normal: return "normal";
    case Outcome::Stuck: return "stuck";
    case Outcome::Timeout: return "timeout";
  }
  return "?";
}

struct RunResult {
  Outcome outcome;
  Term final;
  Trace trace;
  std::string stuck_reason;
};

template <class OnStep>
RunResult run(const Term& t, std::size_t max_steps, OnStep&& on_step) {
  RunResult res{Outcome::Timeout, t, {}, {}};
  for (std::size_t i = 0; i < max_steps; ++i) {
    StepResult r = step(res.final);
    if (std::holds_alternative<NormalForm>(r)) {
      res.outcome = Outcome::Normal;
      return res;
    }
    if (const auto* s = std::get_if<Stuck>(&r)) {
      res.outcome = Outcome::Stuck;
      res.stuck_reason = s->reason;
      return res;
    }
    auto& st = std::get<Stepped>(r);
    res.trace.steps.push_back({st.rule, st.used, st.term});
    on_step(res.trace.steps.back());
    res.final = st.term;
  }
  if (std::holds_alternative<NormalForm>(step(res.final))) res.outcome = Outcome::Normal;
  return res;
}

inline RunResult run(const Term& t, std::size_t max_steps) {
  return run(t, max_steps, [](const TraceStep&) {});
}

inline CaptureSet used_of_trace(const Trace& tr) {
  CaptureSet out;
  for (const auto& s : tr.steps) out = out.unite(s.used);
  return out;
}

// ---------------------------------------------------------------------------
// Platforms and programs
// ---------------------------------------------------------------------------

struct Platform {
  StoreContext store;
  /// Matching environment: every binding at `{*} S`.
  Env env;
};

struct ClassifiedProgram {
  Platform platform;
  Term body;
  Type type;
};

/// A program given as source: the platform is its `prim` declarations.
inline Result<ClassifiedProgram> classify_program(const Program& p, const CheckerOptions& opts = {}) {
  auto env = check_platform(p.prims, opts);
  if (!env) return env.error();
  auto ty = synth(*env, p.body, opts);
  if (!ty) return ty.error();
  ClassifiedProgram out{{{}, *env}, p.body, *ty};
  for (const Prim& prim : p.prims) out.platform.store.bindings.push_back({prim.name, prim.value});
  return out;
}

/// A program given as a term: the platform is the maximal prefix of lets
/// binding closed values; each is typed at `{*} S` for its synthesized S.
inline Result<ClassifiedProgram> classify_program(const Term& t, const CheckerOptions& opts = {}) {
  ClassifiedProgram out{{}, t, pure(top_shape())};
  Term cur = t;
  while (const auto* l = term_as<Let>(cur)) {
    if (!is_value(l->bound) || !free_vars(l->bound).empty()) break;
    auto ty = synth(out.platform.env, l->bound, opts);
    if (!ty) return make_diag(code::kPlatform, "platform value '" + l->binder.text + "': " + ty.error().message,
                              cur->span);
    out.platform.store.bindings.push_back({l->binder, l->bound});
    out.platform.env = out.platform.env.with_term(l->binder, Type{CaptureSet::universal(), ty->shape});
    cur = l->body;
  }
  out.body = cur;
  auto ty = synth(out.platform.env, cur, opts);
  if (!ty) return ty.error();
  out.type = *ty;
  return out;
}

/// Matching environment for a store: each binding typed at its synthesized
/// type in the environment built so far. Bindings that appear in `platform`
/// use their platform type instead.
inline Result<Env> store_env(const StoreContext& s, const Env& base, const CheckerOptions& opts = {}) {
  Env env = base;
  for (const auto& b : s.bindings) {
    if (env.binds(b.name)) continue;
    auto ty = synth(env, b.value, opts);
    if (!ty) return ty.error();
    env = env.with_term(b.name, *ty);
  }
  return env;
}

}  // namespace capcheck
