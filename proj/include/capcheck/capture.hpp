#pragma once

// Captured variables of terms and contexts, store resolution, and the
// algorithmic subcapturing judgment.

#include <map>
#include <set>
#include <vector>

#include "syntax.hpp"

namespace capcheck {

/// `cv(t)`.
inline CaptureSet cv(const Term& t) {
  return std::visit(
      overloaded{
          [](const Var& v) { return CaptureSet{v.name}; },
          [](const Abs& a) { return cv(a.body).without(a.param); },
          [](const TAbs& a) { return cv(a.body); },
          [](const BoxVal&) { return CaptureSet{}; },
          [](const App& a) { return CaptureSet{a.fn, a.arg}; },
          [](const TApp& a) { return CaptureSet{a.fn}; },
          [](const Let& l) {
            CaptureSet body = cv(l.body);
            if (is_value(l.bound) && !body.contains(l.binder)) return body;
            return cv(l.bound).unite(body.without(l.binder));
          },
          [](const Unbox& u) { return u.keys.with(u.name); },
      },
      t->node);
}

// ---------------------------------------------------------------------------
// Store and evaluation contexts
// ---------------------------------------------------------------------------

struct StoreBinding {
  Name name;
  Term value;
};

/// `let x1 = v1 in ... let xn = vn in []`, outermost first.
struct StoreContext {
  std::vector<StoreBinding> bindings;

  const Term* lookup(const Name& x) const {
    for (auto it = bindings.rbegin(); it != bindings.rend(); ++it)
      if (it->name == x) return &it->value;
    return nullptr;
  }
  Term plug(Term t) const {
    for (auto it = bindings.rbegin(); it != bindings.rend(); ++it) t = mk::let(it->name, it->value, t);
    return t;
  }
};

struct EvalFrame {
  Name binder;
  Term body;
  SourceSpan span;
};

/// `let x1 = (let x2 = ... [] ... in t2) in t1`; frames outermost first.
struct EvalContext {
  std::vector<EvalFrame> frames;

  bool empty() const { return frames.empty(); }
  Term plug(Term t) const {
    for (auto it = frames.rbegin(); it != frames.rend(); ++it)
      t = mk::node(Let{it->binder, t, it->body}, it->span);
    return t;
  }
};

/// `cv(e)`: the union of the frame bodies' captured variables.
inline CaptureSet cv_ctx(const EvalContext& e) {
  CaptureSet out;
  for (const auto& f : e.frames) out = out.unite(cv(f.body));
  return out;
}

/// Applies the store resolver `[x1 -> cv(v1)] o ... o [xn -> cv(vn)]` to C.
inline CaptureSet resolve(const StoreContext& s, const CaptureSet& c) {
  CaptureSet out = c;
  for (auto it = s.bindings.rbegin(); it != s.bindings.rend(); ++it) {
    if (!out.contains(it->name)) continue;
    out = out.without(it->name).unite(cv(it->value));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcapturing
// ---------------------------------------------------------------------------

namespace detail {

class SubcaptureQuery {
 public:
  SubcaptureQuery(const Env& env, const CaptureSet& upper) : env_(env), upper_(upper) {}

  bool set(const CaptureSet& c) {
    if (c.has_star() && !upper_.has_star()) return false;
    for (const Name& x : c.names())
      if (!element(x)) return false;
    return true;
  }

  bool element(const Name& x) {
    if (upper_.has_star() || upper_.contains(x)) return true;
    if (auto it = memo_.find(x); it != memo_.end()) return it->second;
    const Type* t = env_.lookup_term(x);
    if (!t || active_.contains(x)) return false;
    active_.insert(x);
    bool ok = set(t->capture);
    active_.erase(x);
    memo_[x] = ok;
    return ok;
  }

 private:
  const Env& env_;
  const CaptureSet& upper_;
  std::map<Name, bool> memo_;
  std::set<Name> active_;
};

}  // namespace detail

/// Decides `env |- c1 <: c2`.
inline bool subcapture(const Env& env, const CaptureSet& c1, const CaptureSet& c2) {
  return detail::SubcaptureQuery(env, c2).set(c1);
}

}  // namespace capcheck
