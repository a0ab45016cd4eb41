#pragma once

// Well-formedness, algorithmic subtyping and let-avoidance.

#include <stdexcept>
#include <string>

#include "capture.hpp"
#include "syntax.hpp"

namespace capcheck {

// ---------------------------------------------------------------------------
// Well-formedness
// ---------------------------------------------------------------------------

/// Every element other than `*` names a term binding of `env`.
inline bool wf_cset(const Env& env, const CaptureSet& c) {
  for (const Name& n : c.names())
    if (!env.binds_term(n)) return false;
  return true;
}

inline bool wf_shape(const Env& env, const Shape& s);

inline bool wf_type(const Env& env, const Type& t) { return wf_cset(env, t.capture) && wf_shape(env, t.shape); }

inline bool wf_shape(const Env& env, const Shape& s) {
  return std::visit(overloaded{
                        [&](const TVarShape& v) { return env.lookup_type(v.name) != nullptr; },
                        [&](const TopShape&) { return true; },
                        [&](const FunShape& f) {
                          if (!wf_type(env, f.param_type)) return false;
                          Name z = env.binds(f.param) ? freshen(f.param) : f.param;
                          return wf_type(env.with_term(z, f.param_type), subst_var(f.result, f.param, z));
                        },
                        [&](const TFunShape& f) {
                          if (!wf_shape(env, f.bound)) return false;
                          Name x = env.binds(f.tparam) ? freshen(f.tparam) : f.tparam;
                          return wf_type(env.with_type(x, f.bound),
                                         subst_type_var(f.result, f.tparam, tvar_shape(x)));
                        },
                        [&](const BoxShape& b) { return wf_type(env, b.inner); },
                    },
                    s->node);
}

/// Domain uniqueness and telescoping well-formedness.
inline bool wf_env(const Env& env) {
  Env prefix;
  for (const Binding& b : env.bindings()) {
    if (prefix.binds(binding_name(b))) return false;
    bool ok = std::visit(overloaded{
                             [&](const TermBinding& tb) { return wf_type(prefix, tb.type); },
                             [&](const TypeBinding& tb) { return wf_shape(prefix, tb.bound); },
                         },
                         b);
    if (!ok) return false;
    prefix = prefix.extend(b);
  }
  return true;
}

// ---------------------------------------------------------------------------
// Subtyping
// ---------------------------------------------------------------------------

/// Thrown when a subtyping query exceeds its recursion budget.
class SubtypeLimit : public std::runtime_error {
 public:
  SubtypeLimit() : std::runtime_error("subtyping recursion limit exceeded") {}
};

struct SubtypeOptions {
  std::size_t max_depth = 10000;
};

/// Promotes type variables through their bounds until a non-variable shape
/// (or an unbound variable) is reached.
inline Shape expose(const Env& env, Shape s) {
  for (std::size_t guard = 0; guard <= env.size(); ++guard) {
    const auto* v = shape_as<TVarShape>(s);
    if (!v) return s;
    const Shape* bound = env.lookup_type(v->name);
    if (!bound) return s;
    s = *bound;
  }
  return s;
}

namespace detail {

class Subtyper {
 public:
  explicit Subtyper(SubtypeOptions opts) : opts_(opts) {}

  bool type(const Env& env, const Type& a, const Type& b) {
    return subcapture(env, a.capture, b.capture) && shape(env, a.shape, b.shape);
  }

  bool shape(const Env& env, const Shape& a, const Shape& b) {
    if (++depth_ > opts_.max_depth) throw SubtypeLimit();
    struct Restore {
      std::size_t& d;
      ~Restore() { --d; }
    } restore{depth_};

    if (shape_as<TopShape>(b)) return true;
    if (const auto* va = shape_as<TVarShape>(a)) {
      if (const auto* vb = shape_as<TVarShape>(b); vb && vb->name == va->name) return true;
      const Shape* bound = env.lookup_type(va->name);
      return bound && shape(env, *bound, b);
    }
    if (const auto* fa = shape_as<FunShape>(a)) {
      const auto* fb = shape_as<FunShape>(b);
      if (!fb || !type(env, fb->param_type, fa->param_type)) return false;
      Name z = env.binds(fb->param) ? freshen(fb->param) : fb->param;
      Type ra = subst_var(fa->result, fa->param, z);
      Type rb = subst_var(fb->result, fb->param, z);
      return type(env.with_term(z, fb->param_type), ra, rb);
    }
    if (const auto* ta = shape_as<TFunShape>(a)) {
      const auto* tb = shape_as<TFunShape>(b);
      if (!tb || !shape(env, tb->bound, ta->bound)) return false;
      Name x = env.binds(tb->tparam) ? freshen(tb->tparam) : tb->tparam;
      Type ra = subst_type_var(ta->result, ta->tparam, tvar_shape(x));
      Type rb = subst_type_var(tb->result, tb->tparam, tvar_shape(x));
      return type(env.with_type(x, tb->bound), ra, rb);
    }
    if (const auto* ba = shape_as<BoxShape>(a)) {
      const auto* bb = shape_as<BoxShape>(b);
      return bb && type(env, ba->inner, bb->inner);
    }
    return false;
  }

 private:
  SubtypeOptions opts_;
  std::size_t depth_ = 0;
};

}  // namespace detail

/// Decides `env |- a <: b`. Throws SubtypeLimit on budget exhaustion.
inline bool subtype(const Env& env, const Type& a, const Type& b, SubtypeOptions opts = {}) {
  return detail::Subtyper(opts).type(env, a, b);
}

inline bool subshape(const Env& env, const Shape& a, const Shape& b, SubtypeOptions opts = {}) {
  return detail::Subtyper(opts).shape(env, a, b);
}

// ---------------------------------------------------------------------------
// Avoidance
// ---------------------------------------------------------------------------

namespace detail {

inline Shape avoid_shape(const Name& x, const CaptureSet& cs, const Shape& s, bool positive);

inline Type avoid_type(const Name& x, const CaptureSet& cs, const Type& t, bool positive) {
  CaptureSet c = t.capture;
  if (c.contains(x)) c = positive ? c.without(x).unite(cs) : c.without(x);
  return Type{std::move(c), avoid_shape(x, cs, t.shape, positive)};
}

inline Shape avoid_shape(const Name& x, const CaptureSet& cs, const Shape& s, bool positive) {
  if (!occurs_free(x, s)) return s;
  return std::visit(
      overloaded{
          [&](const FunShape& f) -> Shape {
            Type param = avoid_type(x, cs, f.param_type, !positive);
            Type result = f.result;
            // A parameter whose own capture set names x loses that authority;
            // uses of the parameter in the result are widened to the original
            // set before x itself is replaced.
            if (positive && f.param_type.capture.contains(x))
              result = subst_cset_in_type(result, f.param, f.param_type.capture, true);
            return fun_shape(f.param, std::move(param), avoid_type(x, cs, result, positive));
          },
          [&](const TFunShape& f) -> Shape {
            return tfun_shape(f.tparam, avoid_shape(x, cs, f.bound, !positive),
                              avoid_type(x, cs, f.result, positive));
          },
          [&](const BoxShape& b) -> Shape { return box_shape(avoid_type(x, cs, b.inner, positive)); },
          [&](const auto&) -> Shape { return s; },
      },
      s->node);
}

}  // namespace detail

/// Supertype of `t` with no free occurrence of `x`, assuming `x` is bound to
/// a value whose capture set is `cs`.
inline Type avoid(const Name& x, const CaptureSet& cs, const Type& t) {
  return detail::avoid_type(x, cs, t, true);
}

}  // namespace capcheck
