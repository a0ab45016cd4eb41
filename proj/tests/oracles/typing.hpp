#pragma once

// Declarative typing for the first-order fragment (variables, let, box,
// unbox) over types `C Top` and `C Box (C' Top)`. The set of derivable types
// of a term is computed bottom-up as an upward-closed subset of the finite
// universe, with (sub) realized by the declarative subtype relation.

#include <bitset>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "oracles/declarative.hpp"

namespace oracle::typing {

using namespace capcheck;

class FirstOrder {
 public:
  static constexpr std::size_t kMax = 512;
  using Set = std::bitset<kMax>;

  struct Universe {
    Env env;
    std::vector<Type> types;
    std::map<std::string, std::size_t> index;
    std::unique_ptr<decl::SubtypeRelation> rel;
    std::vector<Set> up;  // up[i] = { j | types[i] <: types[j] }
  };

  /// All derivable types of `t` in `env`, as indices into universe(env).
  Set derivable(const Env& env, const Term& t) { return derive(universe(env), t); }

  Universe& universe(const Env& env) {
    std::string k = print(env);
    auto it = cache_.find(k);
    if (it != cache_.end()) return *it->second;
    auto u = std::make_unique<Universe>();
    u->env = env;
    auto sets = decl::all_sets(env);
    for (const CaptureSet& c : sets) u->types.push_back(Type{c, top_shape()});
    for (const CaptureSet& c : sets)
      for (const CaptureSet& inner : sets) u->types.push_back(Type{c, box_shape(Type{inner, top_shape()})});
    if (u->types.size() > kMax) throw std::length_error("typing universe too large");
    for (std::size_t i = 0; i < u->types.size(); ++i) u->index[print(u->types[i])] = i;
    u->rel = std::make_unique<decl::SubtypeRelation>(env, u->types, decl::Binders{});
    u->up.resize(u->types.size());
    for (std::size_t i = 0; i < u->types.size(); ++i)
      for (std::size_t j = 0; j < u->types.size(); ++j)
        if (u->rel->holds(u->types[i], u->types[j])) u->up[i][j] = true;
    return *cache_.emplace(k, std::move(u)).first->second;
  }

  /// Index of `t` in the universe of `env`, or -1.
  long find(const Env& env, const Type& t) {
    Universe& u = universe(env);
    auto it = u.index.find(print(t));
    return it == u.index.end() ? -1 : static_cast<long>(it->second);
  }

  bool sub(const Env& env, std::size_t i, std::size_t j) { return universe(env).up[i][j]; }

 private:
  static Set upward(const Universe& u, const Set& s) {
    Set out;
    for (std::size_t i = 0; i < u.types.size(); ++i)
      if (s[i]) out |= u.up[i];
    return out;
  }

  static bool in_dom(const Env& env, const CaptureSet& c) {
    if (c.has_star()) return false;
    for (const Name& x : c.names())
      if (!env.lookup_term(x)) return false;
    return true;
  }

  Set derive(Universe& u, const Term& t) {
    const Env& env = u.env;
    Set out;
    if (const auto* v = term_as<Var>(t)) {
      // (var)
      const Type* ty = env.lookup_term(v->name);
      if (!ty) return out;
      auto it = u.index.find(print(Type{CaptureSet{v->name}, ty->shape}));
      if (it != u.index.end()) out[it->second] = true;
      return upward(u, out);
    }
    if (const auto* b = term_as<BoxVal>(t)) {
      // (box): x : C S with C ⊆ dom(env) gives Box (C S).
      Set inner = derive(u, mk::var(b->name));
      for (std::size_t i = 0; i < u.types.size(); ++i) {
        if (!inner[i]) continue;
        const Type& ty = u.types[i];
        if (!in_dom(env, ty.capture) || !shape_as<TopShape>(ty.shape)) continue;
        out[u.index.at(print(pure(box_shape(ty))))] = true;
      }
      return upward(u, out);
    }
    if (const auto* ub = term_as<Unbox>(t)) {
      // (unbox): x : Box (C S) with C ⊆ dom(env) gives C S.
      if (!in_dom(env, ub->keys)) return out;
      Set boxed = derive(u, mk::var(ub->name));
      for (std::size_t i = 0; i < u.types.size(); ++i) {
        if (!boxed[i]) continue;
        const Type& ty = u.types[i];
        const auto* bx = shape_as<BoxShape>(ty.shape);
        if (!ty.capture.empty() || !bx || !(bx->inner.capture == ub->keys)) continue;
        out[u.index.at(print(Type{ub->keys, bx->inner.shape}))] = true;
      }
      return upward(u, out);
    }
    if (const auto* l = term_as<Let>(t)) {
      // (let): s : T1 and x: T1 |- t : U with x not free in U. Only minimal
      // T1 matter, since narrowing a binding preserves derivations.
      Set first = derive(u, l->bound);
      for (std::size_t i = 0; i < u.types.size(); ++i) {
        if (!first[i] || !minimal(u, first, i)) continue;
        Env inner_env = env.with_term(l->binder, u.types[i]);
        Universe& inner = universe(inner_env);
        Set body = derive(inner, l->body);
        for (std::size_t j = 0; j < inner.types.size(); ++j) {
          if (!body[j] || occurs_free(l->binder, inner.types[j])) continue;
          out[u.index.at(print(inner.types[j]))] = true;
        }
      }
      return upward(u, out);
    }
    throw std::logic_error("term outside the first-order fragment");
  }

  static bool minimal(const Universe& u, const Set& s, std::size_t i) {
    for (std::size_t j = 0; j < u.types.size(); ++j)
      if (s[j] && j != i && u.up[j][i] && !u.up[i][j]) return false;
    return true;
  }

  std::map<std::string, std::unique_ptr<Universe>> cache_;
};

/// Random first-order terms over a starting environment. Names carry a kind
/// (plain or boxed) so boxes only ever hold plain values.
class FirstOrderGen {
 public:
  FirstOrderGen(std::uint64_t seed, std::vector<Name> binders) : rng_(seed), binders_(std::move(binders)) {}

  struct Scope {
    std::vector<Name> plain, boxed;
  };

  Term term(const Scope& s, int depth, std::size_t next_binder) { return gen(s, depth, next_binder).first; }

 private:
  /// A term and whether it evaluates to a box.
  std::pair<Term, bool> gen(const Scope& s, int depth, std::size_t next_binder) {
    int k = static_cast<int>(below(depth <= 1 || next_binder >= binders_.size() ? 3 : 5));
    switch (k) {
      case 0:
        if (!s.boxed.empty() && coin()) return {mk::var(pick(s.boxed)), true};
        return {mk::var(pick(s.plain)), false};
      case 1: return {mk::box(pick(s.plain)), true};
      case 2:
        if (s.boxed.empty()) return {mk::box(pick(s.plain)), true};
        return {mk::unbox(keys(s), pick(s.boxed)), false};
      default: {
        Name x = binders_[next_binder];
        auto [bound, boxed] = gen(s, depth - 1, next_binder + 1);
        Scope inner = s;
        (boxed ? inner.boxed : inner.plain).push_back(x);
        auto [body, result_boxed] = gen(inner, depth - 1, next_binder + 1);
        return {mk::let(x, bound, body), result_boxed};
      }
    }
  }

  CaptureSet keys(const Scope& s) {
    std::vector<Name> ns;
    for (const Name& n : s.plain)
      if (coin()) ns.push_back(n);
    return CaptureSet(ns, below(8) == 0);
  }

  bool coin() { return below(2) == 0; }
  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  const Name& pick(const std::vector<Name>& v) { return v[below(v.size())]; }

  std::mt19937_64 rng_;
  std::vector<Name> binders_;
};

}  // namespace oracle::typing
