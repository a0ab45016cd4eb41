#pragma once

// Core abstract syntax: names, capture sets, shape types, capturing types,
// MNF terms and typing environments, plus the structural operations over
// them (free variables, substitutions, alpha-renaming, alpha-equivalence).

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace capcheck {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

// ---------------------------------------------------------------------------
// Names
// ---------------------------------------------------------------------------

/// A binder or reference. Identity is the uid; `text` is only for display.
struct Name {
  std::string text;
  std::uint64_t uid = 0;

  friend bool operator==(const Name& a, const Name& b) { return a.uid == b.uid; }
  friend auto operator<=>(const Name& a, const Name& b) { return a.uid <=> b.uid; }
};

inline std::atomic<std::uint64_t>& uid_counter() {
  static std::atomic<std::uint64_t> counter{1};
  return counter;
}

inline Name fresh_name(std::string text) {
  return Name{std::move(text), uid_counter().fetch_add(1, std::memory_order_relaxed)};
}

/// Same display text, new identity.
inline Name freshen(const Name& n) { return fresh_name(n.text); }

using NameSet = std::set<Name>;

// ---------------------------------------------------------------------------
// Source spans (shared by terms and diagnostics)
// ---------------------------------------------------------------------------

struct SourcePos {
  std::size_t offset = 0;
  std::size_t line = 0;  // 1-based; 0 means "unknown"
  std::size_t column = 0;
};

struct SourceSpan {
  std::string file;
  SourcePos start;
  SourcePos end;

  bool known() const { return start.line != 0; }
};

// ---------------------------------------------------------------------------
// Capture sets
// ---------------------------------------------------------------------------

/// Finite set of term variables, optionally containing the universal
/// capability `*`. Elements are kept sorted by uid so equal sets have equal
/// representations.
class CaptureSet {
 public:
  CaptureSet() = default;
  CaptureSet(std::initializer_list<Name> names) : names_(names) { normalize(); }
  explicit CaptureSet(std::vector<Name> names, bool star = false)
      : names_(std::move(names)), star_(star) {
    normalize();
  }

  static CaptureSet universal() { return CaptureSet({}, true); }

  bool has_star() const { return star_; }
  bool empty() const { return names_.empty() && !star_; }
  std::size_t size() const { return names_.size() + (star_ ? 1 : 0); }
  const std::vector<Name>& names() const { return names_; }

  bool contains(const Name& n) const {
    return std::binary_search(names_.begin(), names_.end(), n);
  }

  CaptureSet with(const Name& n) const {
    CaptureSet r = *this;
    r.names_.push_back(n);
    r.normalize();
    return r;
  }
  CaptureSet without(const Name& n) const {
    CaptureSet r = *this;
    std::erase(r.names_, n);
    return r;
  }
  CaptureSet with_star(bool star = true) const {
    CaptureSet r = *this;
    r.star_ = star;
    return r;
  }
  CaptureSet unite(const CaptureSet& other) const {
    CaptureSet r = *this;
    r.names_.insert(r.names_.end(), other.names_.begin(), other.names_.end());
    r.star_ = star_ || other.star_;
    r.normalize();
    return r;
  }
  /// Plain set inclusion (`*` compared as an ordinary element).
  bool subset_of(const CaptureSet& other) const {
    if (star_ && !other.star_) return false;
    return std::includes(other.names_.begin(), other.names_.end(), names_.begin(),
                         names_.end());
  }

  friend bool operator==(const CaptureSet& a, const CaptureSet& b) {
    return a.star_ == b.star_ && a.names_ == b.names_;
  }

 private:
  void normalize() {
    std::sort(names_.begin(), names_.end());
    names_.erase(std::unique(names_.begin(), names_.end()), names_.end());
  }

  std::vector<Name> names_;
  bool star_ = false;
};

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

struct ShapeNode;
using Shape = std::shared_ptr<const ShapeNode>;

/// `C S`. A pure type is one whose capture set is empty.
struct Type {
  CaptureSet capture;
  Shape shape;
};

struct TVarShape {
  Name name;
};
struct TopShape {};
/// `forall (param: param_type) -> result`
struct FunShape {
  Name param;
  Type param_type;
  Type result;
};
/// `forall [tparam <: bound] -> result`
struct TFunShape {
  Name tparam;
  Shape bound;
  Type result;
};
struct BoxShape {
  Type inner;
};

struct ShapeNode {
  std::variant<TVarShape, TopShape, FunShape, TFunShape, BoxShape> node;
};

inline Shape top_shape() {
  static const Shape top = std::make_shared<const ShapeNode>(ShapeNode{TopShape{}});
  return top;
}
inline Shape tvar_shape(Name x) {
  return std::make_shared<const ShapeNode>(ShapeNode{TVarShape{std::move(x)}});
}
inline Shape fun_shape(Name param, Type param_type, Type result) {
  return std::make_shared<const ShapeNode>(
      ShapeNode{FunShape{std::move(param), std::move(param_type), std::move(result)}});
}
inline Shape tfun_shape(Name tparam, Shape bound, Type result) {
  return std::make_shared<const ShapeNode>(
      ShapeNode{TFunShape{std::move(tparam), std::move(bound), std::move(result)}});
}
inline Shape box_shape(Type inner) {
  return std::make_shared<const ShapeNode>(ShapeNode{BoxShape{std::move(inner)}});
}

inline Type pure(Shape s) { return Type{CaptureSet{}, std::move(s)}; }
inline Type capturing(CaptureSet c, Shape s) { return Type{std::move(c), std::move(s)}; }

/// Non-dependent function type `U -> T`; the parameter is fresh and unused.
inline Shape arrow_shape(Type param_type, Type result) {
  return fun_shape(fresh_name("x"), std::move(param_type), std::move(result));
}

template <class T>
const T* shape_as(const Shape& s) {
  return std::get_if<T>(&s->node);
}

// ---------------------------------------------------------------------------
// Terms (monadic normal form)
// ---------------------------------------------------------------------------

struct TermNode;
using Term = std::shared_ptr<const TermNode>;

struct Var {
  Name name;
};
struct Abs {
  Name param;
  Type param_type;
  Term body;
};
struct TAbs {
  Name tparam;
  Shape bound;
  Term body;
};
struct BoxVal {
  Name name;
};
struct App {
  Name fn;
  Name arg;
};
struct TApp {
  Name fn;
  Shape type_arg;
};
struct Let {
  Name binder;
  Term bound;
  Term body;
};
/// `unbox {keys} name`, written `C o- x` in the calculus.
struct Unbox {
  CaptureSet keys;
  Name name;
};

struct TermNode {
  std::variant<Var, Abs, TAbs, BoxVal, App, TApp, Let, Unbox> node;
  SourceSpan span;
};

template <class T>
const T* term_as(const Term& t) {
  return std::get_if<T>(&t->node);
}

namespace mk {
inline Term node(auto n, SourceSpan span = {}) {
  return std::make_shared<const TermNode>(TermNode{std::move(n), std::move(span)});
}
inline Term var(Name x) { return node(Var{std::move(x)}); }
inline Term abs(Name x, Type t, Term body) {
  return node(Abs{std::move(x), std::move(t), std::move(body)});
}
inline Term tabs(Name x, Shape bound, Term body) {
  return node(TAbs{std::move(x), std::move(bound), std::move(body)});
}
inline Term box(Name x) { return node(BoxVal{std::move(x)}); }
inline Term app(Name f, Name a) { return node(App{std::move(f), std::move(a)}); }
inline Term tapp(Name f, Shape s) { return node(TApp{std::move(f), std::move(s)}); }
inline Term let(Name x, Term s, Term t) {
  return node(Let{std::move(x), std::move(s), std::move(t)});
}
inline Term unbox(CaptureSet keys, Name x) {
  return node(Unbox{std::move(keys), std::move(x)});
}
}  // namespace mk

inline bool is_value(const Term& t) {
  return term_as<Abs>(t) || term_as<TAbs>(t) || term_as<BoxVal>(t);
}
inline bool is_answer(const Term& t) { return is_value(t) || term_as<Var>(t); }

// ---------------------------------------------------------------------------
// Environments
// ---------------------------------------------------------------------------

struct TermBinding {
  Name name;
  Type type;
};
struct TypeBinding {
  Name name;
  Shape bound;
};
using Binding = std::variant<TermBinding, TypeBinding>;

inline const Name& binding_name(const Binding& b) {
  return std::visit([](const auto& x) -> const Name& { return x.name; }, b);
}

/// Ordered typing context. Persistent: extension shares the prefix.
class Env {
 public:
  Env() = default;

  Env with_term(Name x, Type t) const { return extend(TermBinding{std::move(x), std::move(t)}); }
  Env with_type(Name x, Shape bound) const {
    return extend(TypeBinding{std::move(x), std::move(bound)});
  }
  Env extend(Binding b) const {
    Env r;
    r.head_ = std::make_shared<const Node>(Node{std::move(b), head_});
    r.size_ = size_ + 1;
    return r;
  }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  const Binding* find(const Name& x) const {
    for (const Node* n = head_.get(); n; n = n->parent.get())
      if (binding_name(n->binding) == x) return &n->binding;
    return nullptr;
  }
  const Type* lookup_term(const Name& x) const {
    const Binding* b = find(x);
    if (!b) return nullptr;
    const auto* tb = std::get_if<TermBinding>(b);
    return tb ? &tb->type : nullptr;
  }
  const Shape* lookup_type(const Name& x) const {
    const Binding* b = find(x);
    if (!b) return nullptr;
    const auto* tb = std::get_if<TypeBinding>(b);
    return tb ? &tb->bound : nullptr;
  }
  bool binds(const Name& x) const { return find(x) != nullptr; }
  bool binds_term(const Name& x) const { return lookup_term(x) != nullptr; }

  /// Bindings outermost first.
  std::vector<Binding> bindings() const {
    std::vector<Binding> out;
    out.reserve(size_);
    for (const Node* n = head_.get(); n; n = n->parent.get()) out.push_back(n->binding);
    std::reverse(out.begin(), out.end());
    return out;
  }

  /// Names of term bindings, outermost first.
  std::vector<Name> term_names() const {
    std::vector<Name> out;
    for (const auto& b : bindings())
      if (const auto* tb = std::get_if<TermBinding>(&b)) out.push_back(tb->name);
    return out;
  }

 private:
  struct Node {
    Binding binding;
    std::shared_ptr<const Node> parent;
  };
  std::shared_ptr<const Node> head_;
  std::size_t size_ = 0;
};

// ---------------------------------------------------------------------------
// Free variables
// ---------------------------------------------------------------------------

inline void collect_fv(const CaptureSet& c, NameSet& out) {
  out.insert(c.names().begin(), c.names().end());
}
inline void collect_fv(const Shape& s, NameSet& out);

inline void collect_fv(const Type& t, NameSet& out) {
  collect_fv(t.capture, out);
  collect_fv(t.shape, out);
}

inline void collect_fv(const Shape& s, NameSet& out) {
  std::visit(overloaded{
                 [&](const TVarShape& v) { out.insert(v.name); },
                 [&](const TopShape&) {},
                 [&](const FunShape& f) {
                   collect_fv(f.param_type, out);
                   NameSet inner;
                   collect_fv(f.result, inner);
                   inner.erase(f.param);
                   out.insert(inner.begin(), inner.end());
                 },
                 [&](const TFunShape& f) {
                   collect_fv(f.bound, out);
                   NameSet inner;
                   collect_fv(f.result, inner);
                   inner.erase(f.tparam);
                   out.insert(inner.begin(), inner.end());
                 },
                 [&](const BoxShape& b) { collect_fv(b.inner, out); },
             },
             s->node);
}

inline void collect_fv(const Term& t, NameSet& out) {
  std::visit(overloaded{
                 [&](const Var& v) { out.insert(v.name); },
                 [&](const Abs& a) {
                   collect_fv(a.param_type, out);
                   NameSet inner;
                   collect_fv(a.body, inner);
                   inner.erase(a.param);
                   out.insert(inner.begin(), inner.end());
                 },
                 [&](const TAbs& a) {
                   collect_fv(a.bound, out);
                   NameSet inner;
                   collect_fv(a.body, inner);
                   inner.erase(a.tparam);
                   out.insert(inner.begin(), inner.end());
                 },
                 [&](const BoxVal& b) { out.insert(b.name); },
                 [&](const App& a) {
                   out.insert(a.fn);
                   out.insert(a.arg);
                 },
                 [&](const TApp& a) {
                   out.insert(a.fn);
                   collect_fv(a.type_arg, out);
                 },
                 [&](const Let& l) {
                   collect_fv(l.bound, out);
                   NameSet inner;
                   collect_fv(l.body, inner);
                   inner.erase(l.binder);
                   out.insert(inner.begin(), inner.end());
                 },
                 [&](const Unbox& u) {
                   collect_fv(u.keys, out);
                   out.insert(u.name);
                 },
             },
             t->node);
}

/// Free term and type names. `*` is never a name, so it never appears.
template <class T>
NameSet free_vars(const T& x) {
  NameSet out;
  collect_fv(x, out);
  return out;
}

template <class T>
bool occurs_free(const Name& n, const T& x) {
  return free_vars(x).contains(n);
}

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------

namespace detail {

/// A simultaneous substitution. Term variables may be renamed (this applies
/// to term positions and capture sets) or spliced with a capture set (capture
/// sets only). Type variables map to shapes. With `polarized`, spliced names
/// in contravariant capture positions are replaced by the empty set instead.
struct Subst {
  std::map<Name, Name> rename;
  std::map<Name, CaptureSet> splice;
  std::map<Name, Shape> shapes;
  bool polarized = false;
  NameSet range;  // free names of the replacements; binders in here get renamed

  bool empty() const { return rename.empty() && splice.empty() && shapes.empty(); }

  bool touches(const Name& b) const {
    return rename.contains(b) || splice.contains(b) || shapes.contains(b);
  }

  void add_rename(const Name& from, const Name& to) {
    rename[from] = to;
    range.insert(to);
  }
  void add_splice(const Name& from, const CaptureSet& to) {
    splice[from] = to;
    range.insert(to.names().begin(), to.names().end());
  }
  void add_shape(const Name& from, const Shape& to) {
    shapes[from] = to;
    collect_fv(to, range);
  }
};

/// Prepares the substitution for descending under `binder`. Returns the
/// (possibly renamed) binder and the substitution to use underneath.
inline std::pair<Name, Subst> enter_binder(const Subst& s, const Name& binder) {
  if (!s.touches(binder) && !s.range.contains(binder)) return {binder, s};
  Subst inner = s;
  inner.rename.erase(binder);
  inner.splice.erase(binder);
  inner.shapes.erase(binder);
  Name b = binder;
  if (s.range.contains(binder)) {
    b = freshen(binder);
    inner.rename[binder] = b;
  }
  return {b, std::move(inner)};
}

inline CaptureSet apply_set(const Subst& s, const CaptureSet& c, bool positive) {
  if (s.rename.empty() && s.splice.empty()) return c;
  std::vector<Name> out;
  bool star = c.has_star();
  bool changed = false;
  for (const Name& n : c.names()) {
    if (auto it = s.rename.find(n); it != s.rename.end()) {
      out.push_back(it->second);
      changed = true;
    } else if (auto jt = s.splice.find(n); jt != s.splice.end()) {
      changed = true;
      if (s.polarized && !positive) continue;
      out.insert(out.end(), jt->second.names().begin(), jt->second.names().end());
      star = star || jt->second.has_star();
    } else {
      out.push_back(n);
    }
  }
  if (!changed) return c;
  return CaptureSet(std::move(out), star);
}

inline Name apply_name(const Subst& s, const Name& n) {
  auto it = s.rename.find(n);
  return it == s.rename.end() ? n : it->second;
}

inline Shape apply_shape(const Subst& s, const Shape& sh, bool positive);

inline Type apply_type(const Subst& s, const Type& t, bool positive) {
  return Type{apply_set(s, t.capture, positive), apply_shape(s, t.shape, positive)};
}

inline Shape apply_shape(const Subst& s, const Shape& sh, bool positive) {
  if (s.empty()) return sh;
  return std::visit(
      overloaded{
          [&](const TVarShape& v) -> Shape {
            if (auto it = s.shapes.find(v.name); it != s.shapes.end()) return it->second;
            if (auto it = s.rename.find(v.name); it != s.rename.end()) return tvar_shape(it->second);
            return sh;
          },
          [&](const TopShape&) -> Shape { return sh; },
          [&](const FunShape& f) -> Shape {
            Type param = apply_type(s, f.param_type, !positive);
            auto [b, inner] = enter_binder(s, f.param);
            return fun_shape(b, std::move(param), apply_type(inner, f.result, positive));
          },
          [&](const TFunShape& f) -> Shape {
            Shape bound = apply_shape(s, f.bound, !positive);
            auto [b, inner] = enter_binder(s, f.tparam);
            return tfun_shape(b, std::move(bound), apply_type(inner, f.result, positive));
          },
          [&](const BoxShape& b) -> Shape { return box_shape(apply_type(s, b.inner, positive)); },
      },
      sh->node);
}

inline Term apply_term(const Subst& s, const Term& t) {
  if (s.empty()) return t;
  const SourceSpan& sp = t->span;
  return std::visit(
      overloaded{
          [&](const Var& v) -> Term { return mk::node(Var{apply_name(s, v.name)}, sp); },
          [&](const Abs& a) -> Term {
            Type pt = apply_type(s, a.param_type, true);
            auto [b, inner] = enter_binder(s, a.param);
            return mk::node(Abs{b, std::move(pt), apply_term(inner, a.body)}, sp);
          },
          [&](const TAbs& a) -> Term {
            Shape bound = apply_shape(s, a.bound, true);
            auto [b, inner] = enter_binder(s, a.tparam);
            return mk::node(TAbs{b, std::move(bound), apply_term(inner, a.body)}, sp);
          },
          [&](const BoxVal& b) -> Term { return mk::node(BoxVal{apply_name(s, b.name)}, sp); },
          [&](const App& a) -> Term {
            return mk::node(App{apply_name(s, a.fn), apply_name(s, a.arg)}, sp);
          },
          [&](const TApp& a) -> Term {
            return mk::node(TApp{apply_name(s, a.fn), apply_shape(s, a.type_arg, true)}, sp);
          },
          [&](const Let& l) -> Term {
            Term bound = apply_term(s, l.bound);
            auto [b, inner] = enter_binder(s, l.binder);
            return mk::node(Let{b, std::move(bound), apply_term(inner, l.body)}, sp);
          },
          [&](const Unbox& u) -> Term {
            return mk::node(Unbox{apply_set(s, u.keys, true), apply_name(s, u.name)}, sp);
          },
      },
      t->node);
}

}  // namespace detail

/// `[from := to]` on a term: every free occurrence, including those inside
/// capture sets of annotations, is renamed. Capture-avoiding.
inline Term subst_var(const Term& t, const Name& from, const Name& to) {
  if (from == to) return t;
  detail::Subst s;
  s.add_rename(from, to);
  return detail::apply_term(s, t);
}

inline Type subst_var(const Type& t, const Name& from, const Name& to) {
  if (from == to) return t;
  detail::Subst s;
  s.add_rename(from, to);
  return detail::apply_type(s, t, true);
}

inline Shape subst_var(const Shape& t, const Name& from, const Name& to) {
  if (from == to) return t;
  detail::Subst s;
  s.add_rename(from, to);
  return detail::apply_shape(s, t, true);
}

/// Replaces `from` by the elements of `to` in capture sets. With
/// `polarity_aware`, only covariant positions receive `to`; contravariant
/// positions receive the empty set.
inline Type subst_cset_in_type(const Type& t, const Name& from, const CaptureSet& to,
                               bool polarity_aware) {
  detail::Subst s;
  s.add_splice(from, to);
  s.polarized = polarity_aware;
  return detail::apply_type(s, t, true);
}

/// `[X := S]` on types, shapes and terms.
inline Type subst_type_var(const Type& t, const Name& from, const Shape& to) {
  detail::Subst s;
  s.add_shape(from, to);
  return detail::apply_type(s, t, true);
}
inline Shape subst_type_var(const Shape& t, const Name& from, const Shape& to) {
  detail::Subst s;
  s.add_shape(from, to);
  return detail::apply_shape(s, t, true);
}
inline Term subst_type_var(const Term& t, const Name& from, const Shape& to) {
  detail::Subst s;
  s.add_shape(from, to);
  return detail::apply_term(s, t);
}

// ---------------------------------------------------------------------------
// Alpha-renaming and alpha-equivalence
// ---------------------------------------------------------------------------

namespace detail {

struct Freshener {
  std::map<Name, Name> map;

  Name ref(const Name& n) const {
    auto it = map.find(n);
    return it == map.end() ? n : it->second;
  }
  Name bind(const Name& n) {
    Name f = freshen(n);
    map[n] = f;
    return f;
  }

  CaptureSet set(const CaptureSet& c) const {
    std::vector<Name> out;
    for (const Name& n : c.names()) out.push_back(ref(n));
    return CaptureSet(std::move(out), c.has_star());
  }
  Type type(const Type& t) { return Type{set(t.capture), shape(t.shape)}; }
  Shape shape(const Shape& sh) {
    return std::visit(overloaded{
                          [&](const TVarShape& v) -> Shape { return tvar_shape(ref(v.name)); },
                          [&](const TopShape&) -> Shape { return sh; },
                          [&](const FunShape& f) -> Shape {
                            Type p = type(f.param_type);
                            Freshener saved = *this;
                            Name b = bind(f.param);
                            Type r = type(f.result);
                            *this = std::move(saved);
                            return fun_shape(b, std::move(p), std::move(r));
                          },
                          [&](const TFunShape& f) -> Shape {
                            Shape bound = shape(f.bound);
                            Freshener saved = *this;
                            Name b = bind(f.tparam);
                            Type r = type(f.result);
                            *this = std::move(saved);
                            return tfun_shape(b, std::move(bound), std::move(r));
                          },
                          [&](const BoxShape& b) -> Shape { return box_shape(type(b.inner)); },
                      },
                      sh->node);
  }
  Term term(const Term& t) {
    const SourceSpan& sp = t->span;
    return std::visit(
        overloaded{
            [&](const Var& v) -> Term { return mk::node(Var{ref(v.name)}, sp); },
            [&](const Abs& a) -> Term {
              Type p = type(a.param_type);
              Freshener saved = *this;
              Name b = bind(a.param);
              Term body = term(a.body);
              *this = std::move(saved);
              return mk::node(Abs{b, std::move(p), std::move(body)}, sp);
            },
            [&](const TAbs& a) -> Term {
              Shape bound = shape(a.bound);
              Freshener saved = *this;
              Name b = bind(a.tparam);
              Term body = term(a.body);
              *this = std::move(saved);
              return mk::node(TAbs{b, std::move(bound), std::move(body)}, sp);
            },
            [&](const BoxVal& b) -> Term { return mk::node(BoxVal{ref(b.name)}, sp); },
            [&](const App& a) -> Term { return mk::node(App{ref(a.fn), ref(a.arg)}, sp); },
            [&](const TApp& a) -> Term { return mk::node(TApp{ref(a.fn), shape(a.type_arg)}, sp); },
            [&](const Let& l) -> Term {
              Term bound = term(l.bound);
              Freshener saved = *this;
              Name b = bind(l.binder);
              Term body = term(l.body);
              *this = std::move(saved);
              return mk::node(Let{b, std::move(bound), std::move(body)}, sp);
            },
            [&](const Unbox& u) -> Term { return mk::node(Unbox{set(u.keys), ref(u.name)}, sp); },
        },
        t->node);
  }
};

/// Bijection between bound names of the left and right operand.
struct AlphaEq {
  std::map<Name, Name> l2r, r2l;

  bool name(const Name& a, const Name& b) const {
    auto it = l2r.find(a);
    auto jt = r2l.find(b);
    if (it == l2r.end() && jt == r2l.end()) return a == b;
    return it != l2r.end() && jt != r2l.end() && it->second == b && jt->second == a;
  }
  bool set(const CaptureSet& a, const CaptureSet& b) const {
    if (a.has_star() != b.has_star() || a.names().size() != b.names().size()) return false;
    for (const Name& x : a.names()) {
      bool found = false;
      for (const Name& y : b.names())
        if (name(x, y)) {
          found = true;
          break;
        }
      if (!found) return false;
    }
    return true;
  }
  template <class F>
  bool under(const Name& a, const Name& b, F&& f) {
    auto sl = l2r, sr = r2l;
    l2r[a] = b;
    r2l[b] = a;
    bool ok = f();
    l2r = std::move(sl);
    r2l = std::move(sr);
    return ok;
  }
  bool type(const Type& a, const Type& b) { return set(a.capture, b.capture) && shape(a.shape, b.shape); }
  bool shape(const Shape& a, const Shape& b) {
    if (a->node.index() != b->node.index()) return false;
    return std::visit(
        overloaded{
            [&](const TVarShape& v) { return name(v.name, std::get<TVarShape>(b->node).name); },
            [&](const TopShape&) { return true; },
            [&](const FunShape& f) {
              const auto& g = std::get<FunShape>(b->node);
              return type(f.param_type, g.param_type) &&
                     under(f.param, g.param, [&] { return type(f.result, g.result); });
            },
            [&](const TFunShape& f) {
              const auto& g = std::get<TFunShape>(b->node);
              return shape(f.bound, g.bound) &&
                     under(f.tparam, g.tparam, [&] { return type(f.result, g.result); });
            },
            [&](const BoxShape& x) { return type(x.inner, std::get<BoxShape>(b->node).inner); },
        },
        a->node);
  }
  bool term(const Term& a, const Term& b) {
    if (a->node.index() != b->node.index()) return false;
    return std::visit(
        overloaded{
            [&](const Var& v) { return name(v.name, std::get<Var>(b->node).name); },
            [&](const Abs& x) {
              const auto& y = std::get<Abs>(b->node);
              return type(x.param_type, y.param_type) &&
                     under(x.param, y.param, [&] { return term(x.body, y.body); });
            },
            [&](const TAbs& x) {
              const auto& y = std::get<TAbs>(b->node);
              return shape(x.bound, y.bound) &&
                     under(x.tparam, y.tparam, [&] { return term(x.body, y.body); });
            },
            [&](const BoxVal& x) { return name(x.name, std::get<BoxVal>(b->node).name); },
            [&](const App& x) {
              const auto& y = std::get<App>(b->node);
              return name(x.fn, y.fn) && name(x.arg, y.arg);
            },
            [&](const TApp& x) {
              const auto& y = std::get<TApp>(b->node);
              return name(x.fn, y.fn) && shape(x.type_arg, y.type_arg);
            },
            [&](const Let& x) {
              const auto& y = std::get<Let>(b->node);
              return term(x.bound, y.bound) &&
                     under(x.binder, y.binder, [&] { return term(x.body, y.body); });
            },
            [&](const Unbox& x) {
              const auto& y = std::get<Unbox>(b->node);
              return set(x.keys, y.keys) && name(x.name, y.name);
            },
        },
        a->node);
  }
};

}  // namespace detail

/// Renames every binder inside `t` to a fresh name; free names are kept.
inline Term freshen_binders(const Term& t) { return detail::Freshener{}.term(t); }
inline Type freshen_binders(const Type& t) { return detail::Freshener{}.type(t); }

inline bool alpha_equal(const Term& a, const Term& b) { return detail::AlphaEq{}.term(a, b); }
inline bool alpha_equal(const Type& a, const Type& b) { return detail::AlphaEq{}.type(a, b); }
inline bool alpha_equal(const Shape& a, const Shape& b) { return detail::AlphaEq{}.shape(a, b); }

// ---------------------------------------------------------------------------
// Misc structural helpers
// ---------------------------------------------------------------------------

/// Number of term constructors.
inline std::size_t term_size(const Term& t) {
  return std::visit(overloaded{
                        [](const Abs& a) { return 1 + term_size(a.body); },
                        [](const TAbs& a) { return 1 + term_size(a.body); },
                        [](const Let& l) { return 1 + term_size(l.bound) + term_size(l.body); },
                        [](const auto&) -> std::size_t { return 1; },
                    },
                    t->node);
}

inline std::size_t term_depth(const Term& t) {
  return std::visit(
      overloaded{
          [](const Abs& a) { return 1 + term_depth(a.body); },
          [](const TAbs& a) { return 1 + term_depth(a.body); },
          [](const Let& l) { return 1 + std::max(term_depth(l.bound), term_depth(l.body)); },
          [](const auto&) -> std::size_t { return 1; },
      },
      t->node);
}

/// Shape-constructor depth: Top and type variables have depth 1.
inline std::size_t shape_depth(const Shape& s);
inline std::size_t type_depth(const Type& t) { return shape_depth(t.shape); }
inline std::size_t shape_depth(const Shape& s) {
  return std::visit(overloaded{
                        [](const FunShape& f) {
                          return 1 + std::max(type_depth(f.param_type), type_depth(f.result));
                        },
                        [](const TFunShape& f) {
                          return 1 + std::max(shape_depth(f.bound), type_depth(f.result));
                        },
                        [](const BoxShape& b) { return 1 + type_depth(b.inner); },
                        [](const auto&) -> std::size_t { return 1; },
                    },
                    s->node);
}

}  // namespace capcheck
