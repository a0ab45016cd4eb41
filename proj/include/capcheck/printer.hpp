#pragma once

// Pretty-printer for the concrete syntax accepted by parser.hpp. Binders
// whose display text would clash with a visible name get a numeric suffix,
// so output always parses back to an alpha-equivalent tree.

#include <map>
#include <set>
#include <string>

#include "syntax.hpp"

namespace capcheck {

class Printer {
 public:
  Printer() = default;

  /// Reserves display texts for names that are in scope around the printed
  /// object (e.g. an environment).
  void reserve(const Name& n) { display(n); }
  void reserve_all(const NameSet& names) {
    for (const Name& n : names) display(n);
  }

  /// Display text of `n`, registering it if it was not seen yet.
  std::string name(const Name& n) { return display(n); }

  std::string cset(const CaptureSet& c) {
    std::string out = "{";
    bool first = true;
    for (const Name& n : c.names()) {
      if (!first) out += ", ";
      out += display(n);
      first = false;
    }
    if (c.has_star()) out += first ? "*" : ", *";
    return out + "}";
  }

  std::string type(const Type& t) {
    if (t.capture.empty()) return shape(t.shape);
    return cset(t.capture) + " " + shape(t.shape);
  }

  std::string shape(const Shape& s) {
    return std::visit(
        overloaded{
            [&](const TVarShape& v) { return display(v.name); },
            [&](const TopShape&) { return std::string("Top"); },
            [&](const BoxShape& b) {
              std::string out = "Box ";
              if (!b.inner.capture.empty()) out += cset(b.inner.capture) + " ";
              return out + operand(b.inner.shape);
            },
            [&](const FunShape& f) {
              if (!occurs_free(f.param, f.result)) {
                std::string lhs = (f.param_type.capture.empty() && !is_binder_shape(f.param_type.shape))
                                      ? shape(f.param_type.shape)
                                      : "(" + type(f.param_type) + ")";
                return lhs + " -> " + type(f.result);
              }
              std::string pt = type(f.param_type);
              Scope sc(*this, f.param);
              return "forall (" + sc.text + ": " + pt + ") -> " + type(f.result);
            },
            [&](const TFunShape& f) {
              std::string bound = shape(f.bound);
              Scope sc(*this, f.tparam);
              return "forall [" + sc.text + " <: " + bound + "] -> " + type(f.result);
            },
        },
        s->node);
  }

  std::string term(const Term& t) {
    return std::visit(
        overloaded{
            [&](const Var& v) { return display(v.name); },
            [&](const Abs& a) {
              std::string pt = type(a.param_type);
              Scope sc(*this, a.param);
              return "fun (" + sc.text + ": " + pt + ") => " + term(a.body);
            },
            [&](const TAbs& a) {
              std::string bound = shape(a.bound);
              Scope sc(*this, a.tparam);
              return "tfun [" + sc.text + " <: " + bound + "] => " + term(a.body);
            },
            [&](const BoxVal& b) { return "box " + display(b.name); },
            [&](const App& a) { return display(a.fn) + " " + display(a.arg); },
            [&](const TApp& a) { return display(a.fn) + " [" + shape(a.type_arg) + "]"; },
            [&](const Let& l) {
              std::string bound = term(l.bound);
              Scope sc(*this, l.binder);
              return "let " + sc.text + " = " + bound + " in " + term(l.body);
            },
            [&](const Unbox& u) { return "unbox " + cset(u.keys) + " " + display(u.name); },
        },
        t->node);
  }

  std::string env(const Env& g) {
    std::string out;
    for (const Binding& b : g.bindings()) {
      if (!out.empty()) out += ", ";
      out += std::visit(overloaded{
                            [&](const TermBinding& tb) {
                              std::string ty = type(tb.type);
                              return bind(tb.name) + ": " + ty;
                            },
                            [&](const TypeBinding& tb) {
                              std::string bound = shape(tb.bound);
                              return bind(tb.name) + " <: " + bound;
                            },
                        },
                        b);
    }
    return out;
  }

 private:
  struct Scope {
    Printer& p;
    Name name;
    std::string text;
    std::optional<std::string> previous;
    Scope(Printer& pr, const Name& n) : p(pr), name(n) {
      if (auto it = p.shown_.find(n.uid); it != p.shown_.end()) previous = it->second;
      text = p.bind(n);
    }
    ~Scope() {
      p.visible_.erase(text);
      if (previous) {
        p.shown_[name.uid] = *previous;
        p.visible_.insert(*previous);
      } else {
        p.shown_.erase(name.uid);
      }
    }
  };

  static bool is_binder_shape(const Shape& s) {
    return shape_as<FunShape>(s) || shape_as<TFunShape>(s);
  }

  std::string operand(const Shape& s) {
    return is_binder_shape(s) ? "(" + shape(s) + ")" : shape(s);
  }

  std::string pick(const std::string& base) {
    if (!visible_.contains(base)) return base;
    for (int i = 1;; ++i) {
      std::string cand = base + std::to_string(i);
      if (!visible_.contains(cand)) return cand;
    }
  }

  std::string bind(const Name& n) {
    std::string text = pick(n.text);
    shown_[n.uid] = text;
    visible_.insert(text);
    return text;
  }

  std::string display(const Name& n) {
    if (auto it = shown_.find(n.uid); it != shown_.end()) return it->second;
    return bind(n);
  }

  std::map<std::uint64_t, std::string> shown_;
  std::set<std::string> visible_;
};

namespace detail {
template <class T>
std::string print_with_free(const T& x) {
  Printer p;
  p.reserve_all(free_vars(x));
  if constexpr (std::is_same_v<T, Type>) return p.type(x);
  else if constexpr (std::is_same_v<T, Shape>) return p.shape(x);
  else return p.term(x);
}
}  // namespace detail

inline std::string print(const Type& t) { return detail::print_with_free(t); }
inline std::string print(const Shape& s) { return detail::print_with_free(s); }
inline std::string print(const Term& t) { return detail::print_with_free(t); }
inline std::string print(const CaptureSet& c) { return Printer{}.cset(c); }
inline std::string print(const Env& g) { return Printer{}.env(g); }

}  // namespace capcheck
