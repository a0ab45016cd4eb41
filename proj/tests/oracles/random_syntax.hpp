#pragma once

// Untyped random syntax over a small pool of names. Binders reuse pool names,
// so generated trees have shadowing and free occurrences that a substitution
// could capture.

#include <random>
#include <vector>

#include "capcheck/syntax.hpp"

namespace oracle {

class RandomSyntax {
 public:
  explicit RandomSyntax(std::uint64_t seed, std::size_t terms = 4, std::size_t types = 2) : rng_(seed) {
    const char* tn[] = {"a", "b", "c", "d", "e", "f"};
    const char* yn[] = {"X", "Y", "Z"};
    for (std::size_t i = 0; i < terms; ++i) term_names.push_back(capcheck::fresh_name(tn[i % 6]));
    for (std::size_t i = 0; i < types; ++i) type_names.push_back(capcheck::fresh_name(yn[i % 3]));
  }

  capcheck::Name term_name() { return pick(term_names); }
  capcheck::Name type_name() { return pick(type_names); }

  capcheck::CaptureSet cset() {
    std::vector<capcheck::Name> ns;
    for (const auto& n : term_names)
      if (coin(0.3)) ns.push_back(n);
    return capcheck::CaptureSet(ns, coin(0.2));
  }

  capcheck::Shape shape(int depth) {
    using namespace capcheck;
    int k = depth <= 1 ? int(below(2)) : int(below(5));
    switch (k) {
      case 0: return top_shape();
      case 1: return tvar_shape(type_name());
      case 2: return fun_shape(term_name(), type(depth - 1), type(depth - 1));
      case 3: return tfun_shape(type_name(), shape(depth - 1), type(depth - 1));
      default: return box_shape(type(depth - 1));
    }
  }

  capcheck::Type type(int depth) { return capcheck::Type{cset(), shape(depth)}; }

  capcheck::Term term(int depth) {
    using namespace capcheck;
    int k = depth <= 1 ? int(below(5)) : int(below(8));
    switch (k) {
      case 0: return mk::var(term_name());
      case 1: return mk::box(term_name());
      case 2: return mk::app(term_name(), term_name());
      case 3: return mk::tapp(term_name(), shape(2));
      case 4: return mk::unbox(cset().with_star(false), term_name());
      case 5: return mk::abs(term_name(), type(2), term(depth - 1));
      case 6: return mk::tabs(type_name(), shape(2), term(depth - 1));
      default: return mk::let(term_name(), term(depth - 1), term(depth - 1));
    }
  }

  bool coin(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }
  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  std::vector<capcheck::Name> term_names;
  std::vector<capcheck::Name> type_names;

 private:
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

  std::mt19937_64 rng_;
};

}  // namespace oracle
