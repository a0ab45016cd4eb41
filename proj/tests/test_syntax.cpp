#include <gtest/gtest.h>

#include <algorithm>
#include <mutex>
#include <thread>

#include "capcheck/capcheck.hpp"
#include "oracles/debruijn.hpp"
#include "oracles/random_syntax.hpp"
#include "test_util.hpp"

using namespace capcheck;
using capcheck::testing::Ctx;

namespace {

Name n(const char* s) { return fresh_name(s); }

}  // namespace

TEST(FreeVars, SingleVariable) {
  Name x = n("x");
  EXPECT_EQ(free_vars(mk::var(x)), NameSet{x});
}

TEST(FreeVars, BinderClosesOccurrence) {
  Name x = n("x");
  EXPECT_TRUE(free_vars(mk::abs(x, pure(top_shape()), mk::var(x))).empty());
}

TEST(FreeVars, LetOfVariable) {
  Name x = n("x"), y = n("y"), z = n("z");
  EXPECT_EQ(free_vars(mk::let(x, mk::var(y), mk::app(x, z))), (NameSet{y, z}));
}

TEST(FreeVars, AnnotationsAndKeysCount) {
  Name x = n("x"), c = n("c"), X = n("X"), k = n("k");
  Term t = mk::abs(x, capturing(CaptureSet{c}, tvar_shape(X)), mk::unbox(CaptureSet{k}, x));
  EXPECT_EQ(free_vars(t), (NameSet{c, X, k}));
}

TEST(FreeVars, StarIsNotAName) {
  Name x = n("x");
  Term t = mk::abs(x, capturing(CaptureSet::universal(), top_shape()), mk::var(x));
  EXPECT_TRUE(free_vars(t).empty());
}

TEST(SubstVar, DirectReplacement) {
  Name z = n("z"), y = n("y"), w = n("w");
  Term r = subst_var(mk::app(z, y), z, w);
  EXPECT_TRUE(alpha_equal(r, mk::app(w, y)));
}

TEST(SubstVar, BoundOccurrenceUntouched) {
  Name z = n("z"), w = n("w");
  Term t = mk::abs(z, pure(top_shape()), mk::var(z));
  EXPECT_TRUE(alpha_equal(subst_var(t, z, w), t));
}

TEST(SubstVar, RewritesAnnotationCaptureSets) {
  Name q = n("q"), z = n("z"), w = n("w");
  Term t = mk::abs(q, capturing(CaptureSet{z}, top_shape()), mk::var(q));
  Term want = mk::abs(q, capturing(CaptureSet{w}, top_shape()), mk::var(q));
  EXPECT_TRUE(alpha_equal(subst_var(t, z, w), want));
  EXPECT_TRUE(oracle::db::eq(oracle::db::of(subst_var(t, z, w)), oracle::db::of(want)));
}

TEST(SubstVar, AvoidsCapture) {
  // [a := b] (fun (b: Top) => a) must not capture the new b.
  Name a = n("a"), b = n("b");
  Term t = mk::abs(b, pure(top_shape()), mk::var(a));
  Term r = subst_var(t, a, b);
  const auto* abs = term_as<Abs>(r);
  ASSERT_NE(abs, nullptr);
  EXPECT_FALSE(abs->param == b);
  EXPECT_EQ(free_vars(r), NameSet{b});
}

TEST(SubstCset, Splice) {
  Ctx g("x: {*} Top, y: {*} Top, c: {*} Top");
  Type r = subst_cset_in_type(g.type("{x, y} Top"), g["x"], g.cs("{c}"), false);
  EXPECT_TRUE(alpha_equal(r, g.type("{c, y} Top")));
}

TEST(SubstCset, PolarityAware) {
  Ctx g("x: {*} Top, c: {*} Top");
  Type r = subst_cset_in_type(g.type("forall (z: {x} Top) -> {x} Top"), g["x"], g.cs("{c}"), true);
  EXPECT_TRUE(alpha_equal(r, g.type("forall (z: {} Top) -> {c} Top")));
}

TEST(SubstCset, NoOccurrence) {
  Ctx g("x: {*} Top, y: {*} Top, c: {*} Top");
  Type r = subst_cset_in_type(g.type("{y} Top"), g["x"], g.cs("{c}"), true);
  EXPECT_TRUE(alpha_equal(r, g.type("{y} Top")));
}

TEST(SubstTypeVar, Basic) {
  Ctx g("X <: Top, x: {*} Top");
  EXPECT_TRUE(alpha_equal(subst_type_var(g.type("X"), g["X"], top_shape()), g.type("Top")));
  EXPECT_TRUE(alpha_equal(subst_type_var(g.type("{x} X"), g["X"], top_shape()), g.type("{x} Top")));
}

TEST(SubstTypeVar, ShadowedBinder) {
  Name X = n("X");
  Type t = pure(tfun_shape(X, top_shape(), pure(tvar_shape(X))));
  Type r = subst_type_var(t, X, box_shape(pure(top_shape())));
  EXPECT_TRUE(alpha_equal(r, t));
}

TEST(AlphaEq, DifferentBinderUids) {
  Ctx g;
  Term a = g.term("fun (x: Top) => let y = x in y");
  Term b = g.term("fun (u: Top) => let v = u in v");
  EXPECT_TRUE(alpha_equal(a, b));
  EXPECT_FALSE(alpha_equal(a, g.term("fun (x: Top) => let y = x in x")));
}

TEST(AlphaEq, FreeNamesCompareByIdentity) {
  Name a1 = n("a"), a2 = n("a");
  EXPECT_FALSE(alpha_equal(mk::var(a1), mk::var(a2)));
}

TEST(CaptureSetRepr, CanonicalOrder) {
  Name a = n("a"), b = n("b");
  EXPECT_TRUE(CaptureSet({a, b}) == CaptureSet({b, a}));
  EXPECT_TRUE(CaptureSet({a, a}) == CaptureSet({a}));
  EXPECT_FALSE(CaptureSet({a}) == CaptureSet({a}).with_star());
}

TEST(FreshNames, ConcurrentUidsAreUnique) {
  std::vector<std::uint64_t> seen;
  std::mutex m;
  std::vector<std::thread> ts;
  for (int t = 0; t < 4; ++t)
    ts.emplace_back([&] {
      std::vector<std::uint64_t> local;
      for (int i = 0; i < 1000; ++i) local.push_back(fresh_name("x").uid);
      std::lock_guard<std::mutex> lock(m);
      seen.insert(seen.end(), local.begin(), local.end());
    });
  for (auto& t : ts) t.join();
  std::sort(seen.begin(), seen.end());
  EXPECT_EQ(std::adjacent_find(seen.begin(), seen.end()), seen.end());
}

// ---------------------------------------------------------------------------
// Properties against the de Bruijn reference
// ---------------------------------------------------------------------------

class SyntaxProperty : public ::testing::TestWithParam<int> {};

TEST_P(SyntaxProperty, SubstVarMatchesReference) {
  oracle::RandomSyntax r(1000 + GetParam());
  for (int i = 0; i < 50; ++i) {
    Term t = r.term(4);
    Name from = r.term_name(), to = r.term_name();
    Term got = subst_var(t, from, to);
    auto want = oracle::db::sub_tm(oracle::db::rename(from, to), oracle::db::of(t));
    ASSERT_TRUE(oracle::db::eq(oracle::db::of(got), want)) << print(t);
  }
}

TEST_P(SyntaxProperty, SubstCsetMatchesReference) {
  oracle::RandomSyntax r(2000 + GetParam());
  for (int i = 0; i < 50; ++i) {
    Type t = r.type(3);
    Name from = r.term_name();
    CaptureSet to = r.cset();
    bool polar = r.coin(0.5);
    Type got = subst_cset_in_type(t, from, to, polar);
    auto want = oracle::db::sub_ty(oracle::db::splice(from, to, polar), oracle::db::of(t), true);
    ASSERT_TRUE(oracle::db::eq(oracle::db::of(got), want)) << print(t);
  }
}

TEST_P(SyntaxProperty, SubstTypeVarMatchesReference) {
  oracle::RandomSyntax r(3000 + GetParam());
  for (int i = 0; i < 50; ++i) {
    Term t = r.term(4);
    Name from = r.type_name();
    Shape to = r.shape(2);
    Term got = subst_type_var(t, from, to);
    auto want = oracle::db::sub_tm(oracle::db::shape_sub(from, to), oracle::db::of(t));
    ASSERT_TRUE(oracle::db::eq(oracle::db::of(got), want)) << print(t);
  }
}

TEST_P(SyntaxProperty, AlphaEqualMatchesReference) {
  oracle::RandomSyntax r(4000 + GetParam());
  for (int i = 0; i < 50; ++i) {
    Term a = r.term(3), b = r.term(3);
    EXPECT_EQ(alpha_equal(a, b), oracle::db::eq(oracle::db::of(a), oracle::db::of(b)));
    EXPECT_TRUE(alpha_equal(a, freshen_binders(a)));
  }
}

TEST_P(SyntaxProperty, DisjointSubstitutionsCommute) {
  oracle::RandomSyntax r(5000 + GetParam(), 6);
  for (int i = 0; i < 50; ++i) {
    Term t = r.term(4);
    const auto& ns = r.term_names;
    Name a = ns[0], b = ns[1], c = ns[2], d = ns[3];
    Term one = subst_var(subst_var(t, a, b), c, d);
    Term two = subst_var(subst_var(t, c, d), a, b);
    ASSERT_TRUE(alpha_equal(one, two)) << print(t);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, SyntaxProperty, ::testing::Range(0, 8));
