// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "capcheck/capcheck.hpp"
#include "oracles/declarative.hpp"
#include "test_util.hpp"

using namespace capcheck;
using capcheck::testing::Ctx;

namespace {

// Pinned thresholds.
constexpr std::size_t kFuzzCases = 1000;
constexpr std::size_t kFuzzSteps = 200;
constexpr double kFuzzSeconds = 60.0;
constexpr std::size_t kOracleEnvBindings = 3;
constexpr std::size_t kDepth2Samples = 48;
constexpr std::size_t kListElements = 3;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) detail = what;
    pass = false;
  }
};

std::string corpus(const std::string& file) {
  return capcheck::testing::read_file(std::string(CAPCHECK_PROGRAMS) + "/" + file);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Type parse_in(const Env& env, const std::string& src) {
  ParseOptions o;
  o.env = env;
  auto r = parse_type(src, o);
  if (!r) throw std::runtime_error("type '" + src + "': " + r.error().message);
  return *r;
}

// -- 1 ------------------------------------------------------------------------

Verdict subcapture_table() {
  Verdict o;
  Ctx g("fs: {*} Top, ct: {*} Top, l: {fs} Top");
  struct Row {
    const char* a;
    const char* b;
    bool holds;
  } rows[] = {
      {"{l}", "{fs}", true},        {"{fs}", "{*}", true},      {"{l}", "{*}", true},
      {"{fs}", "{fs, ct}", true},   {"{ct}", "{fs, ct}", true}, {"{fs, ct}", "{*}", true},
      {"{fs}", "{l}", false},       {"{*}", "{fs}", false},     {"{fs, ct}", "{fs}", false},
      {"{ct}", "{fs}", false},      {"{*}", "{fs, ct}", false},
  };
  for (const Row& r : rows)
    o.require(g.subc(r.a, r.b) == r.holds, std::string(r.a) + " <: " + r.b + " expected " + (r.holds ? "true" : "false"));
  Ctx h("x: {*} Top, y: {*} Top");
  o.require(!h.subc("{x}", "{y}"), "{x} <: {y} accepted");
  if (o.pass) o.detail = std::to_string(std::size(rows) + 1) + " relations match";
  return o;
}

// -- 2 ------------------------------------------------------------------------

Verdict avoidance() {
  Verdict o;
  struct Case {
    const char* param;
    const char* shape;
  } cases[] = {{"Top", "Top"}, {"Top", "Box Top"}, {"Box Top", "(Top -> Top)"}};
  std::string last;
  for (const Case& c : cases) {
    std::string src = std::string("prim c : {*} Top = fun (u: Top) => u in\n") + "let x = fun (y: " + c.param +
                      ") => c in\nfun (z: {x} " + c.shape + ") => z";
    auto p = parse_program(src);
    if (!p) {
      o.require(false, p.error().message);
      continue;
    }
    auto r = check_program(*p);
    if (!r) {
      o.require(false, format_diagnostic(r.error()));
      continue;
    }
    Type want = parse_in(r->platform, std::string(c.shape) + " -> {c} " + c.shape);
    o.require(alpha_equal(r->type, want), "got " + print(r->type) + ", expected " + print(want));
    last = print(r->type);
  }
  auto file = check_program(capcheck::testing::program(corpus("avoidance.cc")));
  o.require(file && print(file->type) == "Top -> {c} Top", "avoidance.cc type");
  if (o.pass) o.detail = "Top -> {c} Top, " + last;
  return o;
}

// -- 3 ------------------------------------------------------------------------

Verdict box_roundtrip() {
  Verdict o;
  Program p = capcheck::testing::program(corpus("box_roundtrip.cc"));
  auto r = check_program(p);
  if (!r) {
    o.require(false, format_diagnostic(r.error()));
    return o;
  }
  const Name x = p.prims.at(0).name;
  o.require(alpha_equal(r->type, Type{CaptureSet{x}, top_shape()}), "type " + print(r->type));
  o.require(cv(p.body) == CaptureSet{x}, "cv " + print(cv(p.body)));
  const Let* l = term_as<Let>(p.body);
  const Unbox* u = l ? term_as<Unbox>(l->body) : nullptr;
  o.require(u != nullptr, "body is not let/unbox");
  if (u) o.require(subcapture(r->platform, CaptureSet{x}, u->keys), "{x} not below the keys");
  if (o.pass) o.detail = "type " + print(r->type) + ", cv " + print(cv(p.body));
  return o;
}

// -- 4 ------------------------------------------------------------------------

Verdict escapes(const CheckerOptions& opts) {
  Verdict o;
  struct Case {
    const char* file;
    const char* code;  // nullptr: accepted
  } cases[] = {
      {"root_escape.cc", code::kRootLeak},  {"sneaky_pair.cc", code::kRootLeak}, {"keys_escape.cc", code::kKeys},
      {"keys_escape_fixed.cc", nullptr},    {"safe_usage.cc", nullptr},
  };
  for (const Case& c : cases) {
    auto r = check_program(capcheck::testing::program(corpus(c.file)), opts);
    if (c.code)
      o.require(!r && r.error().code == c.code, std::string(c.file) + " not rejected with " + c.code);
    else
      o.require(static_cast<bool>(r), std::string(c.file) + " rejected");
  }
  if (o.pass) o.detail = std::to_string(std::size(cases)) + " files as expected";
  return o;
}

// -- 5 ------------------------------------------------------------------------

// Counts the steps whose redex applies `f`.
std::size_t applications_of(const RunResult& r, const Term& start, const Name& f) {
  std::size_t n = 0;
  Term cur = start;
  for (const TraceStep& s : r.trace.steps) {
    Term redex = focus(canonical_split(cur).plug).redex;
    if (const auto* a = term_as<App>(redex); a && a->fn == f && s.rule == Rule::Apply) ++n;
    cur = s.term;
  }
  return n;
}

const Name* prim_named(const Program& p, const std::string& text) {
  for (const Prim& prim : p.prims)
    if (prim.name.text == text) return &prim.name;
  return nullptr;
}

Verdict church_lists() {
  Verdict o;
  std::string src = corpus("church_map.cc");
  Program p = capcheck::testing::program(src);
  auto platform = check_platform(p.prims);
  if (!platform) {
    o.require(false, format_diagnostic(platform.error()));
    return o;
  }

  const std::string elem = "Box {*} Top";
  auto list = [&](const std::string& t) {
    return "(forall [C <: " + elem + "] -> forall (op: {*} " + t + " -> {*} C -> C) -> {op} C -> C)";
  };
  std::map<std::string, std::string> stated = {
      {"nil", "forall [T <: " + elem + "] -> " + list("T")},
      {"cons", "forall [T <: " + elem + "] -> forall (hd: T) -> forall (tl: " + list("T") + ") -> " + list("T")},
      {"map", "forall [A <: " + elem + "] -> forall [B <: " + elem + "] -> forall (xs: " + list("A") +
                  ") -> forall (f: {*} A -> B) -> " + list("B")},
  };
  Env env = *platform;
  std::size_t seen = 0;
  for (Term cur = p.body; const auto* l = term_as<Let>(cur); cur = l->body) {
    auto it = stated.find(l->binder.text);
    if (it != stated.end()) {
      Type want = parse_in(env, it->second);
      auto ok = check_type(env, l->bound, want);
      o.require(static_cast<bool>(ok), l->binder.text + " does not check at " + print(want));
      ++seen;
    }
    auto ty = synth(env, l->bound);
    if (!ty) {
      o.require(false, format_diagnostic(ty.error()));
      return o;
    }
    env = env.with_term(l->binder, *ty);
  }
  o.require(seen == stated.size(), "nil, cons and map not all found");

  auto whole = check_program(p);
  o.require(whole && alpha_equal(whole->type, parse_in(whole->platform, list("Box Top"))),
            "map result is not a list of Box Top");

  // map ticks once per element and yields a normal form.
  Term t = program_term(p);
  RunResult r = run(t, 100000);
  o.require(r.outcome == Outcome::Normal, std::string("map outcome ") + outcome_name(r.outcome));
  const Name* tick = prim_named(p, "tick");
  std::size_t ticks = tick ? applications_of(r, t, *tick) : 0;
  o.require(ticks == kListElements, "map ticked " + std::to_string(ticks) + " times");

  // Folding the mapped list with a counting operation visits each element.
  std::string last = "map [Box Top] [Box Top] xs f";
  auto at = src.rfind(last);
  o.require(at != std::string::npos, "map call not found");
  if (at == std::string::npos) return o;
  std::string fold = "prim count : {*} Top -> Top = fun (u: Top) => u in\n" + src.substr(0, at) +
                     "let ys = " + last + " in\n" +
                     "ys [Box Top] (fun (hd: Box Top) => fun (acc: Box Top) => let k = count hd in acc) (box e)\n";
  Program fp = capcheck::testing::program(fold);
  auto ft = check_program(fp);
  o.require(static_cast<bool>(ft), ft ? "" : "fold: " + format_diagnostic(ft.error()));
  Term f = program_term(fp);
  RunResult fr = run(f, 100000);
  o.require(fr.outcome == Outcome::Normal, std::string("fold outcome ") + outcome_name(fr.outcome));
  std::size_t counted = applications_of(fr, f, *prim_named(fp, "count"));
  o.require(counted == kListElements, "fold counted " + std::to_string(counted) + " elements");
  if (o.pass)
    o.detail = "types match; " + std::to_string(r.trace.steps.size()) + " steps, " + std::to_string(ticks) +
               " ticks, fold counts " + std::to_string(counted);
  return o;
}

// -- 6 ------------------------------------------------------------------------

Verdict fuzz(const CheckerOptions& opts, bool star_keys) {
  Verdict o;
  RunConfig rc;
  rc.cases = kFuzzCases;
  rc.max_steps = kFuzzSteps;
  rc.checker = opts;
  rc.gen.allow_star_keys = star_keys;
  auto t0 = std::chrono::steady_clock::now();
  std::ostringstream summary;
  for (const PropertyReport& rep : run_properties(rc)) {
    summary << rep.name << "=" << rep.failures.size() << " ";
    o.require(rep.cases == kFuzzCases, rep.name + " ran " + std::to_string(rep.cases) + " cases");
    o.require(rep.failures.empty(), rep.name + ": " + std::to_string(rep.failures.size()) + " failures" +
                                        (rep.failures.empty() ? "" : ", e.g. " + rep.failures[0].expected));
  }
  double secs = seconds_since(t0);
  o.require(secs <= kFuzzSeconds, "took " + std::to_string(secs) + " s");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f s", secs);
  if (o.pass) o.detail = std::to_string(kFuzzCases) + " cases x " + std::to_string(property_names().size()) +
                         " properties, 0 failures, " + buf;
  return o;
}

// -- 7 ------------------------------------------------------------------------

Verdict oracles() {
  Verdict o;
  std::size_t envs = 0, cpairs = 0, tpairs = 0, bad = 0;
  oracle::decl::Binders b;
  std::uint64_t seed = 1;
  auto t0 = std::chrono::steady_clock::now();
  for (const Env& env : oracle::decl::enumerate_envs(kOracleEnvBindings)) {
    ++envs;
    oracle::decl::SubcaptureRelation sc(env);
    auto sets = sc.universe();
    for (const CaptureSet& x : sets)
      for (const CaptureSet& y : sets) {
        ++cpairs;
        if (subcapture(env, x, y) != sc.holds(x, y)) {
          ++bad;
          o.require(false, print(env) + " |- " + print(x) + " <: " + print(y));
        }
      }
    std::vector<Type> types = oracle::decl::depth1_types(env);
    auto d2 = oracle::decl::sample_depth2(env, b, kDepth2Samples, seed++);
    types.insert(types.end(), d2.begin(), d2.end());
    oracle::decl::SubtypeRelation st(env, types, b);
    const auto& u = st.universe();
    for (std::size_t i = 0; i < u.size(); ++i)
      for (std::size_t j = 0; j < u.size(); ++j) {
        ++tpairs;
        if (subtype(env, u[i], u[j]) != st.holds(i, j)) {
          ++bad;
          o.require(false, print(env) + " |- " + print(u[i]) + " <: " + print(u[j]));
        }
      }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu environments, %zu capture pairs, %zu type pairs, %zu disagreements, %.1f s",
                envs, cpairs, tpairs, bad, seconds_since(t0));
  o.detail = o.pass ? buf : o.detail + " (" + buf + ")";
  return o;
}

// -- 8 ------------------------------------------------------------------------

Verdict determinism() {
  Verdict o;
  RunConfig rc;
  std::size_t programs = 0, states = 0;
  for (const std::string& prop : property_names())
    for (std::size_t i = 0; i < kFuzzCases; ++i) {
      auto p = Generator(rc.gen, case_seed(rc.gen.seed, prop, i)).gen_program();
      if (!p) continue;
      ++programs;
      auto ex = detail::execute(*p, kFuzzSteps, rc.checker);
      if (!ex) continue;
      for (std::size_t k = 0; k < ex->states.size(); ++k) {
        ++states;
        std::size_t m = count_rule_matches(ex->states[k]);
        bool steps = std::holds_alternative<Stepped>(step(ex->states[k]));
        std::size_t want = steps ? 1 : 0;
        o.require(m == want, "state with " + std::to_string(m) + " matching rules: " + format_program(*p));
      }
    }
  if (o.pass) o.detail = std::to_string(states) + " states over " + std::to_string(programs) + " programs";
  return o;
}

// -- 9 ------------------------------------------------------------------------

Verdict mutation() {
  Verdict o;
  CheckerOptions mutated;
  mutated.allow_star_keys = true;
  Verdict c4 = escapes(mutated);
  Verdict c6 = fuzz(mutated, true);
  o.require(!c4.pass || !c6.pass, "mutated checker passes criteria 4 and 6");
  o.detail = std::string("criterion 4 ") + (c4.pass ? "passes" : "fails (" + c4.detail + ")") + ", criterion 6 " +
             (c6.pass ? "passes" : "fails (" + c6.detail + ")");
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* title;
    std::function<Verdict()> run;
  } criteria[] = {
      {"subcapturing table", subcapture_table},
      {"avoidance", avoidance},
      {"box round trip", box_roundtrip},
      {"escape rejection", [] { return escapes({}); }},
      {"church-encoded lists", church_lists},
      {"metatheory fuzz suite", [] { return fuzz({}, false); }},
      {"oracle equivalence", oracles},
      {"determinism", determinism},
      {"mutation sentinel", mutation},
  };
  int failed = 0, n = 0;
  for (const Criterion& c : criteria) {
    ++n;
    Verdict r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    if (!r.pass) ++failed;
    std::cout << (r.pass ? "PASS" : "FAIL") << " criterion " << n << " (" << c.title << "): " << r.detail << std::endl;
  }
  std::cout << (n - failed) << "/" << n << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
