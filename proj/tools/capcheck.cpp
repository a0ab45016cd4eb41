// capcheck: check, evaluate, trace and fuzz capture-calculus programs.
//
// Exit codes: 0 success, 1 type or syntax error, 2 stuck evaluation or a
// failed property, 3 usage error.

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "capcheck/capcheck.hpp"
#include "json.hpp"

namespace {

using namespace capcheck;

constexpr int kOk = 0;
constexpr int kTypeError = 1;
constexpr int kStuck = 2;
constexpr int kUsage = 3;

bool use_color() {
  const char* env = std::getenv("CAPCHECK_COLOR");
  std::string mode = env ? env : "auto";
  if (mode == "always") return true;
  if (mode == "never") return false;
  return isatty(fileno(stderr)) != 0;
}

void report(const Diagnostic& d, bool json) {
  if (json) {
    std::cerr << to_json(d).dump() << "\n";
    return;
  }
  std::string text = format_diagnostic(d);
  if (use_color()) {
    std::string label = d.severity + "[" + d.code + "]";
    if (auto pos = text.find(label); pos != std::string::npos)
      text.replace(pos, label.size(), "\033[1;31m" + label + "\033[0m");
  }
  std::cerr << text << "\n";
}

struct Loaded {
  Program program;
  ClassifiedProgram classified;
};

/// Reads, parses and typechecks FILE. Returns an exit code on failure.
std::variant<Loaded, int> load(const std::string& path, bool json) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "capcheck: cannot read '" << path << "'\n";
    return kUsage;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  ParseOptions opts;
  opts.file = path;
  auto prog = parse_program(ss.str(), opts);
  if (!prog) {
    report(prog.error(), json);
    return kTypeError;
  }
  auto cls = classify_program(*prog);
  if (!cls) {
    report(cls.error(), json);
    return kTypeError;
  }
  return Loaded{*prog, *cls};
}

struct Answer {
  Term body;
  std::string type;
  CaptureSet cv;
};

/// The part of a reduct below the platform, with its type in the platform
/// environment.
Answer describe(const Term& whole, const Loaded& l) {
  Term body = whole;
  for (std::size_t i = 0; i < l.program.prims.size(); ++i)
    if (const auto* let = term_as<Let>(body)) body = let->body;
  auto ty = synth(l.classified.platform.env, body);
  return Answer{body, ty ? print(*ty) : "<ill-typed: " + ty.error().message + ">", cv(body)};
}

nlohmann::json final_json(const RunResult& r, const Loaded& l) {
  Answer a = describe(r.final, l);
  nlohmann::json j = {{"outcome", outcome_name(r.outcome)},
                      {"steps", r.trace.steps.size()},
                      {"term", print(a.body)},
                      {"type", a.type},
                      {"cv", print(a.cv)}};
  if (r.outcome == Outcome::Stuck) j["reason"] = r.stuck_reason;
  return j;
}

int cmd_check(const std::string& file, bool json) {
  auto l = load(file, json);
  if (auto* code = std::get_if<int>(&l)) return *code;
  const Loaded& loaded = std::get<Loaded>(l);
  if (json)
    std::cout << nlohmann::json{{"type", print(loaded.classified.type)}, {"cv", print(cv(loaded.program.body))}}.dump()
              << "\n";
  else
    std::cout << print(loaded.classified.type) << "\n";
  return kOk;
}

int cmd_eval(const std::string& file, std::size_t max_steps, bool json, bool trace) {
  auto l = load(file, json);
  if (auto* code = std::get_if<int>(&l)) return *code;
  const Loaded& loaded = std::get<Loaded>(l);
  std::size_t n = 0;
  RunResult r = run(program_term(loaded.program), max_steps, [&](const TraceStep& s) {
    if (!trace) return;
    Answer a = describe(s.term, loaded);
    std::cout << nlohmann::json{{"step", ++n},
                                {"rule", rule_name(s.rule)},
                                {"used", print(s.used)},
                                {"term", print(a.body)},
                                {"cv", print(a.cv)}}
                     .dump()
              << "\n";
  });
  if (trace || json) {
    std::cout << final_json(r, loaded).dump() << "\n";
  } else {
    Answer a = describe(r.final, loaded);
    std::cout << "outcome: " << outcome_name(r.outcome) << "\n"
              << "steps: " << r.trace.steps.size() << "\n"
              << "value: " << print(a.body) << "\n"
              << "type: " << a.type << "\n"
              << "cv: " << print(a.cv) << "\n";
  }
  if (r.outcome == Outcome::Stuck) {
    Diagnostic d = make_diag("E-STUCK", "evaluation is stuck: " + r.stuck_reason);
    d.severity = "error";
    report(d, json);
    return kStuck;
  }
  return kOk;
}

int cmd_fuzz(const RunConfig& rc, bool json) {
  Coverage cov;
  auto reports = run_properties(rc, &cov);
  bool ok = true;
  for (const auto& rep : reports) {
    ok = ok && rep.failures.empty();
    if (json) {
      std::cout << to_json(rep).dump() << "\n";
      continue;
    }
    std::cout << (rep.failures.empty() ? "PASS " : "FAIL ") << rep.name << ": " << rep.cases << " cases, "
              << rep.failures.size() << " failures\n";
    for (const auto& f : rep.failures) {
      std::cout << "  seed " << f.seed << "\n    term:     " << f.term << "\n    expected: " << f.expected
                << "\n    actual:   " << f.actual << "\n";
    }
  }
  if (json) {
    std::cout << nlohmann::json{{"coverage", {{"typing", cov.typing}, {"evaluation", cov.evaluation}}}}.dump()
              << "\n";
  } else {
    std::cout << "typing rules:";
    for (const auto& [k, v] : cov.typing) std::cout << " " << k << "=" << v;
    std::cout << "\nevaluation rules:";
    for (const auto& [k, v] : cov.evaluation) std::cout << " " << k << "=" << v;
    std::cout << "\n";
  }
  return ok ? kOk : kStuck;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Typechecker and evaluator for a capture calculus"};
  app.require_subcommand(1);

  bool json = false;
  std::string file;
  std::size_t max_steps = 10000;

  auto* check = app.add_subcommand("check", "Typecheck a program and print its type");
  check->add_option("file", file, "Program file")->required();
  check->add_flag("--json", json, "Diagnostics as JSON lines");

  auto* eval = app.add_subcommand("eval", "Run a program to normal form");
  eval->add_option("file", file, "Program file")->required();
  eval->add_option("--max-steps", max_steps, "Step budget")->check(CLI::PositiveNumber);
  eval->add_flag("--json", json, "JSON output");

  auto* trace = app.add_subcommand("trace", "Run a program, printing one JSON line per step");
  trace->add_option("file", file, "Program file")->required();
  trace->add_option("--max-steps", max_steps, "Step budget")->check(CLI::PositiveNumber);
  trace->add_flag("--json", json, "Diagnostics as JSON lines");

  RunConfig rc;
  std::string property = "all";
  bool mutate = false;
  auto* fuzz = app.add_subcommand("fuzz", "Check metatheory properties on generated programs");
  fuzz->add_option("--seed", rc.gen.seed, "Base seed");
  fuzz->add_option("--cases", rc.cases, "Cases per property");
  fuzz->add_option("--depth", rc.gen.max_depth, "Maximum term depth")->check(CLI::PositiveNumber);
  fuzz->add_option("--env", rc.gen.max_env, "Maximum number of primitives and top-level lets");
  fuzz->add_option("--max-steps", rc.max_steps, "Steps per program")->check(CLI::PositiveNumber);
  fuzz->add_option("--property", property, "Property name or 'all'");
  fuzz->add_option("--star-bias", rc.gen.star_bias, "Probability of `*` in a binder capture set")
      ->check(CLI::Range(0.0, 1.0));
  fuzz->add_option("--box-bias", rc.gen.box_bias, "Probability of box forms")->check(CLI::Range(0.0, 1.0));
  fuzz->add_option("--let-bias", rc.gen.let_bias, "Probability of let forms")->check(CLI::Range(0.0, 1.0));
  fuzz->add_flag("--mutate-unbox", mutate, "Disable the unbox key-set check (mutation testing)");
  fuzz->add_flag("--json", json, "Reports as JSON lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*check) return cmd_check(file, json);
    if (*eval) return cmd_eval(file, max_steps, json, false);
    if (*trace) return cmd_eval(file, max_steps, json, true);
    if (*fuzz) {
      if (property != "all") {
        const auto& names = property_names();
        if (std::find(names.begin(), names.end(), property) == names.end()) {
          std::cerr << "capcheck: unknown property '" << property << "'; expected one of:";
          for (const auto& n : names) std::cerr << " " << n;
          std::cerr << "\n";
          return kUsage;
        }
        rc.properties = {property};
      }
      rc.checker.allow_star_keys = mutate;
      rc.gen.allow_star_keys = mutate;
      return cmd_fuzz(rc, json);
    }
  } catch (const std::exception& e) {
    std::cerr << "capcheck: internal error: " << e.what() << "\n";
    return kStuck;
  }
  return kUsage;
}
