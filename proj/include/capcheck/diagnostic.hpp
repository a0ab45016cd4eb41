#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "syntax.hpp"

namespace capcheck {

namespace code {
inline constexpr const char* kSyntax = "E-SYNTAX";
inline constexpr const char* kUnbound = "E-UNBOUND";
inline constexpr const char* kNotFun = "E-NOTFUN";
inline constexpr const char* kNotTFun = "E-NOTTFUN";
inline constexpr const char* kNotBox = "E-NOTBOX";
inline constexpr const char* kArg = "E-ARG";
inline constexpr const char* kTArg = "E-TARG";
inline constexpr const char* kRootLeak = "E-ROOT-LEAK";
inline constexpr const char* kKeys = "E-KEYS";
inline constexpr const char* kWf = "E-WF";
inline constexpr const char* kMismatch = "E-MISMATCH";
inline constexpr const char* kPlatform = "E-PLATFORM";
inline constexpr const char* kLimit = "E-LIMIT";
}  // namespace code

struct DiagnosticNote {
  std::string text;
  SourceSpan span;
};

struct Diagnostic {
  std::string severity = "error";
  std::string code;
  std::string message;
  SourceSpan span;
  std::vector<DiagnosticNote> notes;
};

inline Diagnostic make_diag(std::string code, std::string message, SourceSpan span = {}) {
  Diagnostic d;
  d.code = std::move(code);
  d.message = std::move(message);
  d.span = std::move(span);
  return d;
}

/// Value or diagnostic.
template <class T>
class Result {
 public:
  Result(T value) : v_(std::move(value)) {}
  Result(Diagnostic d) : v_(std::move(d)) {}

  bool ok() const { return v_.index() == 0; }
  explicit operator bool() const { return ok(); }

  const T& value() const& {
    if (!ok()) throw std::logic_error("Result::value on error: " + error().message);
    return std::get<0>(v_);
  }
  T&& value() && {
    if (!ok()) throw std::logic_error("Result::value on error: " + error().message);
    return std::get<0>(std::move(v_));
  }
  const T& operator*() const& { return value(); }
  const T* operator->() const { return &value(); }

  const Diagnostic& error() const { return std::get<1>(v_); }

 private:
  std::variant<T, Diagnostic> v_;
};

inline nlohmann::json to_json(const SourcePos& p) {
  return {{"offset", p.offset}, {"line", p.line}, {"column", p.column}};
}

inline nlohmann::json to_json(const SourceSpan& s) {
  if (!s.known()) return nullptr;
  return {{"file", s.file}, {"start", to_json(s.start)}, {"end", to_json(s.end)}};
}

inline nlohmann::json to_json(const Diagnostic& d) {
  nlohmann::json j = {{"severity", d.severity},
                      {"code", d.code},
                      {"message", d.message},
                      {"span", to_json(d.span)}};
  if (!d.notes.empty()) {
    auto notes = nlohmann::json::array();
    for (const auto& n : d.notes) notes.push_back({{"text", n.text}, {"span", to_json(n.span)}});
    j["notes"] = std::move(notes);
  }
  return j;
}

/// `file:line:col: error[CODE]: message`
inline std::string format_diagnostic(const Diagnostic& d) {
  std::string out;
  if (d.span.known()) {
    out += d.span.file.empty() ? "<input>" : d.span.file;
    out += ":" + std::to_string(d.span.start.line) + ":" + std::to_string(d.span.start.column) + ": ";
  }
  out += d.severity + "[" + d.code + "]: " + d.message;
  for (const auto& n : d.notes) {
    out += "\n  note: " + n.text;
    if (n.span.known())
      out += " (" + std::to_string(n.span.start.line) + ":" + std::to_string(n.span.start.column) + ")";
  }
  return out;
}

}  // namespace capcheck
