#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cctype>
#include <map>
#include <string>
#include <vector>

#include "elevate/driver.hpp"
#include "elevate/eval.hpp"
#include "elevate/kinds.hpp"
#include "elevate/parser.hpp"
#include "elevate/pretty.hpp"

namespace py = pybind11;
using namespace elevate;

namespace {

py::dict diag_to_dict(const Diagnostic& d) {
  py::dict out;
  out["severity"] = d.severity == Severity::Error ? "error" : "warning";
  out["code"] = d.code;
  out["message"] = d.message;
  out["span"] = d.span.to_string();
  out["notes"] = d.notes;
  return out;
}

py::list check_source_py(const std::string& source) {
  py::list out;
  auto checked = check_source(source);
  for (const auto& d : checked.diagnostics) out.append(diag_to_dict(d));
  return out;
}

py::list infer_source_py(const std::string& source) {
  auto checked = check_source(source);
  for (const auto& d : checked.diagnostics)
    if (d.severity == Severity::Error) throw py::value_error(d.render());
  py::list out;
  for (const auto& let : checked.lets) {
    py::dict entry;
    entry["name"] = let.name;
    entry["scheme"] = let.printed.body;
    entry["kinds"] = let.printed.kinds;
    entry["rendered"] = let.printed.rendered;
    out.append(entry);
  }
  return out;
}

std::string elaborate_source_py(const std::string& source) {
  return pretty(elaborate_source(source));
}

std::string run_source_py(const std::string& source, long fuel) {
  auto checked = check_source(source);
  for (const auto& d : checked.diagnostics)
    if (d.severity == Severity::Error) throw py::value_error(d.render());
  auto term = checked.runnable();
  if (!term) throw py::value_error("no trailing expression to evaluate");
  auto result = eval(term, fuel);
  switch (result.kind) {
    case EvalResult::Kind::Value:
      return pretty(result.term);
    case EvalResult::Kind::FuelExhausted:
      throw py::value_error("fuel exhausted after " + std::to_string(result.steps) + " steps");
    case EvalResult::Kind::Stuck:
      throw py::value_error("stuck: " + result.reason);
  }
  return "";
}

// Are the schemes of two bindings (possibly from different sources) equal up
// to renaming of quantified variables and row reordering?
bool schemes_equal_py(const std::string& source_a, const std::string& name_a,
                      const std::string& source_b, const std::string& name_b) {
  auto ca = check_source(source_a);
  auto cb = check_source(source_b);
  const CheckedLet* la = ca.find(name_a);
  const CheckedLet* lb = cb.find(name_b);
  if (!la || !lb || !la->ok || !lb->ok)
    throw py::value_error("binding not found or failed to check");
  return scheme_equal_alpha(*ca.store, la->scheme, *cb.store, lb->scheme);
}

std::string pretty_source_py(const std::string& source) {
  return pretty(parse_program(source));
}

bool row_kind_subset_py(const std::string& k1, const std::string& k2) {
  auto parse_kind = [](const std::string& s) {
    bool negative = !s.empty() && s[0] == '~';
    std::string body = negative ? s.substr(1) : s;
    if (body.size() < 2 || body.front() != '{' || body.back() != '}')
      throw py::value_error("row kinds look like {A,B} or ~{A,B}");
    std::set<Label> labels;
    std::string cur;
    for (char c : body.substr(1, body.size() - 2)) {
      if (c == ',') {
        if (!cur.empty()) labels.insert(cur);
        cur.clear();
      } else if (!std::isspace(static_cast<unsigned char>(c))) {
        cur += c;
      }
    }
    if (!cur.empty()) labels.insert(cur);
    return RowKind{negative, labels};
  };
  return row_kind_subset(parse_kind(k1), parse_kind(k2));
}

}  // namespace

PYBIND11_MODULE(_elevate, m) {
  m.doc() = "row-polymorphic strategy language: parsing, pattern elaboration, "
            "type inference and small-step evaluation";

  m.def("check_source", &check_source_py, py::arg("source"),
        "Type-check a program; returns a list of diagnostics (empty when clean).");
  m.def("infer_source", &infer_source_py, py::arg("source"),
        "Infer the scheme of every top-level let; raises on errors.");
  m.def("elaborate_source", &elaborate_source_py, py::arg("source"),
        "Compile complex patterns away and pretty-print the result.");
  m.def("run_source", &run_source_py, py::arg("source"), py::arg("fuel") = 100000,
        "Type-check, then evaluate the trailing expression to a value.");
  m.def("schemes_equal", &schemes_equal_py, py::arg("source_a"), py::arg("name_a"),
        py::arg("source_b"), py::arg("name_b"),
        "Alpha-equality of two bindings' inferred schemes.");
  m.def("pretty_source", &pretty_source_py, py::arg("source"),
        "Parse and pretty-print a program without checking it.");
  m.def("row_kind_subset", &row_kind_subset_py, py::arg("k1"), py::arg("k2"),
        "The row-kind subset relation on kinds written as {A,B} / ~{A,B}.");
}
