#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "elevate/driver.hpp"
#include "elevate/parser.hpp"
#include "elevate/pretty.hpp"

#if defined(__unix__) || defined(__APPLE__)
#include <unistd.h>
#endif

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTypeError = 1;
constexpr int kExitParseError = 2;
constexpr int kExitFuel = 3;

bool use_color() {
  const char* mode = std::getenv("ELEVATE_COLOR");
  std::string m = mode ? mode : "auto";
  if (m == "always") return true;
  if (m == "never") return false;
#if defined(__unix__) || defined(__APPLE__)
  return isatty(fileno(stderr));
#else
  return false;
#endif
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open '" << path << "'\n";
    std::exit(kExitParseError);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_diags(const elevate::CheckedProgram& checked) {
  if (!checked.diagnostics.empty())
    std::cerr << elevate::render_diagnostics(checked.diagnostics, use_color());
}

int checked_exit(const elevate::CheckedProgram& checked) {
  return checked.ok() ? kExitOk : kExitTypeError;
}

elevate::CheckedProgram check_file(const std::string& path) {
  return elevate::check_source(read_file(path), path);
}

int cmd_check(const std::string& path) {
  auto checked = check_file(path);
  print_diags(checked);
  return checked_exit(checked);
}

int cmd_infer(const std::string& path, bool json) {
  auto checked = check_file(path);
  print_diags(checked);
  for (const auto& let : checked.lets) {
    if (!let.ok) continue;
    if (json) {
      nlohmann::json j;
      j["name"] = let.name;
      j["scheme"] = let.printed.body;
      j["kinds"] = let.printed.kinds;
      std::cout << j.dump() << "\n";
    } else {
      std::cout << let.name << ": " << let.printed.rendered << "\n";
    }
  }
  return checked_exit(checked);
}

int cmd_elaborate(const std::string& path) {
  try {
    auto program = elevate::elaborate_source(read_file(path));
    std::cout << elevate::pretty(program);
    return kExitOk;
  } catch (const elevate::CompileError& e) {
    elevate::Diagnostic d;
    d.code = e.code;
    d.message = e.what();
    d.file = path;
    d.span = e.span;
    d.notes = e.notes;
    std::cerr << d.render(use_color()) << "\n";
    return e.code == elevate::codes::parse ? kExitParseError : kExitTypeError;
  }
}

int cmd_run(const std::string& path, long fuel) {
  auto checked = check_file(path);
  print_diags(checked);
  if (!checked.ok()) return kExitTypeError;  // ill-typed files never run
  auto term = checked.runnable();
  if (!term) return kExitOk;  // nothing to evaluate
  auto result = elevate::eval(term, fuel);
  switch (result.kind) {
    case elevate::EvalResult::Kind::Value:
      std::cout << elevate::pretty(result.term) << "\n";
      return kExitOk;
    case elevate::EvalResult::Kind::FuelExhausted:
      std::cerr << "fuel exhausted after " << result.steps << " steps\n";
      return kExitFuel;
    case elevate::EvalResult::Kind::Stuck:
      std::cerr << "stuck: " << result.reason << "\n";
      return kExitTypeError;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"elevate: row-polymorphic strategy language toolchain"};
  app.require_subcommand(1);

  std::string file;
  bool json = false;
  long fuel = 100000;

  auto* check = app.add_subcommand("check", "parse, elaborate and type-check a file");
  check->add_option("file", file, "source file (.elv)")->required();

  auto* infer = app.add_subcommand("infer", "print the inferred scheme of every top-level let");
  infer->add_option("file", file, "source file (.elv)")->required();
  infer->add_flag("--json", json, "one JSON object per binding on stdout");

  auto* elaborate = app.add_subcommand("elaborate", "print the program after pattern elaboration");
  elaborate->add_option("file", file, "source file (.elv)")->required();

  auto* run = app.add_subcommand("run", "type-check and evaluate the trailing expression");
  run->add_option("file", file, "source file (.elv)")->required();
  run->add_option("--fuel", fuel, "maximum number of reduction steps");

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) return cmd_check(file);
    if (infer->parsed()) return cmd_infer(file, json);
    if (elaborate->parsed()) return cmd_elaborate(file);
    if (run->parsed()) return cmd_run(file, fuel);
  } catch (const elevate::CompileError& e) {
    elevate::Diagnostic d;
    d.code = e.code;
    d.message = e.what();
    d.file = file;
    d.span = e.span;
    d.notes = e.notes;
    std::cerr << d.render(use_color()) << "\n";
    return e.code == elevate::codes::parse ? kExitParseError : kExitTypeError;
  }
  return kExitOk;
}
