// qdarwin - command-line front end.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 numerical-invariant failure.

#include "qdarwin/config.hpp"
#include "qdarwin/errors.hpp"
#include "qdarwin/parallel.hpp"
#include "qdarwin/report.hpp"
#include "qdarwin/runner.hpp"
#include "qdarwin/selftest.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "experiment configuration (YAML)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "master seed, overrides sampler.seed");
  cmd->add_option("--out", c.out, "output directory, overrides output.directory");
  cmd->add_option("--format", c.format, "csv, json or both")->check(CLI::IsMember({"csv", "json", "both"}));
}

qdarwin::RunOptions options_from(const Common& c) {
  qdarwin::RunOptions o;
  o.seed = c.seed;
  if (!c.out.empty()) o.out = c.out;
  if (!c.format.empty()) o.formats = qdarwin::parse_formats(c.format);
  return o;
}

void print_manifest(const qdarwin::RunManifest& m) {
  std::cout << "config digest " << m.digest << ", seed " << m.seed << "\n";
  for (const auto& [analysis, files] : m.files) {
    std::cout << analysis << ":";
    for (const auto& f : files) std::cout << " " << f;
    std::cout << "\n";
  }
}

int run(const Common& c, std::optional<std::string> only) {
  qdarwin::RunOptions o = options_from(c);
  o.only = std::move(only);
  print_manifest(qdarwin::run_config(std::filesystem::path(c.config), o));
  return 0;
}

int validate(const Common& c) {
  const qdarwin::ExperimentConfig cfg = qdarwin::load_config(c.config);
  std::cout << "configuration ok, digest " << qdarwin::config_digest(cfg.canonical) << "\n";
  if (cfg.model) {
    for (const auto& w : qdarwin::validate_model(*cfg.model).warnings) std::cout << "warning: " << w << "\n";
  }
  return 0;
}

int selftest(std::uint64_t seed) {
  bool ok = true;
  for (const auto& r : qdarwin::run_selftest(seed)) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.checks << " checks)";
    if (!r.passed) std::cout << ": " << r.detail;
    std::cout << "\n";
    ok = ok && r.passed;
  }
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum Darwinism redundancy and Chernoff-information toolkit"};
  app.footer(std::string("Worker threads: set ") + qdarwin::kThreadsEnv +
             " (default: hardware concurrency). Results do not depend on it.");
  app.require_subcommand(1);

  Common common;
  std::uint64_t selftest_seed = 0;
  CLI::App* run_cmd = app.add_subcommand("run", "run every analysis listed in the configuration");
  add_common(run_cmd, common);
  CLI::App* validate_cmd = app.add_subcommand("validate", "parse and validate a configuration");
  validate_cmd->add_option("--config", common.config, "experiment configuration (YAML)")
      ->required()
      ->check(CLI::ExistingFile);
  std::vector<std::pair<std::string, CLI::App*>> single;
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"pip", "partial-information table"},
           {"redundancy", "redundancy R_delta by threshold search"},
           {"chernoff", "typical Chernoff information and redundancy estimate"},
           {"photon", "photon-sky decoherence time, receptivity and redundancy rate"}}) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common(cmd, common);
    single.emplace_back(name, cmd);
  }
  CLI::App* selftest_cmd = app.add_subcommand("selftest", "run the randomized invariant suites");
  selftest_cmd->add_option("--seed", selftest_seed, "seed for the random instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run_cmd->parsed()) return run(common, std::nullopt);
    if (validate_cmd->parsed()) return validate(common);
    if (selftest_cmd->parsed()) return selftest(selftest_seed);
    for (const auto& [name, cmd] : single) {
      if (cmd->parsed()) return run(common, name);
    }
  } catch (const qdarwin::NumericalError& e) {
    std::cerr << "numerical invariant failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
