#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cfs/experiments.hpp"

namespace {

int error_exit(const cfs::Error& e) {
  std::cerr << "cfslab: " << e.what() << "\n";
  switch (e.kind()) {
    case cfs::ErrorKind::Config:
    case cfs::ErrorKind::Io:
    case cfs::ErrorKind::Dimension:
      return 2;
    default:
      return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments for causal fermion system conservation laws"};
  std::string experiment, config, out;
  std::optional<std::uint64_t> seed;
  app.add_option("experiment", experiment, "experiment id")->required()->check(CLI::IsMember(cfs::experiment_names()));
  app.add_option("--config", config, "INI configuration file")->required();
  app.add_option("--seed", seed, "random seed (overrides [run] seed)");
  app.add_option("--out", out, "output directory (default out/<experiment>)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (out.empty()) out = "out/" + experiment;

  try {
    const cfs::IniConfig cfg = cfs::IniConfig::load(config);
    const cfs::ExperimentResult r = cfs::run_experiment(experiment, cfg, seed);
    cfs::write_outputs(r, out);
    for (const auto& c : r.summary.checks) {
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "  ";
      if (c.relation == "==")
        std::cout << c.measured_text << " == " << c.expected_text;
      else if (c.relation == "≈")
        std::cout << cfs::fmt(c.measured) << " ≈ " << cfs::fmt(c.expected) << " ± " << cfs::fmt(c.tolerance);
      else
        std::cout << cfs::fmt(c.measured) << " " << c.relation << " " << cfs::fmt(c.expected);
      std::cout << "\n";
    }
    if (r.numerical_failure) std::cerr << "cfslab: numerical failure: " << r.failure_message << "\n";
    std::cout << "summary written to " << out << "/summary.json\n";
    return cfs::exit_code(r);
  } catch (const cfs::Error& e) {
    return error_exit(e);
  } catch (const std::exception& e) {
    std::cerr << "cfslab: " << e.what() << "\n";
    return 3;
  }
}
