#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfs/config.hpp"
#include "cfs/report.hpp"

namespace cfs {

struct ExperimentResult {
  Summary summary;
  std::vector<Table> tables;
  std::vector<Plot> plots;
  std::vector<std::pair<std::string, std::string>> files;  // extra text artifacts (name, content)
  bool numerical_failure = false;
  std::string failure_message;
};

const std::vector<std::string>& experiment_names();

// Runs one experiment. The seed is taken from the override, else from [run] seed, else 1.
// Throws Error(Config) on schema errors, including unknown keys.
ExperimentResult run_experiment(const std::string& name, const IniConfig& cfg,
                                std::optional<std::uint64_t> seed_override = std::nullopt);

void write_outputs(const ExperimentResult& r, const std::string& dir);

// 0 all checks pass, 1 a check failed, 3 numerical failure.
int exit_code(const ExperimentResult& r);

}  // namespace cfs
