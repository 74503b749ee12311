#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ercav/config.hpp"

namespace ercav::runio {

/// Operating point of the figure-4 recipe: S = 3.2 puts the 50 % chain at p_signal ~ 4.8e-3.
inline constexpr double kFigure4PowerW = 34.2e-12;
/// Field for the figure-3 Zeeman panel; 20 MHz splitting at 10 MHz/mT.
inline constexpr double kFigure3FieldMt = 2.0;

/// Turns `config` into the reference scenario of a report recipe ("figure2" to "figure4").
/// Seed, trials, threads and output directory are kept.
void apply_recipe(RunConfig& config, const std::string& figure);

struct RunResult {
    std::filesystem::path manifest;
    std::vector<std::string> files;      // relative to the output directory
    std::vector<std::string> summary;    // one human-readable line per headline number
};

/// Runs config.task, writes every output plus manifest.json into config.output_dir.
[[nodiscard]] RunResult execute(const RunConfig& config, const std::string& command,
                                const std::map<std::string, std::string>& env_overrides = {});

}  // namespace ercav::runio
