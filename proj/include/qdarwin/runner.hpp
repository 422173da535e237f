// runner.hpp - executes the analyses of a configuration and writes their outputs.

#pragma once

#include "qdarwin/config.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qdarwin {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunOptions {
  std::optional<std::uint64_t> seed;            // overrides sampler.seed
  std::optional<std::filesystem::path> out;     // overrides output.directory
  std::optional<OutputFormats> formats;         // overrides output.formats
  std::size_t workers = 0;                      // 0: QDARWIN_THREADS or hardware concurrency
  std::optional<std::string> only;              // run this single analysis instead of the configured list
};

struct RunManifest {
  std::string digest;
  std::string version = kToolVersion;
  std::uint64_t seed = 0;
  std::string started;
  std::string finished;
  std::vector<std::pair<std::string, std::vector<std::string>>> files;  // analysis -> relative paths

  nlohmann::json to_json() const;
};

// Applies the overrides in `options`, executes the analyses in declared order and
// writes CSV / JSON plus manifest.json into the output directory. Bound-chain
// violations raise NumericalError after the offending report has been written.
RunManifest run_config(ExperimentConfig config, const RunOptions& options = {});
RunManifest run_config(const std::filesystem::path& path, const RunOptions& options = {});

}  // namespace qdarwin
