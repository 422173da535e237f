// config.hpp - experiment configuration files.
//
// A configuration is a YAML document; see README.md for the full key schema.
// Unknown keys are rejected with their line number.

#pragma once

#include "qdarwin/model.hpp"
#include "qdarwin/photon.hpp"
#include "qdarwin/sampler.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdarwin {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelType { iid_qubit, custom_list, photon_sky };

struct PhotonConfig {
  std::size_t cells = 400;
  std::optional<SphericalCap> patch;  // empty: full sphere
  double temperature = 1.0;
  std::size_t nodes = 32;
  std::string kernel_type = "small-angle";  // small-angle | identity | file
  double strength = 0.05;
  double width = 0.5;
  std::filesystem::path kernel_file;
  Vec3 x1 = Vec3::Zero();
  Vec3 x2 = Vec3::UnitX();
  double photon_rate = 1.0;
  std::size_t comparison_cells = 0;   // second resolution for the receptivity error estimate; 0 skips it

  SkyModel build(std::size_t cells_override = 0) const;
};

struct OutputFormats {
  bool csv = true;
  bool json = true;
};

struct ExperimentConfig {
  ModelType model_type = ModelType::iid_qubit;
  std::optional<DecoherenceModel> model;  // iid-qubit and custom-list
  PhotonConfig photon;                    // photon-sky

  std::vector<std::string> analyses;      // in execution order
  std::vector<double> times{1.0};
  std::vector<double> deltas{0.1};
  FragmentSampler sampler;
  std::optional<double> chernoff_c = 0.5;  // empty: optimize
  std::vector<std::size_t> exponent_sizes;
  std::vector<std::size_t> pip_sizes;      // empty: 0..N, subsampled for large N
  std::filesystem::path output_dir = "qdarwin-out";
  OutputFormats formats;

  nlohmann::json canonical;                // see canonical_json
};

// Parses YAML text. Relative paths (kernel files) resolve against `base_dir`.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);

// Effective settings after defaults (output block excluded), so spellings that
// parse to the same experiment share a digest.
nlohmann::json canonical_json(const ExperimentConfig& config);

// SHA-256 of the canonical JSON rendering; invariant under key order.
std::string config_digest(const nlohmann::json& canonical);

OutputFormats parse_formats(const std::string& spec);

}  // namespace qdarwin
