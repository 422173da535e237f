// report.hpp - CSV / JSON rendering of analysis results.
//
// Column names carry their unit: _bits (log2), _nats (ln), _sr (steradians).
// Columns without a suffix are dimensionless (counts, probabilities, fractions,
// times in units of the inverse coupling scale). Every double in a CSV is
// written with 17 significant digits; NaN is "nan" in CSV and null in JSON.

#pragma once

#include "qdarwin/chernoff.hpp"
#include "qdarwin/info.hpp"
#include "qdarwin/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdarwin {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string format_double(double v);

// Plain table; rendered with a header row even when there are no rows.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv() const;
};

Table information_table(const InformationReport& report);
nlohmann::json information_json(const InformationReport& report);

Table redundancy_table(const std::vector<InformationReport>& reports);

Table chernoff_table(const std::vector<ChernoffReport>& reports);
Table chernoff_estimate_table(const std::vector<ChernoffReport>& reports);
nlohmann::json chernoff_json(const ChernoffReport& report);
ChernoffReport chernoff_from_json(const nlohmann::json& j);

Table validation_table(const ValidationReport& report);
nlohmann::json validation_json(const ValidationReport& report);

struct PhotonRateRow {
  double time = 0.0;
  double photons = 0.0;            // rate * t
  double record_nats = 0.0;        // -photons * ln(per-photon overlap)
  double expansion_nats = 0.0;     // alpha t / tau_D
  double delta = 0.0;
  double redundancy_rate = 0.0;    // alpha / (tau_D ln(1/delta))
  double redundancy = 0.0;         // redundancy_rate * t
};

struct PhotonReport {
  std::size_t cells = 0;
  std::size_t patch_cells = 0;
  double patch_solid_angle = 0.0;
  std::size_t nodes = 0;
  double temperature = 0.0;
  double photon_rate = 0.0;
  double kappa = 0.0;
  double tau = 0.0;
  bool no_decoherence = false;
  double photon_overlap = 1.0;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  std::size_t comparison_cells = 0;
  double alpha_comparison = std::numeric_limits<double>::quiet_NaN();
  std::vector<PhotonRateRow> rates;
};

Table photon_table(const PhotonReport& report);
Table photon_rate_table(const PhotonReport& report);
nlohmann::json photon_json(const PhotonReport& report);

// Writes `content` to `path`, creating parent directories. Throws IoError.
void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace qdarwin
