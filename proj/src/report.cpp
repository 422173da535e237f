#include "qdarwin/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace qdarwin {

namespace {

using nlohmann::json;

json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

double number_or(const json& j, double fallback = std::numeric_limits<double>::quiet_NaN()) {
  return j.is_null() ? fallback : j.get<double>();
}

std::string count(std::size_t n) { return std::to_string(n); }

const char* status_name(RedundancyStatus s) {
  switch (s) {
    case RedundancyStatus::ok: return "ok";
    case RedundancyStatus::insufficient_information: return "insufficient_information";
    case RedundancyStatus::beyond_cap: return "beyond_cap";
  }
  return "unknown";
}

json row_json(const InformationRow& r) {
  return {{"m", r.m},
          {"chi_mean_bits", number(r.chi_mean)},
          {"chi_stderr", number(r.chi_stderr)},
          {"I_mean_bits", number(r.mi_mean)},
          {"Pe_mean", number(r.pe_mean)},
          {"fano_lb_bits", number(r.fano_lower)},
          {"fid_ub_bits", number(r.fidelity_upper)}};
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i];
    out += '\n';
  }
  return out;
}

Table information_table(const InformationReport& report) {
  Table t{{"m", "chi_mean_bits", "chi_stderr", "I_mean_bits", "Pe_mean", "fano_lb_bits", "fid_ub_bits"}, {}};
  for (const auto& r : report.rows) {
    t.rows.push_back({count(r.m), format_double(r.chi_mean), format_double(r.chi_stderr), format_double(r.mi_mean),
                      format_double(r.pe_mean), format_double(r.fano_lower), format_double(r.fidelity_upper)});
  }
  return t;
}

nlohmann::json information_json(const InformationReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) rows.push_back(row_json(r));
  json red = json::array();
  for (const auto& r : report.redundancy) {
    json probes = json::array();
    for (const auto& p : r.probes) probes.push_back({{"m", p.m}, {"chi_mean_bits", number(p.chi_mean)}});
    red.push_back({{"delta", r.delta},
                   {"target_bits", number(r.target_bits)},
                   {"m_delta", r.m_delta},
                   {"R_delta", number(r.redundancy)},
                   {"interpolated_m", number(r.interpolated_m)},
                   {"status", status_name(r.status)},
                   {"probes", probes}});
  }
  return {{"t", report.time}, {"H_S_bits", number(report.system_entropy_bits)}, {"rows", rows}, {"redundancy", red}};
}

Table redundancy_table(const std::vector<InformationReport>& reports) {
  Table t{{"t", "delta", "H_S_bits", "target_bits", "m_delta", "R_delta", "interpolated_m", "status"}, {}};
  for (const auto& rep : reports) {
    for (const auto& r : rep.redundancy) {
      t.rows.push_back({format_double(rep.time), format_double(r.delta), format_double(rep.system_entropy_bits),
                        format_double(r.target_bits), count(r.m_delta), format_double(r.redundancy),
                        format_double(r.interpolated_m), status_name(r.status)});
    }
  }
  return t;
}

Table chernoff_table(const std::vector<ChernoffReport>& reports) {
  Table t{{"t", "c", "mean_overlap", "xi_nats", "xi_bits", "r_lower_nats", "r_upper_nats", "perfect_records",
           "fit_slope_nats", "fit_intercept_nats", "fit_residual_nats"},
          {}};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : reports) {
    t.rows.push_back({format_double(r.time), format_double(r.typical.c), format_double(r.typical.mean_overlap),
                      format_double(r.typical.xi_nats), format_double(r.typical.xi_nats / std::log(2.0)),
                      format_double(r.bounds.lower), format_double(r.bounds.upper),
                      r.typical.perfect_records ? "1" : "0", format_double(r.fit ? r.fit->slope : nan),
                      format_double(r.fit ? r.fit->intercept : nan), format_double(r.fit ? r.fit->residual : nan)});
  }
  return t;
}

Table chernoff_estimate_table(const std::vector<ChernoffReport>& reports) {
  Table t{{"t", "delta", "R_estimate", "exceeds_environment"}, {}};
  for (const auto& r : reports) {
    for (const auto& [delta, est] : r.estimates) {
      t.rows.push_back({format_double(r.time), format_double(delta), format_double(est.value),
                        est.exceeds_environment ? "1" : "0"});
    }
  }
  return t;
}

nlohmann::json chernoff_json(const ChernoffReport& r) {
  json j;
  j["t"] = r.time;
  j["slot_overlaps"] = json::array();
  for (double v : r.slot_overlaps) j["slot_overlaps"].push_back(number(v));
  j["c_star"] = r.c_star ? json(*r.c_star) : json(nullptr);
  j["typical"] = {{"c", r.typical.c},
                  {"mean_overlap", number(r.typical.mean_overlap)},
                  {"xi_nats", number(r.typical.xi_nats)},
                  {"perfect_records", r.typical.perfect_records}};
  j["efficiency_bounds_nats"] = {{"lower", number(r.bounds.lower)}, {"upper", number(r.bounds.upper)}};
  j["estimates"] = json::array();
  for (const auto& [delta, est] : r.estimates) {
    j["estimates"].push_back(
        {{"delta", delta}, {"R_estimate", number(est.value)}, {"exceeds_environment", est.exceeds_environment}});
  }
  if (r.fit) {
    j["exponent_fit"] = {{"slope_nats", number(r.fit->slope)},
                         {"intercept_nats", number(r.fit->intercept)},
                         {"residual_nats", number(r.fit->residual)},
                         {"used_sizes", r.fit->used},
                         {"excluded_sizes", r.fit->excluded},
                         {"neg_log_error_nats", r.fit->neg_log_error}};
  } else {
    j["exponent_fit"] = nullptr;
  }
  return j;
}

ChernoffReport chernoff_from_json(const nlohmann::json& j) {
  const double inf = std::numeric_limits<double>::infinity();
  ChernoffReport r;
  r.time = j.at("t").get<double>();
  for (const auto& v : j.at("slot_overlaps")) r.slot_overlaps.push_back(number_or(v));
  if (!j.at("c_star").is_null()) r.c_star = j.at("c_star").get<double>();
  const json& typ = j.at("typical");
  r.typical.c = typ.at("c").get<double>();
  r.typical.perfect_records = typ.at("perfect_records").get<bool>();
  r.typical.mean_overlap = number_or(typ.at("mean_overlap"));
  r.typical.xi_nats = number_or(typ.at("xi_nats"), r.typical.perfect_records ? inf : std::nan(""));
  const json& b = j.at("efficiency_bounds_nats");
  r.bounds = {number_or(b.at("lower"), inf), number_or(b.at("upper"), inf)};
  for (const auto& e : j.at("estimates")) {
    RedundancyEstimate est{number_or(e.at("R_estimate"), inf), e.at("exceeds_environment").get<bool>()};
    r.estimates.emplace_back(e.at("delta").get<double>(), est);
  }
  if (const json& f = j.at("exponent_fit"); !f.is_null()) {
    ExponentFit fit;
    fit.slope = number_or(f.at("slope_nats"));
    fit.intercept = number_or(f.at("intercept_nats"));
    fit.residual = number_or(f.at("residual_nats"));
    fit.used = f.at("used_sizes").get<std::vector<std::size_t>>();
    fit.excluded = f.at("excluded_sizes").get<std::vector<std::size_t>>();
    fit.neg_log_error = f.at("neg_log_error_nats").get<std::vector<double>>();
    r.fit = std::move(fit);
  }
  return r;
}

Table validation_table(const ValidationReport& report) {
  Table t{{"severity", "message"}, {}};
  auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  };
  for (const auto& e : report.errors) t.rows.push_back({"error", quote(e)});
  for (const auto& w : report.warnings) t.rows.push_back({"warning", quote(w)});
  return t;
}

nlohmann::json validation_json(const ValidationReport& report) {
  return {{"ok", report.ok()}, {"errors", report.errors}, {"warnings", report.warnings}};
}

Table photon_table(const PhotonReport& r) {
  Table t{{"cells", "patch_cells", "patch_solid_angle_sr", "nodes", "temperature", "photon_rate", "kappa",
           "tau_D", "photon_overlap", "alpha", "comparison_cells", "alpha_comparison"},
          {}};
  t.rows.push_back({count(r.cells), count(r.patch_cells), format_double(r.patch_solid_angle), count(r.nodes),
                    format_double(r.temperature), format_double(r.photon_rate), format_double(r.kappa),
                    format_double(r.tau), format_double(r.photon_overlap), format_double(r.alpha),
                    count(r.comparison_cells), format_double(r.alpha_comparison)});
  return t;
}

Table photon_rate_table(const PhotonReport& r) {
  Table t{{"t", "photons", "record_nats", "expansion_nats", "delta", "redundancy_rate", "redundancy"}, {}};
  for (const auto& row : r.rates) {
    t.rows.push_back({format_double(row.time), format_double(row.photons), format_double(row.record_nats),
                      format_double(row.expansion_nats), format_double(row.delta), format_double(row.redundancy_rate),
                      format_double(row.redundancy)});
  }
  return t;
}

nlohmann::json photon_json(const PhotonReport& r) {
  json rates = json::array();
  for (const auto& row : r.rates) {
    rates.push_back({{"t", row.time},
                     {"photons", row.photons},
                     {"record_nats", number(row.record_nats)},
                     {"expansion_nats", number(row.expansion_nats)},
                     {"delta", row.delta},
                     {"redundancy_rate", number(row.redundancy_rate)},
                     {"redundancy", number(row.redundancy)}});
  }
  return {{"cells", r.cells},
          {"patch_cells", r.patch_cells},
          {"patch_solid_angle_sr", r.patch_solid_angle},
          {"nodes", r.nodes},
          {"temperature", r.temperature},
          {"photon_rate", r.photon_rate},
          {"kappa", number(r.kappa)},
          {"tau_D", number(r.tau)},
          {"no_decoherence", r.no_decoherence},
          {"photon_overlap", number(r.photon_overlap)},
          {"alpha", number(r.alpha)},
          {"comparison_cells", r.comparison_cells},
          {"alpha_comparison", number(r.alpha_comparison)},
          {"rates", rates}};
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace qdarwin
