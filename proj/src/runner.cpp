#include "qdarwin/runner.hpp"

#include "qdarwin/chernoff.hpp"
#include "qdarwin/errors.hpp"
#include "qdarwin/info.hpp"
#include "qdarwin/photon.hpp"
#include "qdarwin/report.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <sstream>

namespace qdarwin {

namespace {

constexpr double kBoundSlack = 1e-9;

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<std::size_t> default_sizes(std::size_t n) {
  std::vector<std::size_t> sizes;
  if (n <= 100) {
    for (std::size_t m = 0; m <= n; ++m) sizes.push_back(m);
    return sizes;
  }
  for (std::size_t i = 0; i <= 100; ++i) {
    const auto m = static_cast<std::size_t>(std::llround(static_cast<double>(i) * static_cast<double>(n) / 100.0));
    if (sizes.empty() || sizes.back() != m) sizes.push_back(m);
  }
  return sizes;
}

// Fano lower <= chi <= min(I, fidelity upper) on every averaged row.
void check_bound_chain(const InformationReport& report) {
  for (const auto& r : report.rows) {
    std::ostringstream why;
    if (!std::isnan(r.fano_lower) && r.fano_lower > r.chi_mean + kBoundSlack) why << "Fano bound exceeds chi";
    if (!std::isnan(r.mi_mean) && r.chi_mean > r.mi_mean + kBoundSlack) why << "chi exceeds mutual information";
    if (!std::isnan(r.fidelity_upper) && r.chi_mean > r.fidelity_upper + kBoundSlack) {
      why << "chi exceeds the fidelity bound";
    }
    if (!why.str().empty()) {
      throw NumericalError("bound chain violated at t = " + format_double(report.time) + ", m = " +
                           std::to_string(r.m) + ": " + why.str());
    }
  }
}

class Emitter {
 public:
  Emitter(std::filesystem::path dir, OutputFormats formats) : dir_(std::move(dir)), formats_(formats) {}

  void csv(const std::string& name, const Table& table) {
    if (formats_.csv) write(name + ".csv", table.to_csv());
  }
  void json(const std::string& name, const nlohmann::json& j) {
    if (formats_.json) write(name + ".json", j.dump(2) + "\n");
  }
  std::vector<std::string> take() { return std::exchange(files_, {}); }

 private:
  void write(const std::string& file, const std::string& content) {
    write_text(dir_ / file, content);
    files_.push_back(file);
  }

  std::filesystem::path dir_;
  OutputFormats formats_;
  std::vector<std::string> files_;
};

std::string time_suffix(const ExperimentConfig& cfg, std::size_t i) {
  return cfg.times.size() == 1 ? "" : "_t" + std::to_string(i);
}

void run_pip(const ExperimentConfig& cfg, Emitter& out) {
  const DecoherenceModel& model = *cfg.model;
  const std::vector<std::size_t> sizes =
      cfg.pip_sizes.empty() ? default_sizes(model.environment_size()) : cfg.pip_sizes;
  std::vector<InformationReport> reports;
  for (std::size_t i = 0; i < cfg.times.size(); ++i) {
    const BranchEnsemble ens = branch_ensemble(model, cfg.times[i]);
    InformationReport rep;
    rep.time = cfg.times[i];
    rep.system_entropy_bits = pointer_entropy(model.pointer().probabilities);
    rep.rows = partial_information(model, ens, sizes, cfg.sampler);
    out.csv("pip" + time_suffix(cfg, i), information_table(rep));
    out.json("pip" + time_suffix(cfg, i), information_json(rep));
    reports.push_back(std::move(rep));
  }
  for (const auto& rep : reports) check_bound_chain(rep);
}

void run_redundancy(const ExperimentConfig& cfg, Emitter& out) {
  const DecoherenceModel& model = *cfg.model;
  std::vector<InformationReport> reports;
  nlohmann::json j = nlohmann::json::array();
  for (double t : cfg.times) {
    const BranchEnsemble ens = branch_ensemble(model, t);
    InformationReport rep;
    rep.time = t;
    rep.system_entropy_bits = pointer_entropy(model.pointer().probabilities);
    for (double delta : cfg.deltas) rep.redundancy.push_back(redundancy(model, ens, delta, cfg.sampler));
    j.push_back(information_json(rep));
    reports.push_back(std::move(rep));
  }
  out.csv("redundancy", redundancy_table(reports));
  out.json("redundancy", j);
}

void run_chernoff(const ExperimentConfig& cfg, Emitter& out) {
  const DecoherenceModel& model = *cfg.model;
  if (model.pointer().dim() != 2) throw UnsupportedPathError("Chernoff analysis needs a two-dimensional system");
  std::vector<ChernoffReport> reports;
  nlohmann::json j = nlohmann::json::array();
  for (double t : cfg.times) {
    const BranchEnsemble ens = branch_ensemble(model, t);
    ChernoffReport rep;
    rep.time = t;
    rep.typical = typical_chernoff_information(ens, cfg.chernoff_c);
    if (!cfg.chernoff_c) rep.c_star = rep.typical.c;
    rep.slot_overlaps = slot_chernoff_overlaps(ens, rep.typical.c);
    rep.bounds = efficiency_bounds(rep.typical.xi_nats);
    for (double delta : cfg.deltas) {
      rep.estimates.emplace_back(delta, redundancy_estimate(model.environment_size(), rep.typical.xi_nats, delta));
    }
    if (!cfg.exponent_sizes.empty()) {
      rep.fit = empirical_error_exponent(model, ens, cfg.exponent_sizes, cfg.sampler, ErrorMeasure::helstrom,
                                         rep.typical.c);
    }
    j.push_back(chernoff_json(rep));
    reports.push_back(std::move(rep));
  }
  out.csv("chernoff", chernoff_table(reports));
  out.csv("chernoff_estimates", chernoff_estimate_table(reports));
  out.json("chernoff", j);
}

void run_photon(const ExperimentConfig& cfg, Emitter& out) {
  const PhotonConfig& pc = cfg.photon;
  const SkyModel sky = pc.build();
  const PhotonSums sums = photon_sums(sky);
  PhotonReport rep;
  rep.cells = sky.partition().size();
  rep.patch_cells = sums.patch_cells;
  rep.patch_solid_angle = sky.partition().patch_solid_angle();
  rep.nodes = sky.spectrum().size();
  rep.temperature = pc.temperature;
  rep.photon_rate = pc.photon_rate;
  const DecoherenceTime dt = decoherence_time(sky, pc.photon_rate);
  rep.kappa = dt.kappa;
  rep.tau = dt.tau;
  rep.no_decoherence = dt.no_decoherence;
  rep.photon_overlap = photon_chernoff_overlap(sky);
  // A patch with no scattering out of it leaves alpha undefined; report NaN.
  if (sums.denominator > 1e-20) rep.alpha = receptivity(sums);
  if (pc.comparison_cells) {
    rep.comparison_cells = pc.comparison_cells;
    const PhotonSums other = photon_sums(pc.build(pc.comparison_cells));
    if (other.denominator > 1e-20) rep.alpha_comparison = receptivity(other);
  }
  const double alpha = std::isnan(rep.alpha) ? 0.0 : rep.alpha;
  for (double t : cfg.times) {
    for (double delta : cfg.deltas) {
      PhotonRateRow row;
      row.time = t;
      row.photons = pc.photon_rate * t;
      row.record_nats = rep.photon_overlap > 0.0 ? -row.photons * std::log(rep.photon_overlap)
                                                 : std::numeric_limits<double>::infinity();
      row.expansion_nats = dt.no_decoherence ? 0.0 : alpha * t / dt.tau;
      row.delta = delta;
      row.redundancy_rate = photon_redundancy_rate(alpha, dt.tau, delta);
      row.redundancy = row.redundancy_rate * t;
      rep.rates.push_back(row);
    }
  }
  out.csv("photon", photon_table(rep));
  out.csv("photon_rates", photon_rate_table(rep));
  out.json("photon", photon_json(rep));
}

void run_validate(const ExperimentConfig& cfg, Emitter& out) {
  // Invalid models never get past parsing; this records the warnings.
  const ValidationReport report = cfg.model ? validate_model(*cfg.model) : ValidationReport{};
  out.csv("validation", validation_table(report));
  out.json("validation", validation_json(report));
}

}  // namespace

nlohmann::json RunManifest::to_json() const {
  // Array, so the declared execution order survives serialization.
  nlohmann::json files_json = nlohmann::json::array();
  for (const auto& [analysis, list] : files) files_json.push_back({{"analysis", analysis}, {"files", list}});
  return {{"config_digest", digest}, {"version", version}, {"seed", seed},
          {"started", started},      {"finished", finished}, {"outputs", files_json}};
}

RunManifest run_config(ExperimentConfig cfg, const RunOptions& options) {
  if (options.seed) cfg.sampler.master_seed = *options.seed;
  if (options.out) cfg.output_dir = *options.out;
  if (options.formats) cfg.formats = *options.formats;
  cfg.sampler.workers = options.workers;
  cfg.canonical = canonical_json(cfg);

  std::vector<std::string> analyses = cfg.analyses;
  if (options.only) {
    if (*options.only == "photon" ? cfg.model_type != ModelType::photon_sky
                                  : (cfg.model_type == ModelType::photon_sky && *options.only != "validate")) {
      throw ConfigError("analysis '" + *options.only + "' does not apply to this model type");
    }
    analyses = {*options.only};
  }

  RunManifest manifest;
  manifest.digest = config_digest(cfg.canonical);
  manifest.seed = cfg.sampler.master_seed;
  manifest.started = utc_now();

  Emitter out(cfg.output_dir, cfg.formats);
  std::optional<NumericalError> violation;
  for (const auto& name : analyses) {
    try {
      if (name == "validate") {
        run_validate(cfg, out);
      } else if (name == "pip") {
        run_pip(cfg, out);
      } else if (name == "redundancy") {
        run_redundancy(cfg, out);
      } else if (name == "chernoff") {
        run_chernoff(cfg, out);
      } else if (name == "photon") {
        run_photon(cfg, out);
      } else {
        throw ConfigError("unknown analysis '" + name + "'");
      }
    } catch (const NumericalError& e) {
      if (!violation) violation = e;
    }
    manifest.files.emplace_back(name, out.take());
  }
  manifest.finished = utc_now();
  write_text(cfg.output_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  if (violation) throw *violation;
  return manifest;
}

RunManifest run_config(const std::filesystem::path& path, const RunOptions& options) {
  return run_config(load_config(path), options);
}

}  // namespace qdarwin
