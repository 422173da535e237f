#include "qdarwin/config.hpp"
#include "qdarwin/errors.hpp"
#include "qdarwin/report.hpp"
#include "qdarwin/runner.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace qdarwin;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"(model:
  type: iid-qubit
  environment_size: 8
analyses: [pip]
output:
  formats: csv
)";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qdarwin_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string error_of(const std::string& yaml) {
  try {
    parse_config(yaml);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

int cli(const std::string& args) {
  const std::string cmd = std::string(QDARWIN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("minimal configuration") {
  const ExperimentConfig cfg = parse_config(kMinimal);
  CHECK(cfg.model_type == ModelType::iid_qubit);
  REQUIRE(cfg.model.has_value());
  CHECK(cfg.model->environment_size() == 8);
  CHECK(cfg.model->is_iid());
  CHECK(cfg.analyses == std::vector<std::string>{"pip"});
  CHECK(cfg.formats.csv);
  CHECK_FALSE(cfg.formats.json);
}

TEST_CASE("unknown keys are rejected with name and line") {
  const std::string top = error_of("modle:\n  type: iid-qubit\n");
  CHECK(top.find("modle") != std::string::npos);
  CHECK(top.find("line 1") != std::string::npos);
  const std::string nested = error_of("model:\n  type: iid-qubit\n  environment_size: 3\n  pointr: {}\n");
  CHECK(nested.find("pointr") != std::string::npos);
  CHECK(nested.find("line 4") != std::string::npos);
  CHECK(error_of("model: {type: iid-qubit, environment_size: 3}\nsampler: {mode: exhaustive, sed: 3}\n")
            .find("sed") != std::string::npos);
}

TEST_CASE("invalid models surface the validation report") {
  const std::string err = error_of(R"(model:
  type: custom-list
  subsystems:
    - state: [[1, 0], [0, 0]]
      interaction: [[1, 0.5], [0, -1]]
)");
  CHECK(err.find("interaction not Hermitian") != std::string::npos);
  CHECK_FALSE(error_of("model: {type: iid-qubit, environment_size: 0}\n").empty());
  CHECK_FALSE(error_of("model: {type: iid-qubit, environment_size: 3}\ndeltas: [1.5]\n").empty());
  CHECK_FALSE(error_of("model: {type: iid-qubit, environment_size: 3}\nanalyses: [photon]\n").empty());
  CHECK_FALSE(error_of("model: {type: iid-qubit, environment_size: 3}\nanalyses: [plot]\n").empty());
  CHECK_FALSE(error_of("model: {type: spherical-cow}\n").empty());
}

TEST_CASE("custom lists, complex entries and repeats") {
  const ExperimentConfig cfg = parse_config(R"(model:
  type: custom-list
  pointer: {probabilities: [0.3, 0.7]}
  subsystems:
    - state: [[0.5, [0, -0.5]], [[0, 0.5], 0.5]]
      interaction: [[1, 0], [0, -1]]
      repeat: 3
    - bloch: [0, 0, 1]
      coupling: 0.4
      field: 0.2
)");
  REQUIRE(cfg.model.has_value());
  CHECK(cfg.model->environment_size() == 4);
  CHECK(cfg.model->slot_count() == 2);
  CHECK(cfg.model->subsystem(0).initial_state(0, 1) == Complex(0, -0.5));
  CHECK(cfg.model->pointer().probabilities[1] == 0.7);
}

TEST_CASE("photon configuration") {
  const ExperimentConfig cfg = parse_config(R"(model:
  type: photon-sky
  cells: 60
  patch: {axis: [0, 0, 1], half_angle: 0.5}
  nodes: 4
  kernel: {type: small-angle, strength: 0.2}
  positions: [[0, 0, 0], [0.5, 0, 0]]
)");
  CHECK(cfg.model_type == ModelType::photon_sky);
  CHECK(cfg.analyses == std::vector<std::string>{"photon"});
  const SkyModel sky = cfg.photon.build();
  CHECK(sky.partition().size() == 60);
  CHECK(sky.spectrum().size() == 4);
}

TEST_CASE("digest ignores key order and output settings but tracks content") {
  const std::string a = "model: {type: iid-qubit, environment_size: 5}\ntimes: [1, 2]\noutput: {directory: x}\n";
  const std::string b = "times: [1.0, 2.0]\nmodel:\n  environment_size: 5\n  type: iid-qubit\n";
  const std::string c = "model: {type: iid-qubit, environment_size: 6}\ntimes: [1, 2]\n";
  const auto da = config_digest(parse_config(a).canonical);
  CHECK(da == config_digest(parse_config(b).canonical));
  CHECK(da != config_digest(parse_config(c).canonical));
  CHECK(da.size() == 64);
  // Spelling out defaults does not change the experiment.
  const std::string d =
      "model: {type: iid-qubit, environment_size: 5, pointer: {probabilities: [0.5, 0.5]}, subsystem: {coupling: 1}}\n"
      "times: [1, 2]\nsampler: {seed: 0, mode: exhaustive}\n";
  CHECK(da == config_digest(parse_config(d).canonical));
}

TEST_CASE("report formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(std::nan("")) == "nan");
  const InformationReport empty;
  CHECK(information_table(empty).to_csv() == "m,chi_mean_bits,chi_stderr,I_mean_bits,Pe_mean,fano_lb_bits,fid_ub_bits\n");
  InformationReport one;
  InformationRow row;
  row.m = 2;
  row.chi_mean = 0.5;
  one.rows.push_back(row);
  const std::string csv = information_table(one).to_csv();
  CHECK(csv.find("\n2,0.5,0,nan,nan,nan,nan\n") != std::string::npos);
  CHECK(information_json(one)["rows"][0]["I_mean_bits"].is_null());
}

TEST_CASE("Chernoff report JSON round-trips") {
  ChernoffReport r;
  r.time = 0.7;
  r.slot_overlaps = {0.1 + 0.2, 1.0 / 3.0};
  r.c_star = 0.4321;
  r.typical = {0.4321, 0.61803398874989479, -std::log(0.61803398874989479), false};
  r.bounds = efficiency_bounds(r.typical.xi_nats);
  r.estimates = {{0.01, redundancy_estimate(100, r.typical.xi_nats, 0.01)}};
  ExponentFit fit;
  fit.slope = 0.123456789012345678;
  fit.intercept = -1e-300;
  fit.residual = 3e-17;
  fit.used = {3, 4, 5};
  fit.neg_log_error = {1.1, 2.2, 3.3};
  r.fit = fit;
  const nlohmann::json j = chernoff_json(r);
  const ChernoffReport back = chernoff_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.time == r.time);
  CHECK(back.slot_overlaps == r.slot_overlaps);
  CHECK(back.c_star == r.c_star);
  CHECK(back.typical.mean_overlap == r.typical.mean_overlap);
  CHECK(back.typical.xi_nats == r.typical.xi_nats);
  CHECK(back.bounds.upper == r.bounds.upper);
  CHECK(back.estimates[0].second.value == r.estimates[0].second.value);
  CHECK(back.fit->slope == fit.slope);
  CHECK(back.fit->intercept == fit.intercept);
  CHECK(back.fit->used == fit.used);
  CHECK(back.fit->neg_log_error == fit.neg_log_error);
  CHECK(chernoff_json(back) == j);
}

TEST_CASE("run_config writes one partial-information CSV for the minimal config") {
  const fs::path dir = scratch("minimal");
  RunOptions opt;
  opt.out = dir;
  const RunManifest m = run_config(parse_config(kMinimal), opt);
  REQUIRE(m.files.size() == 1);
  CHECK(m.files[0].first == "pip");
  CHECK(m.files[0].second == std::vector<std::string>{"pip.csv"});
  CHECK(fs::exists(dir / "pip.csv"));
  CHECK(fs::exists(dir / "manifest.json"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["config_digest"] == m.digest);
  CHECK(slurp(dir / "pip.csv").rfind("m,chi_mean_bits,", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("same config and seed give byte-identical outputs across worker counts") {
  const std::string yaml = R"(model:
  type: custom-list
  subsystems:
    - {bloch: [1, 0, 0], coupling: 0.7, repeat: 10}
    - {bloch: [0.6, 0, 0], coupling: 0.4, field: 0.3, repeat: 10}
analyses: [pip, redundancy, chernoff]
times: [0.8]
deltas: [0.2]
sampler: {mode: monte-carlo, samples: 24, seed: 5}
pip: {sizes: [1, 2, 4, 8]}
)";
  std::vector<std::string> outputs;
  for (std::size_t workers : {1, 3, 1}) {
    const fs::path dir = scratch("det" + std::to_string(outputs.size()));
    RunOptions opt;
    opt.out = dir;
    opt.workers = workers;
    run_config(parse_config(yaml), opt);
    std::string all;
    for (const char* f : {"pip.csv", "pip.json", "redundancy.csv", "chernoff.csv", "chernoff.json"}) all += slurp(dir / f);
    outputs.push_back(all);
    fs::remove_all(dir);
  }
  CHECK(outputs[0] == outputs[1]);
  CHECK(outputs[0] == outputs[2]);
  CHECK(outputs[0].size() > 100);
}

TEST_CASE("seed override changes Monte Carlo output and the manifest seed") {
  const std::string yaml =
      "model: {type: custom-list, subsystems: [{bloch: [1,0,0], coupling: 0.7, repeat: 6}, {bloch: [0,1,0], "
      "coupling: 0.3, repeat: 6}]}\nanalyses: [pip]\nsampler: {mode: monte-carlo, samples: 10}\npip: {sizes: [3]}\n"
      "output: {formats: csv}\n";
  const fs::path d1 = scratch("seed1");
  const fs::path d2 = scratch("seed2");
  RunOptions o1;
  o1.out = d1;
  o1.seed = 1;
  RunOptions o2;
  o2.out = d2;
  o2.seed = 2;
  const RunManifest m1 = run_config(parse_config(yaml), o1);
  const RunManifest m2 = run_config(parse_config(yaml), o2);
  CHECK(m1.seed == 1);
  CHECK(m1.digest != m2.digest);
  CHECK(slurp(d1 / "pip.csv") != slurp(d2 / "pip.csv"));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("unwritable output path is an I/O error") {
  RunOptions opt;
  opt.out = "/proc/qdarwin-no-such-dir";
  CHECK_THROWS_AS(run_config(parse_config(kMinimal), opt), IoError);
}

TEST_CASE("command-line exit codes") {
  const fs::path dir = scratch("exit");
  {
    std::ofstream(dir / "ok.yaml") << kMinimal;
    std::ofstream(dir / "typo.yaml") << "modle: {}\n";
  }
  const std::string out = " --out " + (dir / "out").string();
  CHECK(cli("pip --config " + (dir / "ok.yaml").string() + out) == 0);
  CHECK(cli("validate --config " + (dir / "ok.yaml").string()) == 0);
  CHECK(cli("run --config " + (dir / "typo.yaml").string() + out) == 1);
  CHECK(cli("run --config " + (dir / "missing.yaml").string()) == 1);
  CHECK(cli("frobnicate") == 1);
  CHECK(cli("pip --config " + (dir / "ok.yaml").string() + " --format xml") == 1);
  CHECK(cli("photon --config " + (dir / "ok.yaml").string() + out) == 1);
  CHECK(cli("--help") == 0);
  fs::remove_all(dir);
}

}  // TEST_SUITE
