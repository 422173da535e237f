#include "qdarwin/config.hpp"

#include "qdarwin/errors.hpp"

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace qdarwin {

namespace {

const std::set<std::string> kAnalyses = {"validate", "pip", "redundancy", "chernoff", "photon"};

std::string where(const YAML::Node& node) {
  const YAML::Mark mark = node.Mark();
  return mark.line >= 0 ? "line " + std::to_string(mark.line + 1) : "unknown line";
}

[[noreturn]] void fail(const YAML::Node& node, const std::string& message) {
  throw ConfigError(message + " (" + where(node) + ")");
}

void check_keys(const YAML::Node& map, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!map.IsMap()) fail(map, "section '" + section + "' must be a mapping");
  for (const auto& kv : map) {
    const std::string key = kv.first.as<std::string>();
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!ok) {
      throw ConfigError("unknown key '" + key + "' in section '" + section + "' (" + where(kv.first) + ")");
    }
  }
}

double as_double(const YAML::Node& node, const std::string& name) {
  try {
    const double v = node.as<double>();
    if (!std::isfinite(v)) fail(node, "'" + name + "' must be finite");
    return v;
  } catch (const YAML::BadConversion&) {
    fail(node, "'" + name + "' must be a number");
  }
}

std::uint64_t as_u64(const YAML::Node& node, const std::string& name) {
  try {
    return node.as<std::uint64_t>();
  } catch (const YAML::BadConversion&) {
    fail(node, "'" + name + "' must be a nonnegative integer");
  }
}

std::vector<double> as_doubles(const YAML::Node& node, const std::string& name) {
  if (!node.IsSequence()) fail(node, "'" + name + "' must be a list of numbers");
  std::vector<double> out;
  for (const auto& item : node) out.push_back(as_double(item, name));
  return out;
}

std::vector<std::size_t> as_sizes(const YAML::Node& node, const std::string& name) {
  if (!node.IsSequence()) fail(node, "'" + name + "' must be a list of integers");
  std::vector<std::size_t> out;
  for (const auto& item : node) out.push_back(static_cast<std::size_t>(as_u64(item, name)));
  return out;
}

Vec3 as_vec3(const YAML::Node& node, const std::string& name) {
  const std::vector<double> v = as_doubles(node, name);
  if (v.size() != 3) fail(node, "'" + name + "' must have three components");
  return {v[0], v[1], v[2]};
}

// Rows of entries; an entry is a real number or a [re, im] pair.
ComplexMatrix as_matrix(const YAML::Node& node, const std::string& name) {
  if (!node.IsSequence() || node.size() == 0) fail(node, "'" + name + "' must be a nonempty list of rows");
  const auto rows = static_cast<Eigen::Index>(node.size());
  ComplexMatrix m(rows, rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const YAML::Node row = node[static_cast<std::size_t>(r)];
    if (!row.IsSequence() || static_cast<Eigen::Index>(row.size()) != rows) fail(row, "'" + name + "' must be square");
    for (Eigen::Index c = 0; c < rows; ++c) {
      const YAML::Node e = row[static_cast<std::size_t>(c)];
      if (e.IsSequence()) {
        if (e.size() != 2) fail(e, "complex entries of '" + name + "' must be [re, im]");
        m(r, c) = Complex(as_double(e[0], name), as_double(e[1], name));
      } else {
        m(r, c) = as_double(e, name);
      }
    }
  }
  return m;
}

ComplexMatrix pauli(char axis) {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  switch (axis) {
    case 'x': m(0, 1) = 1.0; m(1, 0) = 1.0; break;
    case 'y': m(0, 1) = Complex(0, -1); m(1, 0) = Complex(0, 1); break;
    default: m(0, 0) = 1.0; m(1, 1) = -1.0; break;
  }
  return m;
}

ComplexMatrix bloch_state(const Vec3& r) {
  return 0.5 * (ComplexMatrix::Identity(2, 2) + r.x() * pauli('x') + r.y() * pauli('y') + r.z() * pauli('z'));
}

PointerSpec parse_pointer(const YAML::Node& node) {
  PointerSpec p;
  if (!node) return PointerSpec::qubit(0.5, true);
  check_keys(node, "model.pointer", {"probabilities", "eigenvalues", "phases", "coherent", "initial_state"});
  p.probabilities = node["probabilities"] ? as_doubles(node["probabilities"], "probabilities") : std::vector<double>{0.5, 0.5};
  const std::size_t d = p.probabilities.size();
  if (d < 2) fail(node, "pointer needs at least two probabilities");
  if (node["eigenvalues"]) {
    p.eigenvalues = as_doubles(node["eigenvalues"], "eigenvalues");
  } else if (d == 2) {
    p.eigenvalues = {0.5, -0.5};
  } else {
    fail(node, "pointer 'eigenvalues' required when the system dimension is not 2");
  }
  p.phases = node["phases"] ? as_doubles(node["phases"], "phases") : std::vector<double>(d, 0.0);
  if (p.eigenvalues.size() != d || p.phases.size() != d) {
    fail(node, "pointer probabilities, eigenvalues and phases must have equal length");
  }
  if (node["initial_state"]) {
    if (node["coherent"]) fail(node, "give either 'coherent' or 'initial_state', not both");
    p.initial_state = as_matrix(node["initial_state"], "initial_state");
  } else {
    const bool coherent = node["coherent"] ? node["coherent"].as<bool>() : true;
    // Diagonal is p exactly, coherences sqrt(p_i p_j), matching PointerSpec::qubit bit for bit.
    const auto n = static_cast<Eigen::Index>(d);
    p.initial_state = ComplexMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pi = std::max(0.0, p.probabilities[static_cast<std::size_t>(i)]);
      p.initial_state(i, i) = pi;
      if (!coherent) continue;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j != i) p.initial_state(i, j) = std::sqrt(pi * std::max(0.0, p.probabilities[static_cast<std::size_t>(j)]));
      }
    }
  }
  return p;
}

SubsystemSpec parse_subsystem(const YAML::Node& node, const std::string& section) {
  check_keys(node, section,
             {"bloch", "state", "coupling", "interaction", "field", "self_hamiltonian", "repeat"});
  SubsystemSpec s;
  if (node["state"] && node["bloch"]) fail(node, "give either 'state' or 'bloch'");
  s.initial_state = node["state"] ? as_matrix(node["state"], "state")
                                  : bloch_state(node["bloch"] ? as_vec3(node["bloch"], "bloch") : Vec3::UnitX());
  const Eigen::Index d = s.initial_state.rows();
  if (node["interaction"] && node["coupling"]) fail(node, "give either 'interaction' or 'coupling'");
  if (node["interaction"]) {
    s.interaction = as_matrix(node["interaction"], "interaction");
  } else {
    if (d != 2) fail(node, "'coupling' shorthand applies to qubits only; give 'interaction'");
    s.interaction = (node["coupling"] ? as_double(node["coupling"], "coupling") : 1.0) * pauli('z');
  }
  if (node["self_hamiltonian"] && node["field"]) fail(node, "give either 'self_hamiltonian' or 'field'");
  if (node["self_hamiltonian"]) {
    s.self_hamiltonian = as_matrix(node["self_hamiltonian"], "self_hamiltonian");
  } else if (node["field"]) {
    if (d != 2) fail(node, "'field' shorthand applies to qubits only; give 'self_hamiltonian'");
    s.self_hamiltonian = as_double(node["field"], "field") * pauli('x');
  } else {
    s.self_hamiltonian = ComplexMatrix::Zero(d, d);
  }
  return s;
}

void parse_photon(const YAML::Node& node, PhotonConfig& pc, const std::filesystem::path& base_dir) {
  if (node["cells"]) pc.cells = static_cast<std::size_t>(as_u64(node["cells"], "cells"));
  if (node["comparison_cells"]) pc.comparison_cells = static_cast<std::size_t>(as_u64(node["comparison_cells"], "comparison_cells"));
  if (node["temperature"]) pc.temperature = as_double(node["temperature"], "temperature");
  if (node["nodes"]) pc.nodes = static_cast<std::size_t>(as_u64(node["nodes"], "nodes"));
  if (node["photon_rate"]) pc.photon_rate = as_double(node["photon_rate"], "photon_rate");
  if (const YAML::Node patch = node["patch"]) {
    if (patch.IsScalar()) {
      if (patch.as<std::string>() != "full") fail(patch, "'patch' must be 'full' or a cap mapping");
      pc.patch.reset();
    } else {
      check_keys(patch, "model.patch", {"axis", "half_angle"});
      SphericalCap cap;
      if (patch["axis"]) cap.axis = as_vec3(patch["axis"], "axis");
      if (!patch["half_angle"]) fail(patch, "patch needs 'half_angle' (radians)");
      cap.half_angle = as_double(patch["half_angle"], "half_angle");
      pc.patch = cap;
    }
  }
  if (const YAML::Node pos = node["positions"]) {
    if (!pos.IsSequence() || pos.size() != 2) fail(pos, "'positions' must list two 3-vectors");
    pc.x1 = as_vec3(pos[0], "positions");
    pc.x2 = as_vec3(pos[1], "positions");
  }
  if (const YAML::Node k = node["kernel"]) {
    check_keys(k, "model.kernel", {"type", "strength", "width", "path"});
    pc.kernel_type = k["type"] ? k["type"].as<std::string>() : "small-angle";
    if (pc.kernel_type != "small-angle" && pc.kernel_type != "identity" && pc.kernel_type != "file") {
      fail(k, "kernel type must be small-angle, identity or file");
    }
    if (k["strength"]) pc.strength = as_double(k["strength"], "strength");
    if (k["width"]) pc.width = as_double(k["width"], "width");
    if (pc.kernel_type == "file") {
      if (!k["path"]) fail(k, "file kernel needs 'path'");
      pc.kernel_file = k["path"].as<std::string>();
      if (pc.kernel_file.is_relative()) pc.kernel_file = base_dir / pc.kernel_file;
    }
  }
  if (pc.cells < 12) fail(node, "'cells' must be at least 12");
  if (!(pc.photon_rate > 0.0)) fail(node, "'photon_rate' must be positive");
}

nlohmann::json matrix_json(const ComplexMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_digest(nlohmann::json(buffer.str()));
}

}  // namespace

SkyModel PhotonConfig::build(std::size_t cells_override) const {
  SkyPartition sky = build_sky_partition(cells_override ? cells_override : cells, patch);
  BlackbodySpectrum spectrum = BlackbodySpectrum::planck(temperature, nodes);
  ScatteringKernel kernel = ScatteringKernel::identity();
  if (kernel_type == "small-angle") {
    kernel = ScatteringKernel::small_angle(strength, width);
  } else if (kernel_type == "file") {
    kernel = load_kernel_file(kernel_file);
  }
  return SkyModel(std::move(sky), std::move(spectrum), std::move(kernel), x1, x2);
}

OutputFormats parse_formats(const std::string& spec) {
  if (spec == "csv") return {true, false};
  if (spec == "json") return {false, true};
  if (spec == "both") return {true, true};
  throw ConfigError("format must be csv, json or both, not '" + spec + "'");
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("configuration must be a mapping");
  check_keys(root, "top level", {"model", "analyses", "times", "deltas", "sampler", "chernoff", "pip", "output"});

  ExperimentConfig cfg;
  const YAML::Node model = root["model"];
  if (!model) throw ConfigError("missing required section 'model'");
  if (!model.IsMap() || !model["type"]) fail(model, "'model' needs a 'type'");
  const std::string type = model["type"].as<std::string>();

  try {
    if (type == "iid-qubit") {
      cfg.model_type = ModelType::iid_qubit;
      check_keys(model, "model", {"type", "environment_size", "pointer", "subsystem"});
      if (!model["environment_size"]) fail(model, "iid-qubit model needs 'environment_size'");
      const auto n = static_cast<std::size_t>(as_u64(model["environment_size"], "environment_size"));
      if (n == 0) fail(model, "'environment_size' must be positive");
      SubsystemSpec sub = model["subsystem"] ? parse_subsystem(model["subsystem"], "model.subsystem")
                                             : parse_subsystem(YAML::Node(YAML::NodeType::Map), "model.subsystem");
      if (sub.dim() != 2) fail(model, "iid-qubit subsystems must be two-dimensional");
      cfg.model = DecoherenceModel::iid(parse_pointer(model["pointer"]), std::move(sub), n);
    } else if (type == "custom-list") {
      cfg.model_type = ModelType::custom_list;
      check_keys(model, "model", {"type", "pointer", "subsystems"});
      const YAML::Node list = model["subsystems"];
      if (!list || !list.IsSequence() || list.size() == 0) fail(model, "custom-list model needs a nonempty 'subsystems' list");
      std::vector<SubsystemSpec> subs;
      for (std::size_t i = 0; i < list.size(); ++i) {
        const YAML::Node entry = list[i];
        SubsystemSpec s = parse_subsystem(entry, "model.subsystems[" + std::to_string(i) + "]");
        const std::uint64_t repeat = entry["repeat"] ? as_u64(entry["repeat"], "repeat") : 1;
        if (repeat == 0) fail(entry, "'repeat' must be positive");
        for (std::uint64_t r = 0; r < repeat; ++r) subs.push_back(s);
      }
      cfg.model = DecoherenceModel::from_list(parse_pointer(model["pointer"]), std::move(subs));
    } else if (type == "photon-sky") {
      cfg.model_type = ModelType::photon_sky;
      check_keys(model, "model",
                 {"type", "cells", "comparison_cells", "patch", "temperature", "nodes", "kernel", "positions", "photon_rate"});
      parse_photon(model, cfg.photon, base_dir);
    } else {
      fail(model["type"], "model type must be iid-qubit, custom-list or photon-sky, not '" + type + "'");
    }
  } catch (const InputError& e) {
    throw ConfigError(std::string("invalid model: ") + e.what());
  }

  if (cfg.model) {
    const ValidationReport report = validate_model(*cfg.model);
    if (!report.ok()) {
      std::string msg = "model validation failed:";
      for (const auto& e : report.errors) msg += "\n  error: " + e;
      for (const auto& w : report.warnings) msg += "\n  warning: " + w;
      throw ConfigError(msg);
    }
  }

  if (const YAML::Node a = root["analyses"]) {
    if (!a.IsSequence()) fail(a, "'analyses' must be a list");
    for (const auto& item : a) {
      const std::string name = item.as<std::string>();
      if (!kAnalyses.count(name)) fail(item, "unknown analysis '" + name + "'");
      cfg.analyses.push_back(name);
    }
  } else if (cfg.model_type == ModelType::photon_sky) {
    cfg.analyses = {"photon"};
  } else {
    cfg.analyses = {"validate", "pip", "redundancy", "chernoff"};
  }
  for (const auto& name : cfg.analyses) {
    const bool photon = name == "photon";
    if (photon != (cfg.model_type == ModelType::photon_sky) && name != "validate") {
      throw ConfigError("analysis '" + name + "' does not apply to model type '" + type + "'");
    }
  }

  if (root["times"]) cfg.times = as_doubles(root["times"], "times");
  if (root["deltas"]) cfg.deltas = as_doubles(root["deltas"], "deltas");
  if (cfg.times.empty()) throw ConfigError("'times' must not be empty");
  for (double d : cfg.deltas) {
    if (!(d > 0.0 && d < 1.0)) fail(root["deltas"], "every delta must lie in (0, 1)");
  }

  if (const YAML::Node s = root["sampler"]) {
    check_keys(s, "sampler", {"mode", "samples", "seed", "cap"});
    if (s["mode"]) {
      const std::string mode = s["mode"].as<std::string>();
      if (mode == "exhaustive") {
        cfg.sampler.mode = FragmentSampler::Mode::exhaustive;
      } else if (mode == "monte-carlo") {
        cfg.sampler.mode = FragmentSampler::Mode::monte_carlo;
      } else {
        fail(s["mode"], "sampler mode must be exhaustive or monte-carlo");
      }
    }
    if (s["samples"]) cfg.sampler.samples = static_cast<std::size_t>(as_u64(s["samples"], "samples"));
    if (s["seed"]) cfg.sampler.master_seed = as_u64(s["seed"], "seed");
    if (s["cap"]) cfg.sampler.exhaustive_cap = static_cast<std::size_t>(as_u64(s["cap"], "cap"));
  }

  if (const YAML::Node c = root["chernoff"]) {
    check_keys(c, "chernoff", {"c", "exponent_sizes"});
    if (c["c"]) {
      if (c["c"].IsScalar() && c["c"].Scalar() == "optimize") {
        cfg.chernoff_c.reset();
      } else {
        const double v = as_double(c["c"], "c");
        if (!(v > 0.0 && v < 1.0)) fail(c["c"], "'c' must lie in (0, 1) or be 'optimize'");
        cfg.chernoff_c = v;
      }
    }
    if (c["exponent_sizes"]) cfg.exponent_sizes = as_sizes(c["exponent_sizes"], "exponent_sizes");
  }

  if (const YAML::Node p = root["pip"]) {
    check_keys(p, "pip", {"sizes"});
    if (p["sizes"]) cfg.pip_sizes = as_sizes(p["sizes"], "sizes");
  }
  if (cfg.model) {
    const std::size_t n = cfg.model->environment_size();
    for (std::size_t m : cfg.pip_sizes) {
      if (m > n) throw ConfigError("pip size " + std::to_string(m) + " exceeds environment size");
    }
    for (std::size_t m : cfg.exponent_sizes) {
      if (m > n) throw ConfigError("exponent size " + std::to_string(m) + " exceeds environment size");
    }
  }

  if (const YAML::Node o = root["output"]) {
    check_keys(o, "output", {"directory", "formats"});
    if (o["directory"]) cfg.output_dir = o["directory"].as<std::string>();
    if (const YAML::Node f = o["formats"]) {
      if (f.IsScalar()) {
        cfg.formats = parse_formats(f.as<std::string>());
      } else {
        cfg.formats = {false, false};
        for (const auto& item : f) {
          const OutputFormats one = parse_formats(item.as<std::string>());
          cfg.formats.csv |= one.csv;
          cfg.formats.json |= one.json;
        }
      }
    }
  }

  cfg.canonical = canonical_json(cfg);
  return cfg;
}

nlohmann::json canonical_json(const ExperimentConfig& cfg) {
  using nlohmann::json;
  json j;
  j["analyses"] = cfg.analyses;
  j["times"] = cfg.times;
  j["deltas"] = cfg.deltas;
  j["sampler"] = {{"mode", cfg.sampler.mode == FragmentSampler::Mode::exhaustive ? "exhaustive" : "monte-carlo"},
                  {"samples", cfg.sampler.samples},
                  {"seed", cfg.sampler.master_seed},
                  {"cap", cfg.sampler.exhaustive_cap}};
  j["chernoff"] = {{"c", cfg.chernoff_c ? json(*cfg.chernoff_c) : json("optimize")},
                   {"exponent_sizes", cfg.exponent_sizes}};
  j["pip"] = {{"sizes", cfg.pip_sizes}};
  json model;
  if (cfg.model) {
    const DecoherenceModel& m = *cfg.model;
    const PointerSpec& p = m.pointer();
    model["type"] = cfg.model_type == ModelType::iid_qubit ? "iid-qubit" : "custom-list";
    model["pointer"] = {{"eigenvalues", p.eigenvalues},
                        {"probabilities", p.probabilities},
                        {"phases", p.phases},
                        {"initial_state", matrix_json(p.initial_state)}};
    json slots = json::array();
    for (std::size_t i = 0; i < m.slot_count(); ++i) {
      const SubsystemSpec& s = m.slot_spec(i);
      slots.push_back({{"state", matrix_json(s.initial_state)},
                       {"interaction", matrix_json(s.interaction)},
                       {"self_hamiltonian", matrix_json(s.self_hamiltonian)}});
    }
    std::vector<std::size_t> slot_of;
    for (std::size_t k = 0; k < m.environment_size(); ++k) slot_of.push_back(m.slot_of(k));
    model["slots"] = slots;
    model["slot_of"] = slot_of;
  } else {
    const PhotonConfig& pc = cfg.photon;
    model["type"] = "photon-sky";
    model["cells"] = pc.cells;
    model["comparison_cells"] = pc.comparison_cells;
    model["patch"] = pc.patch ? json{{"axis", vec_json(pc.patch->axis)}, {"half_angle", pc.patch->half_angle}}
                              : json("full");
    model["temperature"] = pc.temperature;
    model["nodes"] = pc.nodes;
    json kernel = {{"type", pc.kernel_type}};
    if (pc.kernel_type == "small-angle") {
      kernel["strength"] = pc.strength;
      kernel["width"] = pc.width;
    } else if (pc.kernel_type == "file") {
      kernel["content_sha256"] = file_digest(pc.kernel_file);
    }
    model["kernel"] = kernel;
    model["positions"] = {vec_json(pc.x1), vec_json(pc.x2)};
    model["photon_rate"] = pc.photon_rate;
  }
  j["model"] = model;
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

std::string config_digest(const nlohmann::json& canonical) {
  const std::string text = canonical.dump();
  unsigned char hash[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), hash, &len, EVP_sha256(), nullptr);
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(hash[i]);
  return out.str();
}

}  // namespace qdarwin
