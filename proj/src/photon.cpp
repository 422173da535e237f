#include "qdarwin/photon.hpp"

#include "qdarwin/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>

namespace qdarwin {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kUnitaryTol = 1e-10;
constexpr double kNoDecoherence = 1e-12;
constexpr double kVanishingDenominator = 1e-20;

double cap_area(double colatitude) { return 2.0 * kPi * (1.0 - std::cos(colatitude)); }

double cap_colatitude(double area) { return std::acos(std::clamp(1.0 - area / (2.0 * kPi), -1.0, 1.0)); }

Vec3 from_spherical(double colatitude, double longitude) {
  return {std::sin(colatitude) * std::cos(longitude), std::sin(colatitude) * std::sin(longitude),
          std::cos(colatitude)};
}

void check_unitary(const ComplexMatrix& u, const char* what) {
  if (u.rows() != u.cols()) throw InputError(std::string(what) + ": matrix not square");
  const ComplexMatrix err = u.adjoint() * u - ComplexMatrix::Identity(u.rows(), u.cols());
  if (err.norm() > kUnitaryTol) throw InputError(std::string(what) + ": matrix not unitary");
}

}  // namespace

double SphericalCap::solid_angle() const { return half_angle >= kPi ? 4.0 * kPi : cap_area(half_angle); }

SkyPartition build_sky_partition(std::size_t cells, const std::optional<SphericalCap>& patch) {
  if (cells < 12) throw InputError("build_sky_partition: need at least 12 cells");
  const double area = 4.0 * kPi / static_cast<double>(cells);
  const double polar = cap_colatitude(area);
  const double ideal_collar = std::sqrt(area);
  const auto n_collars = static_cast<std::size_t>(std::max(1.0, std::round((kPi - 2.0 * polar) / ideal_collar)));
  const double fitted = (kPi - 2.0 * polar) / static_cast<double>(n_collars);

  // Round the ideal per-collar counts with carry so they sum to cells - 2.
  std::vector<int> counts(n_collars);
  double carry = 0.0;
  for (std::size_t i = 0; i < n_collars; ++i) {
    const double top = polar + static_cast<double>(i) * fitted;
    const double ideal = (cap_area(top + fitted) - cap_area(top)) / area;
    counts[i] = static_cast<int>(std::lround(ideal + carry));
    carry += ideal - counts[i];
  }
  int assigned = 0;
  for (int c : counts) assigned += c;
  counts.back() += static_cast<int>(cells) - 2 - assigned;
  if (std::any_of(counts.begin(), counts.end(), [](int c) { return c <= 0; })) {
    throw NumericalError("build_sky_partition: collar with no cells");
  }

  SkyPartition sky;
  sky.cell_solid_angle = area;
  sky.directions.reserve(cells);
  sky.directions.push_back(Vec3::UnitZ());
  sky.collar_sizes.push_back(1);
  // Collar boundaries are placed so the area above each equals a whole number of cells.
  int above = 1;
  double top = polar;
  for (std::size_t i = 0; i < n_collars; ++i) {
    above += counts[i];
    const double bottom = cap_colatitude(area * above);
    const double mid = 0.5 * (top + bottom);
    const double step = 2.0 * kPi / counts[i];
    const double offset = (i % 2 == 1) ? 0.5 * step : 0.0;
    for (int k = 0; k < counts[i]; ++k) sky.directions.push_back(from_spherical(mid, offset + (k + 0.5) * step));
    sky.collar_sizes.push_back(counts[i]);
    top = bottom;
  }
  sky.directions.push_back(-Vec3::UnitZ());
  sky.collar_sizes.push_back(1);

  sky.in_patch.assign(sky.directions.size(), true);
  if (patch && patch->half_angle < kPi) {
    if (!(patch->half_angle > 0.0)) throw InputError("build_sky_partition: patch half-angle must be positive");
    if (patch->axis.norm() == 0.0) throw InputError("build_sky_partition: patch axis is zero");
    const Vec3 axis = patch->axis.normalized();
    const double threshold = std::cos(patch->half_angle) - 1e-12;
    for (std::size_t i = 0; i < sky.directions.size(); ++i) sky.in_patch[i] = sky.directions[i].dot(axis) >= threshold;
  }
  for (std::size_t i = 0; i < sky.in_patch.size(); ++i) {
    if (sky.in_patch[i]) sky.patch_cells.push_back(static_cast<int>(i));
  }
  if (sky.patch_cells.empty()) throw InputError("build_sky_partition: patch contains no cell centers");
  return sky;
}

void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n == 0) throw InputError("gauss_legendre: need at least one node");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const auto un = static_cast<unsigned>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = std::cos(kPi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      const double p = std::legendre(un, x);
      const double q = un > 0 ? std::legendre(un - 1, x) : 0.0;
      dp = static_cast<double>(n) * (x * p - q) / (x * x - 1.0);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    {
      const double p = std::legendre(un, x);
      const double q = std::legendre(un - 1, x);
      dp = static_cast<double>(n) * (x * p - q) / (x * x - 1.0);
    }
    // Map [-1, 1] to [0, 1]; x runs from +1 downwards.
    nodes[n - 1 - i] = 0.5 * (x + 1.0);
    weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

BlackbodySpectrum BlackbodySpectrum::planck(double temperature, std::size_t nodes) {
  if (!(temperature > 0.0)) throw InputError("blackbody: temperature must be positive");
  std::vector<double> u;
  std::vector<double> gl;
  gauss_legendre(nodes, u, gl);
  BlackbodySpectrum b;
  b.temperature = temperature;
  double total = 0.0;
  for (std::size_t j = 0; j < nodes; ++j) {
    const double p = 2.0 * temperature * u[j] / (1.0 - u[j]);
    const double jacobian = 2.0 * temperature / ((1.0 - u[j]) * (1.0 - u[j]));
    const double density = p * p / std::expm1(p / temperature);
    b.momenta.push_back(p);
    b.weights.push_back(gl[j] * density * jacobian);
    total += b.weights.back();
  }
  for (double& w : b.weights) w /= total;
  return b;
}

ScatteringKernel ScatteringKernel::identity() { return ScatteringKernel{}; }

ScatteringKernel ScatteringKernel::small_angle(double strength, double width) {
  if (!std::isfinite(strength)) throw InputError("small-angle kernel: strength must be finite");
  if (!(width > 0.0)) throw InputError("small-angle kernel: width must be positive");
  ScatteringKernel k;
  k.kind_ = Kind::small_angle;
  k.strength_ = strength;
  k.width_ = width;
  return k;
}

ScatteringKernel ScatteringKernel::from_matrices(std::vector<ComplexMatrix> first, std::vector<ComplexMatrix> second) {
  if (first.empty() || first.size() != second.size()) {
    throw InputError("kernel: need the same nonzero number of matrices for both positions");
  }
  for (const auto& m : first) check_unitary(m, "kernel");
  for (const auto& m : second) check_unitary(m, "kernel");
  ScatteringKernel k;
  k.kind_ = Kind::explicit_matrices;
  k.first_ = std::move(first);
  k.second_ = std::move(second);
  return k;
}

ScatteringKernel load_kernel_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("kernel file: cannot open " + path.string());
  std::stringstream numbers;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    numbers << line << '\n';
  }
  long dim = 0;
  long nodes = 0;
  if (!(numbers >> dim >> nodes) || dim <= 0 || nodes <= 0) {
    throw InputError("kernel file: header must be 'dimension nodes' with positive values");
  }
  auto read_matrix = [&](long index) {
    ComplexMatrix m(dim, dim);
    for (long r = 0; r < dim; ++r) {
      for (long c = 0; c < dim; ++c) {
        double re = 0.0;
        double im = 0.0;
        if (!(numbers >> re >> im)) {
          throw InputError("kernel file: truncated data in matrix " + std::to_string(index));
        }
        m(r, c) = Complex(re, im);
      }
    }
    return m;
  };
  std::vector<ComplexMatrix> first;
  std::vector<ComplexMatrix> second;
  for (long j = 0; j < nodes; ++j) first.push_back(read_matrix(j));
  for (long j = 0; j < nodes; ++j) second.push_back(read_matrix(nodes + j));
  double extra = 0.0;
  if (numbers >> extra) throw InputError("kernel file: trailing data after the last matrix");
  return ScatteringKernel::from_matrices(std::move(first), std::move(second));
}

void write_kernel_file(const std::filesystem::path& path, const ScatteringKernel& kernel) {
  if (kernel.kind() != ScatteringKernel::Kind::explicit_matrices) {
    throw InputError("kernel file: only explicit kernels can be written");
  }
  std::ofstream out(path);
  if (!out) throw InputError("kernel file: cannot write " + path.string());
  out << std::setprecision(17);
  out << "# dimension nodes\n" << kernel.first().front().rows() << ' ' << kernel.first().size() << '\n';
  auto write = [&](const ComplexMatrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) out << m(r, c).real() << ' ' << m(r, c).imag() << (c + 1 < m.cols() ? ' ' : '\n');
    }
  };
  for (const auto& m : kernel.first()) write(m);
  for (const auto& m : kernel.second()) write(m);
}

SkyModel::SkyModel(SkyPartition partition, BlackbodySpectrum spectrum, ScatteringKernel kernel, Vec3 x1, Vec3 x2)
    : partition_(std::move(partition)), spectrum_(std::move(spectrum)), kernel_(std::move(kernel)), x1_(x1), x2_(x2) {
  const auto n = static_cast<Eigen::Index>(partition_.size());
  if (kernel_.kind() == ScatteringKernel::Kind::explicit_matrices) {
    if (kernel_.first().size() != spectrum_.size()) {
      throw InputError("sky model: kernel node count does not match the momentum quadrature");
    }
    if (kernel_.first().front().rows() != n) {
      throw InputError("sky model: kernel dimension does not match the sky partition");
    }
  } else if (kernel_.kind() == ScatteringKernel::Kind::small_angle) {
    Eigen::MatrixXd coupling(n, n);
    const double inv_w2 = 1.0 / (kernel_.width() * kernel_.width());
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        const double cosine = partition_.directions[a].dot(partition_.directions[b]);
        coupling(a, b) = std::exp(-(1.0 - cosine) * inv_w2);
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(coupling);
    if (solver.info() != Eigen::Success) throw NumericalError("sky model: coupling eigensolver failed");
    const double radius = solver.eigenvalues().cwiseAbs().maxCoeff();
    coupling_values_ = solver.eigenvalues() / radius;
    coupling_vectors_ = solver.eigenvectors().cast<Complex>();
  }
}

ComplexMatrix SkyModel::scattering(int position, std::size_t node) const {
  if (position != 0 && position != 1) throw InputError("sky model: position index must be 0 or 1");
  if (node >= spectrum_.size()) throw InputError("sky model: momentum node out of range");
  const auto n = static_cast<Eigen::Index>(partition_.size());
  switch (kernel_.kind()) {
    case ScatteringKernel::Kind::identity:
      return ComplexMatrix::Identity(n, n);
    case ScatteringKernel::Kind::explicit_matrices:
      return position == 0 ? kernel_.first()[node] : kernel_.second()[node];
    case ScatteringKernel::Kind::small_angle:
      break;
  }
  const double p = spectrum_.momenta[node];
  const double eps = kernel_.strength() * p / spectrum_.temperature;
  ComplexVector phases(n);
  for (Eigen::Index i = 0; i < n; ++i) phases[i] = std::polar(1.0, -eps * coupling_values_[i]);
  ComplexMatrix s = coupling_vectors_ * phases.asDiagonal() * coupling_vectors_.adjoint();
  // Translating the object by x multiplies <n|S|m> by exp(-i p (n - m).x).
  const Vec3& x = position == 0 ? x1_ : x2_;
  ComplexVector t(n);
  for (Eigen::Index i = 0; i < n; ++i) t[i] = std::polar(1.0, -p * partition_.directions[i].dot(x));
  return t.asDiagonal() * s * t.conjugate().asDiagonal();
}

ComplexMatrix SkyModel::relative(std::size_t node) const {
  if (kernel_.kind() == ScatteringKernel::Kind::identity) {
    const auto n = static_cast<Eigen::Index>(partition_.size());
    return ComplexMatrix::Identity(n, n);
  }
  return scattering(0, node).adjoint() * scattering(1, node);
}

ComplexMatrix SkyModel::patch_projector() const {
  const auto n = static_cast<Eigen::Index>(partition_.size());
  ComplexMatrix q = ComplexMatrix::Zero(n, n);
  for (int i : partition_.patch_cells) q(i, i) = 1.0;
  return q;
}

ComplexMatrix photon_conditional_projector(const SkyModel& model, int position, std::size_t node) {
  const ComplexMatrix s = model.scattering(position, node);
  ComplexMatrix q = s * model.patch_projector() * s.adjoint();
  return (0.5 * (q + q.adjoint())).eval();
}

PhotonSums photon_sums(const SkyModel& model) {
  const SkyPartition& sky = model.partition();
  const auto& w = model.spectrum().weights;
  PhotonSums out;
  out.patch_cells = sky.patch_cells.size();
  const double nb = static_cast<double>(out.patch_cells);
  double diagonal = 0.0;
  double overlap = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const ComplexMatrix r = model.relative(j);
    double d = 0.0;
    double in_patch = 0.0;
    double outside = 0.0;
    double all = 0.0;
    for (int a : sky.patch_cells) {
      d += r(a, a).real();
      for (Eigen::Index b = 0; b < r.cols(); ++b) {
        const Complex m = r(a, b) - (a == b ? 1.0 : 0.0);
        const double m2 = std::norm(m);
        all += m2;
        if (sky.in_patch[b]) {
          in_patch += std::norm(r(a, b));
        } else {
          outside += m2;
        }
      }
    }
    diagonal += w[j] * d / nb;
    overlap += w[j] * in_patch / nb;
    out.numerator += w[j] * outside;
    out.denominator += w[j] * all;
  }
  out.diagonal = diagonal;
  out.overlap = std::clamp(overlap, 0.0, 1.0);
  return out;
}

double photon_chernoff_overlap(const SkyModel& model) { return photon_sums(model).overlap; }

double decoherence_increment(const SkyModel& model) {
  const double kappa = 1.0 - photon_sums(model).diagonal;
  if (kappa < -1e-10) throw NumericalError("decoherence increment is negative");
  return std::max(0.0, kappa);
}

DecoherenceTime decoherence_time(const SkyModel& model, double photon_rate) {
  if (!(photon_rate > 0.0)) throw InputError("decoherence_time: photon rate must be positive");
  DecoherenceTime out;
  out.kappa = decoherence_increment(model);
  if (out.kappa <= kNoDecoherence) {
    out.no_decoherence = true;
    out.tau = std::numeric_limits<double>::infinity();
  } else {
    out.tau = 1.0 / (2.0 * out.kappa * photon_rate);
  }
  return out;
}

double receptivity(const PhotonSums& sums) {
  if (!(sums.denominator > kVanishingDenominator)) {
    throw InputError("receptivity undefined: the scattering does not distinguish the two positions");
  }
  return sums.numerator / sums.denominator;
}

double receptivity(const SkyModel& model) { return receptivity(photon_sums(model)); }

double photon_redundancy_rate(double alpha, double tau, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("photon_redundancy_rate: delta must lie in (0, 1)");
  if (std::isinf(tau)) return 0.0;
  if (!(tau > 0.0)) throw InputError("photon_redundancy_rate: decoherence time must be positive");
  return alpha / (tau * std::log(1.0 / delta));
}

}  // namespace qdarwin
