// photon.hpp - blackbody photons scattering off an object at one of two positions.
//
// Photon directions are discretized into equal-solid-angle cells. A photon of
// momentum magnitude p starts uniformly spread over the sky patch B (a
// Lambertian source) and scatters elastically and without recoil, so the
// scattering unitary acts on the direction cells separately for each p.
// Units: hbar = c = k_B = 1; angles in radians, solid angles in steradians.

#pragma once

#include "qdarwin/linalg.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

namespace qdarwin {

using Vec3 = Eigen::Vector3d;

struct SphericalCap {
  Vec3 axis = Vec3::UnitZ();
  double half_angle = 0.0;  // radians; >= pi covers the sphere

  double solid_angle() const;
};

struct SkyPartition {
  std::vector<Vec3> directions;  // cell centers (unit vectors)
  double cell_solid_angle = 0.0;
  std::vector<bool> in_patch;    // membership of each cell in B
  std::vector<int> patch_cells;  // indices of the cells in B, ascending
  std::vector<int> collar_sizes; // cells per latitude band, north to south (caps included)

  std::size_t size() const noexcept { return directions.size(); }
  double patch_solid_angle() const noexcept { return cell_solid_angle * static_cast<double>(patch_cells.size()); }
  double total_solid_angle() const noexcept { return cell_solid_angle * static_cast<double>(size()); }
};

// Equal-area partition into `cells` regions: two polar caps and iso-latitude
// collars whose cell counts are rounded with carry so each cell covers exactly
// 4 pi / cells. Patch membership is decided by cell center. An empty `patch`
// selects the whole sphere.
SkyPartition build_sky_partition(std::size_t cells, const std::optional<SphericalCap>& patch = std::nullopt);

// Gauss-Legendre nodes and weights on [0, 1], ascending.
void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights);

// Discrete momentum distribution approximating P(p) ~ p^2 / (exp(p/T) - 1).
struct BlackbodySpectrum {
  double temperature = 1.0;
  std::vector<double> momenta;
  std::vector<double> weights;  // positive, summing to 1

  // Gauss-Legendre in u = p / (p + 2T), with P(p) dp/du folded into the weights.
  static BlackbodySpectrum planck(double temperature, std::size_t nodes = 32);
  std::size_t size() const noexcept { return momenta.size(); }
};

// Family of direction-space unitaries S_x^p for the two object positions.
class ScatteringKernel {
 public:
  enum class Kind { identity, small_angle, explicit_matrices };

  static ScatteringKernel identity();
  // S_x^p = T_x(p) exp(-i eps(p) K) T_x(p)^dag with T_x(p) = diag(exp(-i p n.x)),
  // eps(p) = strength * p / T and K_nm = exp(-(1 - n.m) / width^2) scaled to unit
  // spectral radius. Forward-peaked for small width.
  static ScatteringKernel small_angle(double strength, double width);
  // Per-node matrices supplied by the caller: first[j] for x1, second[j] for x2.
  static ScatteringKernel from_matrices(std::vector<ComplexMatrix> first, std::vector<ComplexMatrix> second);

  Kind kind() const noexcept { return kind_; }
  double strength() const noexcept { return strength_; }
  double width() const noexcept { return width_; }
  const std::vector<ComplexMatrix>& first() const noexcept { return first_; }
  const std::vector<ComplexMatrix>& second() const noexcept { return second_; }

 private:
  Kind kind_ = Kind::identity;
  double strength_ = 0.0;
  double width_ = 1.0;
  std::vector<ComplexMatrix> first_;
  std::vector<ComplexMatrix> second_;
};

// Reads a kernel file: a header line "dimension nodes", then 2*nodes matrices
// (all x1 nodes, then all x2 nodes), each as `dimension` rows of `dimension`
// "re im" pairs. Blank lines and lines starting with '#' are ignored.
ScatteringKernel load_kernel_file(const std::filesystem::path& path);
void write_kernel_file(const std::filesystem::path& path, const ScatteringKernel& kernel);

class SkyModel {
 public:
  SkyModel(SkyPartition partition, BlackbodySpectrum spectrum, ScatteringKernel kernel, Vec3 x1, Vec3 x2);

  const SkyPartition& partition() const noexcept { return partition_; }
  const BlackbodySpectrum& spectrum() const noexcept { return spectrum_; }
  const ScatteringKernel& kernel() const noexcept { return kernel_; }
  const Vec3& position(int i) const { return i == 0 ? x1_ : x2_; }

  // S_{x_i}^{p_j}; `position` is 0 for x1 and 1 for x2.
  ComplexMatrix scattering(int position, std::size_t node) const;
  // S_{x1}^{p_j dag} S_{x2}^{p_j}.
  ComplexMatrix relative(std::size_t node) const;
  // Projector Q onto the patch cells.
  ComplexMatrix patch_projector() const;

 private:
  SkyPartition partition_;
  BlackbodySpectrum spectrum_;
  ScatteringKernel kernel_;
  Vec3 x1_;
  Vec3 x2_;
  // Spectral decomposition of the coupling matrix for the small-angle kernel.
  RealVector coupling_values_;
  ComplexMatrix coupling_vectors_;
};

// Q_{p|x} = S_x^p Q S_x^{p dag}.
ComplexMatrix photon_conditional_projector(const SkyModel& model, int position, std::size_t node);

// Per-photon sums over the momentum quadrature. With M_j = S1^dag S2 - I:
//   diagonal    = sum_j w_j Re sum_{n in B} <n|S1^dag S2|n> / |B|
//   overlap     = sum_j w_j sum_{n,m in B} |<n|S1^dag S2|m>|^2 / |B|
//   numerator   = sum_j w_j sum_{n in B, m outside B} |<n|M_j|m>|^2
//   denominator = sum_j w_j sum_{n in B, m anywhere} |<n|M_j|m>|^2
struct PhotonSums {
  double diagonal = 1.0;
  double overlap = 1.0;
  double numerator = 0.0;
  double denominator = 0.0;
  std::size_t patch_cells = 0;
};

PhotonSums photon_sums(const SkyModel& model);

// Per-photon Chernoff overlap, normalized so identical positions give 1.
double photon_chernoff_overlap(const SkyModel& model);

// kappa = 1 - diagonal, the per-photon decoherence increment.
double decoherence_increment(const SkyModel& model);

struct DecoherenceTime {
  double kappa = 0.0;
  double tau = 0.0;           // +inf when the photons do not decohere the object
  bool no_decoherence = false;
};

DecoherenceTime decoherence_time(const SkyModel& model, double photon_rate);

// alpha = numerator / denominator. Throws InputError when the denominator vanishes.
double receptivity(const SkyModel& model);
double receptivity(const PhotonSums& sums);

// alpha / (tau_D ln(1/delta)); zero when tau_D is infinite.
double photon_redundancy_rate(double alpha, double tau, double delta);

}  // namespace qdarwin
