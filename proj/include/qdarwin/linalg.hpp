// linalg.hpp - dense complex-matrix primitives for finite-dimensional quantum states.
//
// Basis convention: in every tensor product the left factor carries the slow
// index, so for a system S and environment subsystems 1..N the joint basis is
// ordered |s, e1, e2, ..., eN> with s varying slowest.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace qdarwin {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

struct Tolerances {
  double hermitian = 1e-9;   // max |A - A^dag| relative to max(1, max |A|)
  double trace = 1e-9;       // |tr rho - 1|
  double psd = 1e-9;         // eigenvalues below -psd are rejected
  double clip = 1e-12;       // eigenvalues in [-psd, clip] are treated as exact zeros
  Eigen::Index max_dense_dim = Eigen::Index{1} << 13;
};

inline const Tolerances& default_tolerances() {
  static const Tolerances tol{};
  return tol;
}

// Eigenvalues ascending, eigenvectors as the columns of a unitary matrix.
struct Spectrum {
  RealVector values;
  ComplexMatrix vectors;
};

bool is_hermitian(const ComplexMatrix& a, double tol = default_tolerances().hermitian);

Spectrum hermitian_spectrum(const ComplexMatrix& a);
RealVector hermitian_eigenvalues(const ComplexMatrix& a);

// Validated density operator. Construction checks hermiticity, unit trace and
// positivity; use `unchecked` only where the invariants hold by construction.
class DensityMatrix {
 public:
  explicit DensityMatrix(ComplexMatrix m, const Tolerances& tol = default_tolerances());

  static DensityMatrix unchecked(ComplexMatrix m);
  static DensityMatrix pure(const ComplexVector& psi);
  static DensityMatrix maximally_mixed(Eigen::Index dim);

  const ComplexMatrix& matrix() const noexcept { return m_; }
  Eigen::Index dim() const noexcept { return m_.rows(); }

  // Largest eigenvalue >= 1 - clip.
  bool is_pure(const Tolerances& tol = default_tolerances()) const;

 private:
  struct NoCheck {};
  DensityMatrix(ComplexMatrix m, NoCheck) : m_(std::move(m)) {}

  ComplexMatrix m_;
};

// Throws InputError with a description when `m` is not a valid state.
void validate_density(const ComplexMatrix& m, const Tolerances& tol = default_tolerances());

ComplexMatrix tensor_product(const ComplexMatrix& a, const ComplexMatrix& b,
                             Eigen::Index max_dim = default_tolerances().max_dense_dim);

// Left-to-right Kronecker product of all factors; an empty list yields the 1x1 identity.
ComplexMatrix tensor_product(std::span<const ComplexMatrix> factors,
                             Eigen::Index max_dim = default_tolerances().max_dense_dim);

// Reduced operator on the factors listed in `keep` (indices into `dims`, any order,
// result ordered ascending). Works for any square operator, not only states.
ComplexMatrix partial_trace(const ComplexMatrix& rho, std::span<const int> dims,
                            std::span<const int> keep);
DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> dims,
                            std::span<const int> keep);

// -sum lambda log2 lambda with eigenvalues <= clip dropped.
double entropy_of_eigenvalues(const RealVector& eigenvalues,
                              double clip = default_tolerances().clip);
double von_neumann_entropy(const ComplexMatrix& rho, const Tolerances& tol = default_tolerances());
double von_neumann_entropy(const DensityMatrix& rho, const Tolerances& tol = default_tolerances());

// H(p) = -p log2 p - (1-p) log2(1-p), with H(0) = H(1) = 0.
double binary_entropy(double p);

// V diag(lambda^c) V^dag. Eigenvalues in [-psd, clip] map to zero for every c, so
// A^0 is the projector onto the support of A.
ComplexMatrix fractional_power(const ComplexMatrix& a, double c,
                               const Tolerances& tol = default_tolerances());

double trace_norm(const ComplexMatrix& a, const Tolerances& tol = default_tolerances());

// Orthonormal basis (d x r) of the numerical range of a PSD matrix, by pivoted Cholesky stopped once
// every residual diagonal is below rel_tol * tr(a). nullopt when the rank would exceed max_rank.
std::optional<ComplexMatrix> psd_range_basis(const ComplexMatrix& a, Eigen::Index max_rank, double rel_tol = 1e-15);

// Squared-overlap convention: F = (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma,
                const Tolerances& tol = default_tolerances());
double fidelity(const ComplexMatrix& rho, const ComplexMatrix& sigma,
                const Tolerances& tol = default_tolerances());

// exp(-i t H) for Hermitian H, through its eigendecomposition.
ComplexMatrix unitary_evolution(const ComplexMatrix& hamiltonian, double t);

}  // namespace qdarwin
