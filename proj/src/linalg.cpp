#include "qdarwin/linalg.hpp"

#include "qdarwin/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace qdarwin {

namespace {

void require_square(const ComplexMatrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw InputError(std::string(what) + ": matrix must be square and nonempty");
  }
}

// Clipped eigenvalue: values in [-psd, clip] become 0, values below -psd are an error.
double clipped(double lambda, const Tolerances& tol, const char* what) {
  if (lambda < -tol.psd) {
    throw InputError(std::string(what) + ": negative eigenvalue " + std::to_string(lambda));
  }
  return lambda <= tol.clip ? 0.0 : lambda;
}

}  // namespace

bool is_hermitian(const ComplexMatrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  if (a.size() == 0) return true;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

Spectrum hermitian_spectrum(const ComplexMatrix& a) {
  require_square(a, "hermitian_spectrum");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(a);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("hermitian_spectrum: eigensolver did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

RealVector hermitian_eigenvalues(const ComplexMatrix& a) {
  require_square(a, "hermitian_eigenvalues");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("hermitian_eigenvalues: eigensolver did not converge");
  }
  return solver.eigenvalues();
}

void validate_density(const ComplexMatrix& m, const Tolerances& tol) {
  require_square(m, "density matrix");
  if (!m.allFinite()) throw InputError("density matrix: non-finite entries");
  if (!is_hermitian(m, tol.hermitian)) throw InputError("density matrix: not Hermitian");
  const Complex tr = m.trace();
  if (std::abs(tr.real() - 1.0) > tol.trace || std::abs(tr.imag()) > tol.trace) {
    throw InputError("density matrix: trace " + std::to_string(tr.real()) + " is not 1");
  }
  const RealVector ev = hermitian_eigenvalues(m);
  if (ev.minCoeff() < -tol.psd) {
    throw InputError("density matrix: negative eigenvalue " + std::to_string(ev.minCoeff()));
  }
}

DensityMatrix::DensityMatrix(ComplexMatrix m, const Tolerances& tol) : m_(std::move(m)) {
  validate_density(m_, tol);
}

DensityMatrix DensityMatrix::unchecked(ComplexMatrix m) { return DensityMatrix(std::move(m), NoCheck{}); }

DensityMatrix DensityMatrix::pure(const ComplexVector& psi) {
  const double norm = psi.norm();
  if (norm == 0.0 || !std::isfinite(norm)) throw InputError("pure state: zero or non-finite vector");
  const ComplexVector v = psi / norm;
  return DensityMatrix(v * v.adjoint(), NoCheck{});
}

DensityMatrix DensityMatrix::maximally_mixed(Eigen::Index dim) {
  if (dim <= 0) throw InputError("maximally_mixed: dimension must be positive");
  return DensityMatrix(ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim), NoCheck{});
}

bool DensityMatrix::is_pure(const Tolerances& tol) const {
  return hermitian_eigenvalues(m_).maxCoeff() >= 1.0 - tol.clip;
}

ComplexMatrix tensor_product(const ComplexMatrix& a, const ComplexMatrix& b, Eigen::Index max_dim) {
  if (!a.allFinite() || !b.allFinite()) throw InputError("tensor_product: non-finite entries");
  const Eigen::Index rows = a.rows() * b.rows();
  const Eigen::Index cols = a.cols() * b.cols();
  if (rows > max_dim || cols > max_dim) {
    throw ResourceError("tensor_product: dimension " + std::to_string(std::max(rows, cols)) +
                        " exceeds dense cap " + std::to_string(max_dim));
  }
  ComplexMatrix out(rows, cols);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

ComplexMatrix tensor_product(std::span<const ComplexMatrix> factors, Eigen::Index max_dim) {
  Eigen::Index rows = 1;
  Eigen::Index cols = 1;
  for (const auto& f : factors) {
    rows *= f.rows();
    cols *= f.cols();
    if (rows > max_dim || cols > max_dim) {
      throw ResourceError("tensor_product: dimension exceeds dense cap " + std::to_string(max_dim));
    }
  }
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  for (const auto& f : factors) out = tensor_product(out, f, max_dim);
  return out;
}

ComplexMatrix partial_trace(const ComplexMatrix& rho, std::span<const int> dims, std::span<const int> keep) {
  require_square(rho, "partial_trace");
  const int nfactors = static_cast<int>(dims.size());
  Eigen::Index total = 1;
  for (int d : dims) {
    if (d <= 0) throw InputError("partial_trace: factor dimensions must be positive");
    total *= d;
  }
  if (total != rho.rows()) {
    throw InputError("partial_trace: factor dimensions multiply to " + std::to_string(total) +
                     " but operator has dimension " + std::to_string(rho.rows()));
  }
  if (keep.empty()) throw InputError("partial_trace: keep set is empty");

  std::vector<bool> kept(nfactors, false);
  for (int k : keep) {
    if (k < 0 || k >= nfactors) throw InputError("partial_trace: keep index out of range");
    if (kept[k]) throw InputError("partial_trace: duplicate keep index");
    kept[k] = true;
  }

  // Row-major strides of the full index.
  std::vector<Eigen::Index> stride(nfactors, 1);
  for (int f = nfactors - 2; f >= 0; --f) stride[f] = stride[f + 1] * dims[f + 1];

  // Offsets for every multi-index over the kept factors and over the traced ones.
  auto offsets = [&](bool want_kept) {
    std::vector<Eigen::Index> out{0};
    for (int f = 0; f < nfactors; ++f) {
      if (kept[f] != want_kept) continue;
      std::vector<Eigen::Index> next;
      next.reserve(out.size() * dims[f]);
      for (Eigen::Index base : out) {
        for (int v = 0; v < dims[f]; ++v) next.push_back(base + v * stride[f]);
      }
      out.swap(next);
    }
    return out;
  };
  const std::vector<Eigen::Index> kept_off = offsets(true);
  const std::vector<Eigen::Index> traced_off = offsets(false);

  const auto n = static_cast<Eigen::Index>(kept_off.size());
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  for (Eigen::Index b = 0; b < n; ++b) {
    for (Eigen::Index a = 0; a < n; ++a) {
      Complex acc{0.0, 0.0};
      for (Eigen::Index e : traced_off) acc += rho(kept_off[a] + e, kept_off[b] + e);
      out(a, b) = acc;
    }
  }
  return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> dims, std::span<const int> keep) {
  return DensityMatrix::unchecked(partial_trace(rho.matrix(), dims, keep));
}

double entropy_of_eigenvalues(const RealVector& eigenvalues, double clip) {
  double h = 0.0;
  for (double lambda : eigenvalues) {
    if (lambda > clip) h -= lambda * std::log2(lambda);
  }
  return h;
}

double von_neumann_entropy(const ComplexMatrix& rho, const Tolerances& tol) {
  const RealVector ev = hermitian_eigenvalues(rho);
  for (double lambda : ev) clipped(lambda, tol, "von_neumann_entropy");
  return entropy_of_eigenvalues(ev, tol.clip);
}

double von_neumann_entropy(const DensityMatrix& rho, const Tolerances& tol) {
  return von_neumann_entropy(rho.matrix(), tol);
}

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

ComplexMatrix fractional_power(const ComplexMatrix& a, double c, const Tolerances& tol) {
  if (!(c >= 0.0 && c <= 1.0)) throw InputError("fractional_power: exponent must lie in [0, 1]");
  if (!is_hermitian(a, tol.hermitian)) throw InputError("fractional_power: operator not Hermitian");
  const Spectrum sp = hermitian_spectrum(a);
  RealVector powered(sp.values.size());
  for (Eigen::Index i = 0; i < sp.values.size(); ++i) {
    const double lambda = clipped(sp.values[i], tol, "fractional_power");
    powered[i] = lambda == 0.0 ? 0.0 : std::pow(lambda, c);
  }
  return sp.vectors * powered.asDiagonal() * sp.vectors.adjoint();
}

std::optional<ComplexMatrix> psd_range_basis(const ComplexMatrix& a, Eigen::Index max_rank, double rel_tol) {
  require_square(a, "psd_range_basis");
  const Eigen::Index d = a.rows();
  RealVector residual = a.diagonal().real();
  const double stop = rel_tol * std::max(0.0, residual.sum());
  ComplexMatrix l(d, std::min(max_rank, d));
  Eigen::Index rank = 0;
  while (d > 0) {
    Eigen::Index pivot = 0;
    if (residual.maxCoeff(&pivot) <= stop) break;
    if (rank == l.cols()) return std::nullopt;
    ComplexVector col = a.col(pivot) - l.leftCols(rank) * l.row(pivot).leftCols(rank).adjoint();
    col /= std::sqrt(residual[pivot]);
    residual -= col.cwiseAbs2();
    residual[pivot] = 0.0;
    l.col(rank++) = col;
  }
  if (rank == 0) return ComplexMatrix(d, 0);
  const Eigen::HouseholderQR<ComplexMatrix> qr(l.leftCols(rank));
  return ComplexMatrix(qr.householderQ() * ComplexMatrix::Identity(d, rank));
}

double trace_norm(const ComplexMatrix& a, const Tolerances& tol) {
  require_square(a, "trace_norm");
  if (!is_hermitian(a, tol.hermitian)) throw InputError("trace_norm: operator not Hermitian");
  return hermitian_eigenvalues(a).cwiseAbs().sum();
}

double fidelity(const ComplexMatrix& rho, const ComplexMatrix& sigma, const Tolerances& tol) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols()) {
    throw InputError("fidelity: dimension mismatch");
  }
  const ComplexMatrix root = fractional_power(rho, 0.5, tol);
  ComplexMatrix inner = root * sigma * root;
  inner = (0.5 * (inner + inner.adjoint())).eval();
  double s = 0.0;
  for (double lambda : hermitian_eigenvalues(inner)) {
    const double v = clipped(lambda, tol, "fidelity");
    s += std::sqrt(v);
  }
  return std::clamp(s * s, 0.0, 1.0);
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma, const Tolerances& tol) {
  return fidelity(rho.matrix(), sigma.matrix(), tol);
}

ComplexMatrix unitary_evolution(const ComplexMatrix& hamiltonian, double t) {
  if (!is_hermitian(hamiltonian)) throw InputError("unitary_evolution: generator not Hermitian");
  const Spectrum sp = hermitian_spectrum(hamiltonian);
  ComplexVector phases(sp.values.size());
  for (Eigen::Index i = 0; i < sp.values.size(); ++i) phases[i] = std::polar(1.0, -t * sp.values[i]);
  return sp.vectors * phases.asDiagonal() * sp.vectors.adjoint();
}

}  // namespace qdarwin
