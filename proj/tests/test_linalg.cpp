#include "oracles.hpp"

#include "qdarwin/errors.hpp"
#include "qdarwin/linalg.hpp"
#include "qdarwin/selftest.hpp"

#include <doctest.h>

#include <algorithm>

using namespace qdarwin;

namespace {

double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("tensor product matches the index-loop Kronecker product") {
  Rng rng(1);
  for (int da : {1, 2, 3}) {
    for (int db : {2, 4}) {
      const ComplexMatrix a = random_hermitian(da, rng);
      const ComplexMatrix b = random_hermitian(db, rng);
      CHECK(max_abs(tensor_product(a, b) - oracle::kron(a, b)) == 0.0);
    }
  }
  const ComplexMatrix list[] = {random_hermitian(2, rng), random_hermitian(3, rng), random_hermitian(2, rng)};
  CHECK(max_abs(tensor_product(list) - oracle::kron(oracle::kron(list[0], list[1]), list[2])) < 1e-14);
  CHECK(tensor_product(std::span<const ComplexMatrix>{}).rows() == 1);
}

TEST_CASE("tensor product refuses to exceed the dense cap") {
  const ComplexMatrix a = ComplexMatrix::Identity(64, 64);
  CHECK_THROWS_AS(tensor_product(a, a, 1024), ResourceError);
}

TEST_CASE("partial trace agrees with brute force on three factors") {
  Rng rng(2);
  const std::vector<int> dims{2, 3, 2};
  const ComplexMatrix rho = random_mixed_state(12, rng);
  const int keep_02[] = {0, 2};
  const int keep_1[] = {1};
  const int keep_20[] = {2, 0};
  CHECK(max_abs(partial_trace(rho, dims, keep_02) - oracle::partial_trace(rho, dims, {true, false, true})) < 1e-14);
  CHECK(max_abs(partial_trace(rho, dims, keep_1) - oracle::partial_trace(rho, dims, {false, true, false})) < 1e-14);
  // Order of `keep` does not matter; output follows ascending factor order.
  CHECK(max_abs(partial_trace(rho, dims, keep_20) - partial_trace(rho, dims, keep_02)) == 0.0);
  const DensityMatrix reduced = partial_trace(DensityMatrix(rho), dims, keep_1);
  CHECK(reduced.matrix().trace().real() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("partial trace rejects malformed input") {
  const ComplexMatrix rho = ComplexMatrix::Identity(6, 6) / 6.0;
  const std::vector<int> dims{2, 2};
  const int keep[] = {0};
  CHECK_THROWS_AS(partial_trace(rho, dims, keep), InputError);
  const std::vector<int> dims23{2, 3};
  const int bad[] = {2};
  CHECK_THROWS_AS(partial_trace(rho, dims23, bad), InputError);
}

TEST_CASE("density matrix validation") {
  ComplexMatrix m = ComplexMatrix::Identity(2, 2) / 2.0;
  CHECK_NOTHROW(DensityMatrix{m});
  ComplexMatrix not_hermitian = m;
  not_hermitian(0, 1) = 0.1;
  CHECK_THROWS_AS(DensityMatrix{not_hermitian}, InputError);
  CHECK_THROWS_AS(DensityMatrix{ComplexMatrix(ComplexMatrix::Identity(2, 2))}, InputError);
  ComplexMatrix negative = ComplexMatrix::Zero(2, 2);
  negative(0, 0) = 1.2;
  negative(1, 1) = -0.2;
  CHECK_THROWS_AS(DensityMatrix{negative}, InputError);
  ComplexVector psi(2);
  psi << Complex(0.6, 0), Complex(0, 0.8);
  CHECK(DensityMatrix::pure(psi).is_pure());
  CHECK_FALSE(DensityMatrix::maximally_mixed(3).is_pure());
}

TEST_CASE("von Neumann entropy") {
  Rng rng(3);
  for (int d = 2; d <= 8; ++d) {
    CHECK(von_neumann_entropy(DensityMatrix::maximally_mixed(d)) == doctest::Approx(std::log2(d)).epsilon(1e-12));
    const ComplexVector psi = random_pure_vector(d, rng);
    CHECK(std::abs(von_neumann_entropy(ComplexMatrix(psi * psi.adjoint()))) < 1e-10);
    const ComplexMatrix rho = random_mixed_state(d, rng);
    CHECK(von_neumann_entropy(rho) == doctest::Approx(oracle::entropy_bits(rho)).epsilon(1e-10));
  }
}

TEST_CASE("binary entropy") {
  CHECK(binary_entropy(0.5) == 1.0);
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  CHECK(binary_entropy(0.11) == doctest::Approx(oracle::binary_entropy(0.11)).epsilon(1e-14));
  CHECK(binary_entropy(0.3) == doctest::Approx(binary_entropy(0.7)).epsilon(1e-15));
}

TEST_CASE("fractional power") {
  Rng rng(4);
  for (int d : {2, 3, 5}) {
    const ComplexMatrix rho = random_mixed_state(d, rng);
    const ComplexMatrix half = fractional_power(rho, 0.5);
    CHECK(max_abs(half - oracle::sqrtm(rho)) < 1e-10);
    CHECK(max_abs(half * half - rho) < 1e-12);
    CHECK(max_abs(fractional_power(rho, 1.0) - rho) < 1e-12);
    CHECK(max_abs(fractional_power(rho, 0.3) * fractional_power(rho, 0.7) - rho) < 1e-12);
  }
  // A^0 is the support projector.
  ComplexMatrix p = ComplexMatrix::Zero(3, 3);
  p(0, 0) = 0.4;
  p(1, 1) = 0.6;
  ComplexMatrix support = ComplexMatrix::Zero(3, 3);
  support(0, 0) = 1.0;
  support(1, 1) = 1.0;
  CHECK(max_abs(fractional_power(p, 0.0) - support) < 1e-14);
  ComplexMatrix neg = ComplexMatrix::Identity(2, 2);
  neg(1, 1) = -0.1;
  CHECK_THROWS_AS(fractional_power(neg, 0.5), InputError);
  CHECK_THROWS_AS(fractional_power(p, 1.5), InputError);
}

TEST_CASE("trace norm") {
  Rng rng(5);
  for (int d = 2; d <= 8; ++d) {
    const ComplexMatrix h = random_hermitian(d, rng);
    CHECK(trace_norm(h) == doctest::Approx(oracle::trace_norm(h)).epsilon(1e-11));
  }
  ComplexMatrix nh = ComplexMatrix::Zero(2, 2);
  nh(0, 1) = 1.0;
  CHECK_THROWS_AS(trace_norm(nh), InputError);
}

TEST_CASE("fidelity") {
  Rng rng(6);
  for (int d : {2, 3, 4}) {
    const ComplexVector a = random_pure_vector(d, rng);
    const ComplexVector b = random_pure_vector(d, rng);
    const double overlap = std::norm(a.dot(b));
    CHECK(fidelity(DensityMatrix::pure(a), DensityMatrix::pure(b)) == doctest::Approx(overlap).epsilon(1e-9));
    const ComplexMatrix rho = random_mixed_state(d, rng);
    const ComplexMatrix sigma = random_mixed_state(d, rng);
    const double f = fidelity(rho, sigma);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    CHECK(f == doctest::Approx(fidelity(sigma, rho)).epsilon(1e-10));
    CHECK(fidelity(rho, rho) == doctest::Approx(1.0).epsilon(1e-10));
    // Uhlmann: (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 through Denman-Beavers square roots.
    const oracle::Mat sr = oracle::sqrtm(rho);
    const double ref = std::pow(oracle::sqrtm(sr * sigma * sr).trace().real(), 2);
    CHECK(f == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("unitary evolution matches a Taylor-series exponential") {
  Rng rng(7);
  for (int d : {2, 3, 6}) {
    const ComplexMatrix h = random_hermitian(d, rng);
    for (double t : {0.0, 0.7, 3.1}) {
      const ComplexMatrix u = unitary_evolution(h, t);
      CHECK(max_abs(u - oracle::expm(Complex(0, -t) * h)) < 1e-11);
      CHECK(max_abs(u * u.adjoint() - ComplexMatrix::Identity(d, d)) < 1e-12);
    }
  }
}

TEST_CASE("hermiticity check is relative to the matrix scale") {
  ComplexMatrix a = ComplexMatrix::Identity(2, 2) * 1e6;
  a(0, 1) = 1e-5;
  CHECK(is_hermitian(a));
  a(0, 1) = 10.0;
  CHECK_FALSE(is_hermitian(a));
}

TEST_CASE("range basis of low-rank PSD matrices") {
  Rng rng(19);
  const Eigen::Index d = 90;
  ComplexMatrix a = ComplexMatrix::Zero(d, d);
  for (int j = 0; j < 3; ++j) {
    const ComplexVector v = random_pure_vector(d, rng);
    a += (0.2 + 0.3 * j) * v * v.adjoint();
  }
  const auto q = psd_range_basis(a, 10);
  REQUIRE(q.has_value());
  CHECK(q->cols() == 3);
  CHECK((q->adjoint() * *q - ComplexMatrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((*q * q->adjoint() * a * *q * q->adjoint() - a).cwiseAbs().maxCoeff() < 1e-12);
  std::vector<double> full = oracle::eigenvalues(a);
  std::sort(full.begin(), full.end());
  const RealVector small = hermitian_eigenvalues(ComplexMatrix(q->adjoint() * a * *q));
  for (int j = 0; j < 3; ++j) CHECK(small[j] == doctest::Approx(full[full.size() - 3 + j]).epsilon(1e-12));
  CHECK_FALSE(psd_range_basis(a, 2).has_value());
  CHECK_FALSE(psd_range_basis(random_mixed_state(20, rng), 5).has_value());
  CHECK(psd_range_basis(ComplexMatrix::Zero(5, 5), 5)->cols() == 0);
}

}  // TEST_SUITE
