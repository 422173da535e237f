// selftest.hpp - randomized invariant suites run by `qdarwin selftest`, plus the
// random-instance generators they share with the test programs.

#pragma once

#include "qdarwin/linalg.hpp"
#include "qdarwin/model.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace qdarwin {

using Rng = std::mt19937_64;

ComplexMatrix random_hermitian(int d, Rng& rng, double scale = 1.0);
ComplexMatrix random_unitary(int d, Rng& rng);
ComplexVector random_pure_vector(int d, Rng& rng);
// Full-rank mixed state drawn from the Hilbert-Schmidt ensemble.
ComplexMatrix random_mixed_state(int d, Rng& rng);
// Positive semidefinite with trace in (0, 1].
ComplexMatrix random_psd(int d, Rng& rng);

// Qubit system with random priors; `n` qubit subsystems with random couplings,
// self-Hamiltonians and, unless `pure_only`, a mix of pure and mixed initial states.
DecoherenceModel random_qubit_model(std::size_t n, Rng& rng, bool pure_only = false, bool coherent_system = true);

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::size_t checks = 0;
  std::string detail;   // first failure, if any
};

std::vector<SuiteResult> run_selftest(std::uint64_t seed = 0);

}  // namespace qdarwin
