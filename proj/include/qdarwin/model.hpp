// model.hpp - pure-decoherence models and their conditional (branch) states.
//
// The Hamiltonian is H = H_S + Pi_S sum_k Y_k + sum_k W_k with [Pi_S, H_S] = 0,
// and the initial state is a product rho_S(0) (x) rho_1(0) (x) ... (x) rho_N(0).
// Conditioned on pointer state s, environment subsystem k evolves under the
// branch generator pi_s Y_k + W_k. Units: hbar = 1.
//
// Environment subsystems are indexed from 0 in this API.

#pragma once

#include "qdarwin/linalg.hpp"

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace qdarwin {

struct PointerSpec {
  std::vector<double> eigenvalues;    // pi_s, eigenvalues of the pointer observable
  std::vector<double> probabilities;  // p_s
  std::vector<double> phases;         // omega_s, eigenvalues of H_S in the pointer basis
  ComplexMatrix initial_state;        // rho_S(0) in the pointer basis

  int dim() const noexcept { return static_cast<int>(eigenvalues.size()); }

  // Two-level pointer with eigenvalues (+1/2, -1/2), probabilities (p1, 1-p1),
  // and either a coherent pure superposition or the dephased mixture.
  static PointerSpec qubit(double p1 = 0.5, bool coherent = true);
};

struct SubsystemSpec {
  ComplexMatrix initial_state;     // rho_k(0)
  ComplexMatrix interaction;       // Y_k
  ComplexMatrix self_hamiltonian;  // W_k

  int dim() const noexcept { return static_cast<int>(initial_state.rows()); }
  bool operator==(const SubsystemSpec& other) const;
};

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  bool ok() const noexcept { return errors.empty(); }
  bool empty() const noexcept { return errors.empty() && warnings.empty(); }
};

// Immutable after construction. Subsystems with bitwise-identical specs share
// one storage slot, so an explicit list of identical entries is represented
// exactly like the i.i.d. template.
class DecoherenceModel {
 public:
  static DecoherenceModel from_list(PointerSpec pointer, std::vector<SubsystemSpec> subsystems);
  static DecoherenceModel iid(PointerSpec pointer, SubsystemSpec subsystem, std::size_t count);

  const PointerSpec& pointer() const noexcept { return pointer_; }
  std::size_t environment_size() const noexcept { return size_; }

  // Distinct subsystem specs and the slot each environment subsystem uses.
  std::size_t slot_count() const noexcept { return specs_.size(); }
  std::size_t slot_of(std::size_t k) const { return slots_.empty() ? 0 : slots_.at(k); }
  const SubsystemSpec& slot_spec(std::size_t slot) const { return specs_.at(slot); }
  const SubsystemSpec& subsystem(std::size_t k) const { return specs_[slot_of(k)]; }

  bool is_iid() const noexcept { return specs_.size() == 1; }
  // Every rho_k(0) is pure; enables the closed-form branch paths.
  bool pure_subsystems() const noexcept { return pure_; }
  // rho_S(0) is a pure state as well.
  bool pure_system() const noexcept { return pure_system_; }

 private:
  DecoherenceModel() = default;
  void finish();

  PointerSpec pointer_;
  std::vector<SubsystemSpec> specs_;
  std::vector<std::size_t> slots_;  // empty for i.i.d. models
  std::size_t size_ = 0;
  bool pure_ = false;
  bool pure_system_ = false;
};

ValidationReport validate_model(const DecoherenceModel& model,
                                const Tolerances& tol = default_tolerances());

struct Fragment {
  std::vector<std::size_t> indices;  // sorted, distinct, 0-based

  std::size_t size() const noexcept { return indices.size(); }
  static Fragment first(std::size_t m);
  static Fragment all(std::size_t n) { return first(n); }
};

// Sorted indices of {0..n-1} not in `fragment`.
Fragment complement(const Fragment& fragment, std::size_t n);
void check_fragment(const Fragment& fragment, std::size_t n);

// exp(-i t (pi_s Y_k + W_k)).
ComplexMatrix conditional_propagator(const DecoherenceModel& model, std::size_t k, int s, double t);

struct SubsystemBranches {
  std::vector<ComplexMatrix> propagators;  // U_k^s(t)
  std::vector<ComplexMatrix> conditional;  // rho_k|s(t) = U rho_k(0) U^dag
  ComplexMatrix overlap;                   // lambda^{s s'} = tr[U^{s'}dag U^s rho_k(0)]
};

class BranchEnsemble {
 public:
  BranchEnsemble(double t, PointerSpec pointer, std::vector<SubsystemBranches> slots,
                 std::vector<std::size_t> slot_of, std::size_t size, bool pure);

  double time() const noexcept { return t_; }
  const PointerSpec& pointer() const noexcept { return pointer_; }
  int system_dim() const noexcept { return pointer_.dim(); }
  std::size_t environment_size() const noexcept { return size_; }
  bool pure_subsystems() const noexcept { return pure_; }
  bool is_iid() const noexcept { return slots_.size() == 1; }

  std::size_t slot_count() const noexcept { return slots_.size(); }
  std::size_t slot_of(std::size_t k) const { return slot_of_.empty() ? 0 : slot_of_.at(k); }
  const SubsystemBranches& slot(std::size_t i) const { return slots_.at(i); }
  const SubsystemBranches& subsystem(std::size_t k) const { return slots_[slot_of(k)]; }

  Complex overlap(std::size_t k, int s, int s_prime) const { return subsystem(k).overlap(s, s_prime); }

 private:
  double t_;
  PointerSpec pointer_;
  std::vector<SubsystemBranches> slots_;
  std::vector<std::size_t> slot_of_;
  std::size_t size_;
  bool pure_;
};

BranchEnsemble branch_ensemble(const DecoherenceModel& model, double t);

// Product of lambda_k^{s s'} over the listed subsystems.
Complex decoherence_factor(const BranchEnsemble& ensemble, const Fragment& subsystems, int s, int s_prime);

// rho_SF(t) on S (x) F, system factor leftmost.
ComplexMatrix joint_state_dense(const DecoherenceModel& model, const BranchEnsemble& ensemble,
                                const Fragment& fragment,
                                Eigen::Index max_dim = default_tolerances().max_dense_dim);
DensityMatrix joint_state_dense(const DecoherenceModel& model, const Fragment& fragment, double t);

// Conditional fragment state (x)_{k in F} rho_k|s(t).
ComplexMatrix conditional_fragment_state(const BranchEnsemble& ensemble, const Fragment& fragment, int s,
                                         Eigen::Index max_dim);

}  // namespace qdarwin
