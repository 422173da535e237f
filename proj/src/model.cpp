#include "qdarwin/model.hpp"

#include "qdarwin/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace qdarwin {

namespace {

constexpr double kDegeneracyTol = 1e-12;

bool bitwise_equal(const ComplexMatrix& a, const ComplexMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::equal(a.data(), a.data() + a.size(), b.data());
}

bool state_is_pure(const ComplexMatrix& rho) {
  if (rho.rows() != rho.cols() || rho.rows() == 0 || !is_hermitian(rho)) return false;
  return hermitian_eigenvalues(rho).maxCoeff() >= 1.0 - default_tolerances().clip;
}

bool has_degenerate_values(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (std::abs(values[i] - values[i - 1]) <= kDegeneracyTol * std::max(1.0, std::abs(values[i]))) return true;
  }
  return false;
}

void check_pointer_shape(const PointerSpec& p) {
  const auto d = p.eigenvalues.size();
  if (d < 2) throw InputError("pointer: system dimension must be at least 2");
  if (p.probabilities.size() != d || p.phases.size() != d) {
    throw InputError("pointer: eigenvalues, probabilities and phases must have equal length");
  }
  if (p.initial_state.rows() != static_cast<Eigen::Index>(d) || p.initial_state.cols() != static_cast<Eigen::Index>(d)) {
    throw InputError("pointer: initial system state has wrong shape");
  }
}

void check_subsystem_shape(const SubsystemSpec& s, std::size_t k) {
  const Eigen::Index d = s.initial_state.rows();
  const auto same = [d](const ComplexMatrix& m) { return m.rows() == d && m.cols() == d; };
  if (d < 1 || !same(s.initial_state) || !same(s.interaction) || !same(s.self_hamiltonian)) {
    throw InputError("subsystem " + std::to_string(k) + ": operators must be square with equal dimension");
  }
}

}  // namespace

PointerSpec PointerSpec::qubit(double p1, bool coherent) {
  if (!(p1 >= 0.0 && p1 <= 1.0)) throw InputError("pointer: probability outside [0, 1]");
  PointerSpec p;
  p.eigenvalues = {0.5, -0.5};
  p.probabilities = {p1, 1.0 - p1};
  p.phases = {0.0, 0.0};
  p.initial_state = ComplexMatrix::Zero(2, 2);
  p.initial_state(0, 0) = p1;
  p.initial_state(1, 1) = 1.0 - p1;
  if (coherent) {
    const double c = std::sqrt(p1 * (1.0 - p1));
    p.initial_state(0, 1) = c;
    p.initial_state(1, 0) = c;
  }
  return p;
}

bool SubsystemSpec::operator==(const SubsystemSpec& other) const {
  return bitwise_equal(initial_state, other.initial_state) && bitwise_equal(interaction, other.interaction) &&
         bitwise_equal(self_hamiltonian, other.self_hamiltonian);
}

DecoherenceModel DecoherenceModel::from_list(PointerSpec pointer, std::vector<SubsystemSpec> subsystems) {
  check_pointer_shape(pointer);
  if (subsystems.empty()) throw InputError("model: environment must contain at least one subsystem");
  DecoherenceModel m;
  m.pointer_ = std::move(pointer);
  m.size_ = subsystems.size();
  m.slots_.reserve(subsystems.size());
  for (std::size_t k = 0; k < subsystems.size(); ++k) {
    check_subsystem_shape(subsystems[k], k);
    auto it = std::find(m.specs_.begin(), m.specs_.end(), subsystems[k]);
    if (it == m.specs_.end()) {
      m.slots_.push_back(m.specs_.size());
      m.specs_.push_back(std::move(subsystems[k]));
    } else {
      m.slots_.push_back(static_cast<std::size_t>(it - m.specs_.begin()));
    }
  }
  if (m.specs_.size() == 1) m.slots_.clear();
  m.finish();
  return m;
}

DecoherenceModel DecoherenceModel::iid(PointerSpec pointer, SubsystemSpec subsystem, std::size_t count) {
  check_pointer_shape(pointer);
  if (count == 0) throw InputError("model: environment must contain at least one subsystem");
  check_subsystem_shape(subsystem, 0);
  DecoherenceModel m;
  m.pointer_ = std::move(pointer);
  m.size_ = count;
  m.specs_.push_back(std::move(subsystem));
  m.finish();
  return m;
}

void DecoherenceModel::finish() {
  pure_ = std::all_of(specs_.begin(), specs_.end(), [](const SubsystemSpec& s) { return state_is_pure(s.initial_state); });
  pure_system_ = state_is_pure(pointer_.initial_state);
}

ValidationReport validate_model(const DecoherenceModel& model, const Tolerances& tol) {
  ValidationReport r;
  const PointerSpec& p = model.pointer();
  const int ds = p.dim();
  if (ds > 8) r.errors.push_back("system dimension " + std::to_string(ds) + " exceeds the supported maximum of 8");

  double total = 0.0;
  for (double q : p.probabilities) {
    if (!(q >= 0.0)) r.errors.push_back("pointer probability is negative");
    total += q;
  }
  if (std::abs(total - 1.0) > 1e-12) r.errors.push_back("pointer probabilities do not sum to 1");
  try {
    validate_density(p.initial_state, tol);
    for (int s = 0; s < ds; ++s) {
      const Complex diag = p.initial_state(s, s);
      if (std::abs(diag.real() - p.probabilities[s]) > 1e-12 || std::abs(diag.imag()) > 1e-12) {
        r.errors.push_back("initial system state diagonal does not match pointer probabilities");
        break;
      }
    }
  } catch (const InputError& e) {
    r.errors.push_back(std::string("initial system state invalid: ") + e.what());
  }
  if (has_degenerate_values(p.eigenvalues)) r.warnings.push_back("degenerate pointer eigenvalues");

  for (std::size_t slot = 0; slot < model.slot_count(); ++slot) {
    std::size_t first = 0;
    while (model.slot_of(first) != slot) ++first;
    const std::string label = "subsystem " + std::to_string(first) + ": ";
    const SubsystemSpec& s = model.slot_spec(slot);
    if (s.dim() > 64) r.warnings.push_back(label + "dimension above 64 is outside the tested range");
    if (!s.interaction.allFinite() || !is_hermitian(s.interaction, tol.hermitian)) {
      r.errors.push_back(label + "interaction not Hermitian");
    } else {
      const RealVector ev = hermitian_eigenvalues(s.interaction);
      if (has_degenerate_values(std::vector<double>(ev.data(), ev.data() + ev.size()))) {
        r.warnings.push_back(label + "interaction has degenerate spectrum");
      }
    }
    if (!s.self_hamiltonian.allFinite() || !is_hermitian(s.self_hamiltonian, tol.hermitian)) {
      r.errors.push_back(label + "self-Hamiltonian not Hermitian");
    }
    try {
      validate_density(s.initial_state, tol);
    } catch (const InputError& e) {
      r.errors.push_back(label + "initial state invalid: " + e.what());
    }
  }
  return r;
}

Fragment Fragment::first(std::size_t m) {
  Fragment f;
  f.indices.resize(m);
  std::iota(f.indices.begin(), f.indices.end(), std::size_t{0});
  return f;
}

void check_fragment(const Fragment& fragment, std::size_t n) {
  for (std::size_t i = 0; i < fragment.indices.size(); ++i) {
    if (fragment.indices[i] >= n) throw InputError("fragment index out of range");
    if (i > 0 && fragment.indices[i] <= fragment.indices[i - 1]) {
      throw InputError("fragment indices must be sorted and distinct");
    }
  }
}

Fragment complement(const Fragment& fragment, std::size_t n) {
  check_fragment(fragment, n);
  Fragment out;
  out.indices.reserve(n - fragment.size());
  std::size_t j = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (j < fragment.indices.size() && fragment.indices[j] == k) {
      ++j;
    } else {
      out.indices.push_back(k);
    }
  }
  return out;
}

ComplexMatrix conditional_propagator(const DecoherenceModel& model, std::size_t k, int s, double t) {
  if (k >= model.environment_size()) throw InputError("conditional_propagator: subsystem index out of range");
  if (s < 0 || s >= model.pointer().dim()) throw InputError("conditional_propagator: pointer index out of range");
  if (!std::isfinite(t)) throw InputError("conditional_propagator: time must be finite");
  const SubsystemSpec& spec = model.subsystem(k);
  const ComplexMatrix generator = model.pointer().eigenvalues[s] * spec.interaction + spec.self_hamiltonian;
  return unitary_evolution(generator, t);
}

BranchEnsemble::BranchEnsemble(double t, PointerSpec pointer, std::vector<SubsystemBranches> slots,
                               std::vector<std::size_t> slot_of, std::size_t size, bool pure)
    : t_(t), pointer_(std::move(pointer)), slots_(std::move(slots)), slot_of_(std::move(slot_of)), size_(size), pure_(pure) {}

BranchEnsemble branch_ensemble(const DecoherenceModel& model, double t) {
  if (!std::isfinite(t)) throw InputError("branch_ensemble: time must be finite");
  const int ds = model.pointer().dim();
  std::vector<SubsystemBranches> slots(model.slot_count());
  for (std::size_t i = 0; i < model.slot_count(); ++i) {
    const SubsystemSpec& spec = model.slot_spec(i);
    SubsystemBranches& b = slots[i];
    for (int s = 0; s < ds; ++s) {
      const ComplexMatrix generator = model.pointer().eigenvalues[s] * spec.interaction + spec.self_hamiltonian;
      b.propagators.push_back(unitary_evolution(generator, t));
      const ComplexMatrix& u = b.propagators.back();
      ComplexMatrix rho = u * spec.initial_state * u.adjoint();
      b.conditional.push_back((0.5 * (rho + rho.adjoint())).eval());
    }
    b.overlap = ComplexMatrix::Ones(ds, ds);
    for (int s = 0; s < ds; ++s) {
      for (int sp = 0; sp < ds; ++sp) {
        if (s == sp) continue;
        b.overlap(s, sp) = (b.propagators[sp].adjoint() * b.propagators[s] * spec.initial_state).trace();
      }
    }
  }
  std::vector<std::size_t> slot_of;
  if (model.slot_count() > 1) {
    slot_of.resize(model.environment_size());
    for (std::size_t k = 0; k < slot_of.size(); ++k) slot_of[k] = model.slot_of(k);
  }
  return BranchEnsemble(t, model.pointer(), std::move(slots), std::move(slot_of), model.environment_size(),
                        model.pure_subsystems());
}

Complex decoherence_factor(const BranchEnsemble& ensemble, const Fragment& subsystems, int s, int s_prime) {
  check_fragment(subsystems, ensemble.environment_size());
  if (s == s_prime) return {1.0, 0.0};
  Complex g{1.0, 0.0};
  for (std::size_t k : subsystems.indices) g *= ensemble.overlap(k, s, s_prime);
  return g;
}

ComplexMatrix conditional_fragment_state(const BranchEnsemble& ensemble, const Fragment& fragment, int s,
                                         Eigen::Index max_dim) {
  check_fragment(fragment, ensemble.environment_size());
  std::vector<ComplexMatrix> factors;
  factors.reserve(fragment.size());
  for (std::size_t k : fragment.indices) factors.push_back(ensemble.subsystem(k).conditional[s]);
  return tensor_product(factors, max_dim);
}

ComplexMatrix joint_state_dense(const DecoherenceModel& model, const BranchEnsemble& ensemble,
                                const Fragment& fragment, Eigen::Index max_dim) {
  check_fragment(fragment, model.environment_size());
  const PointerSpec& p = model.pointer();
  const int ds = p.dim();
  Eigen::Index df = 1;
  for (std::size_t k : fragment.indices) {
    df *= model.subsystem(k).dim();
    if (ds * df > max_dim) {
      throw ResourceError("joint_state_dense: dimension of S(x)F exceeds dense cap " + std::to_string(max_dim) +
                          "; use the pure-branch closed forms instead");
    }
  }
  const Fragment rest = complement(fragment, model.environment_size());
  const double t = ensemble.time();

  ComplexMatrix out = ComplexMatrix::Zero(ds * df, ds * df);
  for (int s = 0; s < ds; ++s) {
    for (int sp = 0; sp < ds; ++sp) {
      const Complex rho_s = p.initial_state(s, sp);
      if (rho_s == Complex{0.0, 0.0}) continue;
      const Complex coeff = rho_s * std::polar(1.0, -(p.phases[s] - p.phases[sp]) * t) *
                            decoherence_factor(ensemble, rest, s, sp);
      ComplexMatrix block = ComplexMatrix::Identity(1, 1);
      for (std::size_t k : fragment.indices) {
        const SubsystemBranches& b = ensemble.subsystem(k);
        const ComplexMatrix piece = b.propagators[s] * model.subsystem(k).initial_state * b.propagators[sp].adjoint();
        block = tensor_product(block, piece, max_dim);
      }
      out.block(s * df, sp * df, df, df) = coeff * block;
    }
  }
  return (0.5 * (out + out.adjoint())).eval();
}

DensityMatrix joint_state_dense(const DecoherenceModel& model, const Fragment& fragment, double t) {
  const BranchEnsemble ens = branch_ensemble(model, t);
  return DensityMatrix(joint_state_dense(model, ens, fragment));
}

}  // namespace qdarwin
