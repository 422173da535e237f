#include "oracles.hpp"

#include "qdarwin/errors.hpp"
#include "qdarwin/model.hpp"
#include "qdarwin/sampler.hpp"
#include "qdarwin/selftest.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace qdarwin;

namespace {

ComplexMatrix sigma_z() {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}

SubsystemSpec plus_state_spec(double g) {
  SubsystemSpec s;
  s.initial_state = ComplexMatrix::Constant(2, 2, 0.5);
  s.interaction = g * sigma_z();
  s.self_hamiltonian = ComplexMatrix::Zero(2, 2);
  return s;
}

bool contains(const std::vector<std::string>& v, const std::string& needle) {
  return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("validation reports errors and warnings") {
  SubsystemSpec bad = plus_state_spec(1.0);
  bad.interaction(0, 1) = 0.5;
  const auto r = validate_model(DecoherenceModel::from_list(PointerSpec::qubit(), {bad}));
  CHECK_FALSE(r.ok());
  CHECK(contains(r.errors, "interaction not Hermitian"));

  PointerSpec degenerate = PointerSpec::qubit();
  degenerate.eigenvalues = {0.5, 0.5};
  const auto w = validate_model(DecoherenceModel::iid(degenerate, plus_state_spec(1.0), 3));
  CHECK(w.ok());
  CHECK(contains(w.warnings, "degenerate pointer eigenvalues"));

  PointerSpec big;
  big.eigenvalues.resize(9);
  for (int i = 0; i < 9; ++i) big.eigenvalues[i] = i;
  big.probabilities.assign(9, 1.0 / 9);
  big.phases.assign(9, 0.0);
  big.initial_state = ComplexMatrix::Identity(9, 9) / 9.0;
  CHECK_FALSE(validate_model(DecoherenceModel::iid(big, plus_state_spec(1.0), 2)).ok());

  PointerSpec skew = PointerSpec::qubit();
  skew.probabilities = {0.7, 0.4};
  CHECK_FALSE(validate_model(DecoherenceModel::iid(skew, plus_state_spec(1.0), 2)).ok());
}

TEST_CASE("identical list entries collapse to the i.i.d. representation") {
  const SubsystemSpec s = plus_state_spec(0.8);
  const auto listed = DecoherenceModel::from_list(PointerSpec::qubit(0.3), {s, s, s, s});
  const auto iid = DecoherenceModel::iid(PointerSpec::qubit(0.3), s, 4);
  CHECK(listed.is_iid());
  CHECK(listed.slot_count() == iid.slot_count());
  CHECK(listed.environment_size() == 4);
  const auto mixed = DecoherenceModel::from_list(PointerSpec::qubit(), {s, plus_state_spec(0.5), s});
  CHECK(mixed.slot_count() == 2);
  CHECK(mixed.slot_of(0) == mixed.slot_of(2));
  CHECK(mixed.slot_of(1) != mixed.slot_of(0));
}

TEST_CASE("branch overlaps against explicit propagators") {
  Rng rng(11);
  const DecoherenceModel model = random_qubit_model(3, rng);
  const double t = 0.83;
  const BranchEnsemble ens = branch_ensemble(model, t);
  const auto& lambda = model.pointer().eigenvalues;
  for (std::size_t k = 0; k < 3; ++k) {
    const SubsystemSpec& spec = model.subsystem(k);
    const oracle::Mat u0 = oracle::expm(Complex(0, -t) * (lambda[0] * spec.interaction + spec.self_hamiltonian));
    const oracle::Mat u1 = oracle::expm(Complex(0, -t) * (lambda[1] * spec.interaction + spec.self_hamiltonian));
    const Complex expected = (u1.adjoint() * u0 * spec.initial_state).trace();
    CHECK(std::abs(ens.overlap(k, 0, 1) - expected) < 1e-11);
    CHECK(std::abs(ens.overlap(k, 0, 0) - 1.0) < 1e-12);
    CHECK(std::abs(ens.overlap(k, 1, 0) - std::conj(expected)) < 1e-11);
    CHECK((conditional_propagator(model, k, 1, t) - u1).cwiseAbs().maxCoeff() < 1e-11);
  }
}

TEST_CASE("decoherence factor is the product of overlaps and starts at one") {
  Rng rng(12);
  const DecoherenceModel model = random_qubit_model(5, rng);
  const BranchEnsemble ens = branch_ensemble(model, 1.3);
  Complex product = 1.0;
  for (std::size_t k = 0; k < 5; ++k) product *= ens.overlap(k, 0, 1);
  CHECK(std::abs(decoherence_factor(ens, Fragment::all(5), 0, 1) - product) < 1e-14);
  CHECK(std::abs(decoherence_factor(branch_ensemble(model, 0.0), Fragment::all(5), 0, 1) - 1.0) < 1e-14);
  CHECK(std::abs(decoherence_factor(ens, Fragment{}, 0, 1) - 1.0) == 0.0);
}

TEST_CASE("dense joint state agrees with a state-vector simulation") {
  Rng rng(13);
  oracle::PureSimulation sim;
  sim.priors = {0.35, 0.65};
  sim.eigenvalues = {0.5, -0.5};
  std::vector<SubsystemSpec> subs;
  for (int k = 0; k < 4; ++k) {
    SubsystemSpec s;
    const ComplexVector psi = random_pure_vector(2, rng);
    s.initial_state = psi * psi.adjoint();
    s.interaction = random_hermitian(2, rng);
    s.self_hamiltonian = random_hermitian(2, rng, 0.4);
    sim.states.push_back(psi);
    sim.interactions.push_back(s.interaction);
    sim.fields.push_back(s.self_hamiltonian);
    subs.push_back(s);
  }
  const auto model = DecoherenceModel::from_list(PointerSpec::qubit(0.35), subs);
  const Fragment f{{1, 3}};
  const DensityMatrix rho = joint_state_dense(model, f, 0.9);
  CHECK((rho.matrix() - sim.system_fragment_state(0.9, {1, 3})).cwiseAbs().maxCoeff() < 1e-10);
  // System coherence is sqrt(p1 p2) times the full decoherence factor.
  const BranchEnsemble ens = branch_ensemble(model, 0.9);
  const ComplexMatrix sys = joint_state_dense(model, ens, Fragment{});
  CHECK(std::abs(sys(0, 1) - std::sqrt(0.35 * 0.65) * decoherence_factor(ens, Fragment::all(4), 0, 1)) < 1e-12);
}

TEST_CASE("joint state refuses oversized fragments") {
  const auto model = DecoherenceModel::iid(PointerSpec::qubit(), plus_state_spec(1.0), 20);
  const BranchEnsemble ens = branch_ensemble(model, 1.0);
  CHECK_THROWS_AS(joint_state_dense(model, ens, Fragment::all(20), 1 << 10), ResourceError);
}

TEST_CASE("fragments") {
  const Fragment f{{0, 2, 5}};
  CHECK(complement(f, 6).indices == std::vector<std::size_t>{1, 3, 4});
  CHECK_NOTHROW(check_fragment(f, 6));
  CHECK_THROWS_AS(check_fragment(f, 5), InputError);
  CHECK_THROWS_AS(check_fragment(Fragment{{2, 2}}, 5), InputError);
  CHECK_THROWS_AS(check_fragment(Fragment{{3, 1}}, 5), InputError);
  CHECK(Fragment::first(3).indices == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("sampler enumeration and binomials") {
  CHECK(binomial(10, 3) == 120);
  CHECK(binomial(5, 0) == 1);
  CHECK(binomial(5, 6) == 0);
  CHECK(binomial(200, 100) == std::numeric_limits<std::size_t>::max());
  const auto all = enumerate_fragments(6, 3);
  CHECK(all.size() == 20);
  CHECK(std::is_sorted(all.begin(), all.end(),
                       [](const Fragment& a, const Fragment& b) { return a.indices < b.indices; }));
  std::set<std::vector<std::size_t>> distinct;
  for (const auto& f : all) distinct.insert(f.indices);
  CHECK(distinct.size() == 20);
}

TEST_CASE("Monte Carlo fragments are reproducible and well formed") {
  const auto a = sample_fragments(50, 7, 100, 42, 0.5);
  const auto b = sample_fragments(50, 7, 100, 42, 0.5);
  const auto c = sample_fragments(50, 7, 100, 43, 0.5);
  const auto d = sample_fragments(50, 7, 100, 42, 0.6);
  CHECK(a.size() == 100);
  bool same = true;
  bool differs_seed = false;
  bool differs_time = false;
  std::vector<int> hits(50, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    same = same && a[i].indices == b[i].indices;
    differs_seed = differs_seed || a[i].indices != c[i].indices;
    differs_time = differs_time || a[i].indices != d[i].indices;
    CHECK_NOTHROW(check_fragment(a[i], 50));
    CHECK(a[i].size() == 7);
    for (std::size_t k : a[i].indices) ++hits[k];
  }
  CHECK(same);
  CHECK(differs_seed);
  CHECK(differs_time);
  // Roughly uniform: 700 hits over 50 indices, expect 14 each.
  CHECK(*std::max_element(hits.begin(), hits.end()) < 40);
}

TEST_CASE("fragment selection") {
  FragmentSampler s;
  CHECK(select_fragments(s, 30, 10, 1.0, true).size() == 1);
  CHECK(select_fragments(s, 8, 3, 1.0, false).size() == 56);
  CHECK(select_fragments(s, 8, 8, 1.0, false).size() == 1);
  s.exhaustive_cap = 100;
  CHECK_THROWS_AS(select_fragments(s, 30, 10, 1.0, false), InputError);
  s.mode = FragmentSampler::Mode::monte_carlo;
  s.samples = 25;
  CHECK(select_fragments(s, 30, 10, 1.0, false).size() == 25);
}

}  // TEST_SUITE
