#include "oracles.hpp"

#include "qdarwin/errors.hpp"
#include "qdarwin/info.hpp"
#include "qdarwin/selftest.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdlib>

using namespace qdarwin;

namespace {

struct PureCase {
  DecoherenceModel model;
  oracle::PureSimulation sim;
};

PureCase random_pure_case(std::size_t n, double p1, Rng& rng) {
  oracle::PureSimulation sim;
  sim.priors = {p1, 1.0 - p1};
  sim.eigenvalues = {0.5, -0.5};
  std::vector<SubsystemSpec> subs;
  for (std::size_t k = 0; k < n; ++k) {
    SubsystemSpec s;
    const ComplexVector psi = random_pure_vector(2, rng);
    s.initial_state = psi * psi.adjoint();
    s.interaction = random_hermitian(2, rng);
    s.self_hamiltonian = random_hermitian(2, rng, 0.3);
    sim.states.push_back(psi);
    sim.interactions.push_back(s.interaction);
    sim.fields.push_back(s.self_hamiltonian);
    subs.push_back(s);
  }
  return {DecoherenceModel::from_list(PointerSpec::qubit(p1), subs), sim};
}

SubsystemSpec plus_spec(double g) {
  SubsystemSpec s;
  s.initial_state = ComplexMatrix::Constant(2, 2, 0.5);
  s.interaction = ComplexMatrix::Zero(2, 2);
  s.interaction(0, 0) = g;
  s.interaction(1, 1) = -g;
  s.self_hamiltonian = ComplexMatrix::Zero(2, 2);
  return s;
}

}  // namespace

TEST_SUITE("info") {

TEST_CASE("information quantities against a state-vector simulation") {
  Rng rng(21);
  const PureCase pc = random_pure_case(5, 0.3, rng);
  const std::vector<double>& priors = pc.model.pointer().probabilities;
  const double t = 1.1;
  const BranchEnsemble ens = branch_ensemble(pc.model, t);
  for (const std::vector<std::size_t>& idx : {std::vector<std::size_t>{0}, {1, 3}, {0, 2, 4}, {0, 1, 2, 3}}) {
    const Fragment f{idx};
    const oracle::Mat rho_sf = pc.sim.system_fragment_state(t, idx);
    const oracle::Mat r1 = oracle::conditional(rho_sf, 2, 0, priors[0]);
    const oracle::Mat r2 = oracle::conditional(rho_sf, 2, 1, priors[1]);
    const oracle::Mat rho_f = priors[0] * r1 + priors[1] * r2;
    const double chi = oracle::entropy_bits(rho_f) - priors[0] * oracle::entropy_bits(r1) -
                       priors[1] * oracle::entropy_bits(r2);
    const std::vector<int> dims{2, static_cast<int>(rho_f.rows())};
    const double mi = oracle::entropy_bits(oracle::partial_trace(rho_sf, dims, {true, false})) +
                      oracle::entropy_bits(rho_f) - oracle::entropy_bits(rho_sf);
    const double pe = oracle::helstrom(r1, r2, priors[0], priors[1]);

    CHECK(holevo(ens, f, priors) == doctest::Approx(chi).epsilon(1e-9));
    CHECK(holevo_dense(ens, f, priors) == doctest::Approx(chi).epsilon(1e-9));
    CHECK(mutual_information(pc.model, ens, f) == doctest::Approx(mi).epsilon(1e-9));
    CHECK(mutual_information_dense(pc.model, ens, f) == doctest::Approx(mi).epsilon(1e-9));
    CHECK(helstrom_error(ens, f, priors) == doctest::Approx(pe).epsilon(1e-9));
    CHECK(helstrom_error_dense(ens, f, priors) == doctest::Approx(pe).epsilon(1e-9));
  }
}

TEST_CASE("bound chain on mixed models") {
  Rng rng(22);
  for (int trial = 0; trial < 5; ++trial) {
    const DecoherenceModel model = random_qubit_model(5, rng);
    const auto& priors = model.pointer().probabilities;
    const BranchEnsemble ens = branch_ensemble(model, 0.7);
    const double hs = pointer_entropy(priors);
    for (std::size_t m = 1; m <= 3; ++m) {
      for (const Fragment& f : enumerate_fragments(5, m)) {
        const double chi = holevo(ens, f, priors);
        const double pe = helstrom_error(ens, f, priors);
        CHECK(fano_lower_bound(pe, hs) <= chi + 1e-9);
        if (m <= 100) CHECK(chi <= mutual_information(model, ens, f) + 1e-9);
        CHECK(chi <= hs + 1e-12);
        for (double c : {0.2, 0.5, 0.8}) CHECK(pe <= pe_star_bound(ens, f, priors, c) + 1e-9);
      }
    }
  }
}

TEST_CASE("fidelity upper bound holds for equal priors and is refused otherwise") {
  Rng rng(23);
  const DecoherenceModel model = random_qubit_model(4, rng);
  PointerSpec eq = PointerSpec::qubit(0.5);
  std::vector<SubsystemSpec> subs;
  for (std::size_t k = 0; k < 4; ++k) subs.push_back(model.subsystem(k));
  const auto equal = DecoherenceModel::from_list(eq, subs);
  const BranchEnsemble ens = branch_ensemble(equal, 1.2);
  for (std::size_t m = 1; m <= 4; ++m) {
    for (const Fragment& f : enumerate_fragments(4, m)) {
      CHECK(holevo(ens, f, equal.pointer().probabilities) <=
            fidelity_upper_bound(ens, f, equal.pointer().probabilities) + 1e-9);
    }
  }
  const std::vector<double> skewed{0.3, 0.7};
  CHECK_THROWS_AS(fidelity_upper_bound(ens, Fragment{{0}}, skewed), UnsupportedPathError);
}

TEST_CASE("Fano bound domain and values") {
  CHECK(fano_lower_bound(0.5, 1.0) == 0.0);
  CHECK(fano_lower_bound(0.0, 1.0) == 1.0);
  CHECK(fano_lower_bound(0.1, 1.0) == doctest::Approx(1.0 - oracle::binary_entropy(0.1)));
  CHECK_THROWS_AS(fano_lower_bound(0.6, 1.0), InputError);
  CHECK_THROWS_AS(fano_lower_bound(-0.1, 1.0), InputError);
}

TEST_CASE("two-branch mixture entropy limits") {
  CHECK(two_branch_mixture_entropy(0.5, 0.5, 0.0) == doctest::Approx(1.0));
  CHECK(two_branch_mixture_entropy(0.5, 0.5, 1.0) == doctest::Approx(0.0));
  CHECK(two_branch_mixture_entropy(0.2, 0.8, 0.0) == doctest::Approx(oracle::binary_entropy(0.2)));
}

TEST_CASE("pure-branch formulas stay accurate when the error is tiny") {
  // 200 subsystems with |<a|b>|^2 = 0.36: P_e ~ p1 p2 0.36^200 underflows 1 - sqrt(1 - x).
  const auto model = DecoherenceModel::iid(PointerSpec::qubit(0.5), plus_spec(std::acos(0.6)), 200);
  const BranchEnsemble ens = branch_ensemble(model, 1.0);
  const double pe = helstrom_error(ens, Fragment::all(200), model.pointer().probabilities);
  CHECK(pe > 0.0);
  CHECK(std::log(pe) == doctest::Approx(std::log(0.25) + 200 * std::log(0.36)).epsilon(1e-9));
}

TEST_CASE("Holevo saturates at H_S and vanishes at t = 0") {
  const auto model = DecoherenceModel::iid(PointerSpec::qubit(0.5), plus_spec(1.0), 6);
  const auto& priors = model.pointer().probabilities;
  CHECK(holevo(branch_ensemble(model, 0.0), Fragment::all(6), priors) == doctest::Approx(0.0));
  // g t = pi/2 makes each subsystem a perfect record.
  const BranchEnsemble perfect = branch_ensemble(model, std::numbers::pi / 2.0);
  CHECK(holevo(perfect, Fragment{{0}}, priors) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(helstrom_error(perfect, Fragment{{0}}, priors) == doctest::Approx(0.0));
}

TEST_CASE("averages, monotonicity and Monte Carlo worker independence") {
  Rng rng(24);
  const DecoherenceModel model = random_qubit_model(10, rng, true);
  const BranchEnsemble ens = branch_ensemble(model, 0.6);
  FragmentSampler exhaustive;
  double prev = -1.0;
  for (std::size_t m = 0; m <= 10; ++m) {
    const double chi = fragment_average(model, ens, m, Metric::holevo, exhaustive).mean;
    CHECK(chi >= prev - 1e-12);
    prev = chi;
  }
  FragmentSampler mc;
  mc.mode = FragmentSampler::Mode::monte_carlo;
  mc.samples = 64;
  mc.master_seed = 9;
  mc.workers = 1;
  const Average one = fragment_average(model, ens, 4, Metric::holevo, mc);
  mc.workers = 4;
  const Average four = fragment_average(model, ens, 4, Metric::holevo, mc);
  CHECK(one.mean == four.mean);
  CHECK(one.stderr_mean == four.stderr_mean);
  CHECK(one.stderr_mean > 0.0);
  const Average exact = fragment_average(model, ens, 4, Metric::holevo, exhaustive);
  CHECK(std::abs(one.mean - exact.mean) < 5.0 * one.stderr_mean + 1e-12);
}

TEST_CASE("summarize") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const Average a = summarize(v, false);
  CHECK(a.mean == 2.5);
  CHECK(a.stderr_mean == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(summarize(v, true).stderr_mean == 0.0);
}

TEST_CASE("redundancy search matches a direct scan") {
  const auto model = DecoherenceModel::iid(PointerSpec::qubit(0.5), plus_spec(0.3), 300);
  const BranchEnsemble ens = branch_ensemble(model, 1.0);
  const auto& priors = model.pointer().probabilities;
  for (double delta : {0.1, 0.01, 0.001}) {
    const RedundancyResult r = redundancy(model, ens, delta, FragmentSampler{});
    std::size_t m = 1;
    while (holevo(ens, Fragment::first(m), priors) < (1.0 - delta)) ++m;
    CHECK(r.status == RedundancyStatus::ok);
    CHECK(r.m_delta == m);
    CHECK(r.redundancy == doctest::Approx(300.0 / m));
    CHECK(r.interpolated_m <= static_cast<double>(m));
    CHECK(r.interpolated_m >= static_cast<double>(m) - 1.0);
  }
  const RedundancyResult none = redundancy(model, branch_ensemble(model, 0.0), 0.1, FragmentSampler{});
  CHECK(none.status == RedundancyStatus::insufficient_information);
  CHECK(none.m_delta == 0);
}

TEST_CASE("symmetric blocks agree with the dense path and the oracle") {
  Rng rng(26);
  auto mixed_spec = [&](int d) {
    SubsystemSpec s;
    s.initial_state = random_mixed_state(d, rng);
    s.interaction = random_hermitian(d, rng);
    s.self_hamiltonian = random_hermitian(d, rng, 0.4);
    return s;
  };
  const SubsystemSpec a = mixed_spec(2);
  const SubsystemSpec b = mixed_spec(2);
  const SubsystemSpec q = mixed_spec(3);
  SubsystemSpec pure_spec = plus_spec(0.8);
  const std::vector<SubsystemSpec> subs = {a, b, a, q, a, pure_spec, b, a, pure_spec};
  for (double p1 : {0.5, 0.3}) {
    const auto model = DecoherenceModel::from_list(PointerSpec::qubit(p1, p1 == 0.5), subs);
    REQUIRE(model.slot_count() == 4);
    const BranchEnsemble ens = branch_ensemble(model, 0.8);
    const auto& priors = model.pointer().probabilities;
    const std::vector<Fragment> fragments = {Fragment::all(9), Fragment::first(5), Fragment{{0, 2, 4, 7}},
                                             Fragment{{1, 3, 6}}, Fragment{{5, 8}}, Fragment{{4}}};
    for (const Fragment& f : fragments) {
      CHECK(holevo_symmetric(ens, f, priors) == doctest::Approx(holevo_dense(ens, f, priors)).epsilon(1e-10));
      CHECK(helstrom_error_symmetric(ens, f, priors) ==
            doctest::Approx(helstrom_error_dense(ens, f, priors)).epsilon(1e-10));
      if (f.size() < 9) {
        CHECK(mutual_information_symmetric(model, ens, f) ==
              doctest::Approx(mutual_information_dense(model, ens, f)).epsilon(1e-10));
      }
    }
    // Independent check: brute-force Kronecker products.
    const Fragment probe{{0, 1, 2, 3, 4, 7}};
    std::vector<ComplexMatrix> branch(2, ComplexMatrix::Ones(1, 1));
    for (std::size_t k : probe.indices) {
      for (int s = 0; s < 2; ++s) branch[s] = oracle::kron(branch[s], ens.subsystem(k).conditional[s]);
    }
    const double mix = oracle::entropy_bits(priors[0] * branch[0] + priors[1] * branch[1]);
    const double chi = mix - priors[0] * oracle::entropy_bits(branch[0]) - priors[1] * oracle::entropy_bits(branch[1]);
    CHECK(holevo_symmetric(ens, probe, priors) == doctest::Approx(chi).epsilon(1e-9));
    const double pe = 0.5 * (1.0 - oracle::trace_norm(priors[0] * branch[0] - priors[1] * branch[1]));
    CHECK(helstrom_error_symmetric(ens, probe, priors) == doctest::Approx(pe).epsilon(1e-9));
    // I(S:F) for the coherent pointer from the brute-force joint state.
    if (p1 == 0.5) {
      const PointerSpec& ptr = model.pointer();
      ComplexMatrix joint = ComplexMatrix::Zero(2 * branch[0].rows(), 2 * branch[0].rows());
      const Eigen::Index df = branch[0].rows();
      for (int s = 0; s < 2; ++s) {
        for (int sp = 0; sp < 2; ++sp) {
          ComplexMatrix block = ComplexMatrix::Ones(1, 1);
          Complex rest{1.0, 0.0};
          for (std::size_t k = 0; k < 9; ++k) {
            const SubsystemSpec& spec = model.subsystem(k);
            const ComplexMatrix u = oracle::expm(-Complex(0, 0.8) * (ptr.eigenvalues[s] * spec.interaction + spec.self_hamiltonian));
            const ComplexMatrix v = oracle::expm(-Complex(0, 0.8) * (ptr.eigenvalues[sp] * spec.interaction + spec.self_hamiltonian));
            const ComplexMatrix x = u * spec.initial_state * v.adjoint();
            if (std::find(probe.indices.begin(), probe.indices.end(), k) != probe.indices.end()) {
              block = oracle::kron(block, x);
            } else {
              rest *= x.trace();
            }
          }
          joint.block(s * df, sp * df, df, df) = ptr.initial_state(s, sp) * rest * block;
        }
      }
      ComplexMatrix sys(2, 2);
      for (int s = 0; s < 2; ++s) {
        for (int sp = 0; sp < 2; ++sp) sys(s, sp) = joint.block(s * df, sp * df, df, df).trace();
      }
      const double mi = oracle::entropy_bits(sys) + mix - oracle::entropy_bits(joint);
      CHECK(mutual_information_symmetric(model, ens, probe) == doctest::Approx(mi).epsilon(1e-9));
    }
    CHECK(prefer_symmetric_blocks(ens, Fragment::all(9)));
    CHECK_FALSE(prefer_symmetric_blocks(ens, Fragment{{0, 1}}));
  }

  // Three-outcome pointer.
  PointerSpec p3;
  p3.probabilities = {0.2, 0.3, 0.5};
  p3.eigenvalues = {1.0, 0.0, -1.0};
  p3.phases = {0.0, 0.0, 0.0};
  p3.initial_state = ComplexMatrix::Zero(3, 3);
  for (int i = 0; i < 3; ++i) p3.initial_state(i, i) = p3.probabilities[i];
  const auto model3 = DecoherenceModel::iid(p3, a, 7);
  const BranchEnsemble ens3 = branch_ensemble(model3, 1.2);
  CHECK(holevo_symmetric(ens3, Fragment::all(7), p3.probabilities) ==
        doctest::Approx(holevo_dense(ens3, Fragment::all(7), p3.probabilities)).epsilon(1e-10));
  CHECK(mutual_information_symmetric(model3, ens3, Fragment::first(5)) ==
        doctest::Approx(mutual_information_dense(model3, ens3, Fragment::first(5))).epsilon(1e-10));
}

TEST_CASE("symmetric blocks reach fragments far beyond the dense cap") {
  Rng rng(27);
  SubsystemSpec s;
  s.initial_state = random_mixed_state(2, rng);
  s.interaction = random_hermitian(2, rng);
  s.self_hamiltonian = ComplexMatrix::Zero(2, 2);
  const auto model = DecoherenceModel::iid(PointerSpec::qubit(0.5), s, 150);
  const BranchEnsemble ens = branch_ensemble(model, 0.3);
  const auto& priors = model.pointer().probabilities;
  double previous = 0.0;
  for (std::size_t m : {20, 60, 100, 150}) {
    const Fragment f = Fragment::first(m);
    const double chi = holevo(ens, f, priors);
    const double pe = helstrom_error(ens, f, priors);
    CHECK(chi >= previous - 1e-9);
    if (m <= 100) CHECK(chi <= mutual_information(model, ens, f) + 1e-9);
    CHECK(fano_lower_bound(pe, 1.0) <= chi + 1e-9);
    CHECK(chi <= fidelity_upper_bound(ens, f, priors) + 1e-9);
    for (double c : {0.2, 0.5, 0.8}) CHECK(pe <= pe_star_bound(ens, f, priors, c) + 1e-12);
    previous = chi;
  }
  CHECK(symmetric_block_cost(ens, Fragment::all(150)) < kSymmetricBlockBudget);
  const auto big = DecoherenceModel::iid(PointerSpec::qubit(0.5), s, 400);
  const BranchEnsemble big_ens = branch_ensemble(big, 0.3);
  CHECK_THROWS_AS(holevo_symmetric(big_ens, Fragment::all(400), priors), ResourceError);
}

TEST_CASE("evaluate_fragment reports NaN beyond the dense cap") {
  Rng rng(25);
  const DecoherenceModel model = random_qubit_model(14, rng);
  const BranchEnsemble ens = branch_ensemble(model, 0.5);
  const FragmentMetrics m = evaluate_fragment(model, ens, Fragment::all(14));
  CHECK(std::isnan(m.chi));
  const FragmentMetrics small = evaluate_fragment(model, ens, Fragment::first(3));
  CHECK_FALSE(std::isnan(small.chi));
  CHECK_FALSE(std::isnan(small.mutual_information));

  FragmentSampler few;
  few.mode = FragmentSampler::Mode::monte_carlo;
  few.samples = 3;
  const RedundancyResult r = redundancy(model, branch_ensemble(model, 0.05), 0.1, few);
  CHECK(r.status == RedundancyStatus::beyond_cap);
  CHECK(r.m_delta == 0);
  CHECK(std::isnan(r.probes.back().chi_mean));
}

}  // TEST_SUITE
