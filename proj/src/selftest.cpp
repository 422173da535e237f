#include "qdarwin/selftest.hpp"

#include "qdarwin/chernoff.hpp"
#include "qdarwin/errors.hpp"
#include "qdarwin/info.hpp"
#include "qdarwin/photon.hpp"
#include "qdarwin/sampler.hpp"

#include <Eigen/QR>

#include <cmath>
#include <functional>
#include <sstream>

namespace qdarwin {

namespace {

constexpr double kSlack = 1e-9;

ComplexMatrix ginibre(int d, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexMatrix m(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const double re = g(rng);
      const double im = g(rng);
      m(i, j) = Complex(re, im);
    }
  }
  return m;
}

// Collects pass/fail over many checks, remembering the first failure.
class Suite {
 public:
  explicit Suite(std::string name) { result_.name = std::move(name); }

  void check(bool ok, const std::function<std::string()>& what) {
    ++result_.checks;
    if (!ok && failures_++ == 0) result_.detail = what();
  }

  SuiteResult finish() {
    result_.passed = failures_ == 0;
    if (!result_.passed) result_.detail += " (" + std::to_string(failures_) + " failures)";
    return result_;
  }

 private:
  SuiteResult result_;
  std::size_t failures_ = 0;
};

std::string describe(const char* what, double lhs, double rhs) {
  std::ostringstream s;
  s.precision(17);
  s << what << ": " << lhs << " vs " << rhs;
  return s.str();
}

SuiteResult partial_trace_suite(Rng& rng) {
  Suite suite("partial-trace");
  for (int trial = 0; trial < 20; ++trial) {
    const int da = 2 + trial % 3;
    const int db = 2 + trial % 2;
    const ComplexMatrix a = random_mixed_state(da, rng);
    const ComplexMatrix b = random_mixed_state(db, rng);
    const ComplexMatrix ab = tensor_product(a, b);
    const int dims[] = {da, db};
    const int keep_a[] = {0};
    const ComplexMatrix ra = partial_trace(ab, dims, keep_a);
    const double err = (ra - a).cwiseAbs().maxCoeff();
    suite.check(err < kSlack, [&] { return describe("tr_B(a x b) - a", err, 0.0); });
    const double s_ab = von_neumann_entropy(ab);
    const double s_sum = von_neumann_entropy(a) + von_neumann_entropy(b);
    suite.check(std::abs(s_ab - s_sum) < kSlack, [&] { return describe("S(a x b) additivity", s_ab, s_sum); });
  }
  return suite.finish();
}

SuiteResult bound_chain_suite(Rng& rng) {
  Suite suite("bound-chain");
  for (int trial = 0; trial < 6; ++trial) {
    const DecoherenceModel model = random_qubit_model(6, rng);
    const std::vector<double>& priors = model.pointer().probabilities;
    const double hs = pointer_entropy(priors);
    for (double t : {0.3, 1.1}) {
      const BranchEnsemble ens = branch_ensemble(model, t);
      for (std::size_t m = 1; m <= 3; ++m) {
        for (const Fragment& f : enumerate_fragments(6, m)) {
          const double chi = holevo(ens, f, priors);
          const double mi = mutual_information(model, ens, f);
          const double pe = helstrom_error(ens, f, priors);
          const double fano = fano_lower_bound(pe, hs);
          suite.check(fano <= chi + kSlack, [&] { return describe("Fano <= chi", fano, chi); });
          suite.check(chi <= mi + kSlack, [&] { return describe("chi <= I", chi, mi); });
          for (double c = 0.1; c < 0.95; c += 0.2) {
            const double bound = pe_star_bound(ens, f, priors, c);
            suite.check(pe <= bound + kSlack, [&] { return describe("P_e <= P_e*", pe, bound); });
          }
        }
      }
    }
  }
  return suite.finish();
}

SuiteResult operator_inequality_suite(Rng& rng) {
  Suite suite("operator-inequality");
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 2 + trial % 7;
    const ComplexMatrix a = random_psd(d, rng);
    const ComplexMatrix b = random_psd(d, rng);
    const double rhs = 0.5 * ((a + b).trace().real() - trace_norm(a - b));
    for (double c : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const double lhs = chernoff_overlap(a, b, c);
      suite.check(lhs >= rhs - kSlack, [&] { return describe("tr[A^c B^(1-c)] >= tr[A+B-|A-B|]/2", lhs, rhs); });
      const double swapped = chernoff_overlap(b, a, 1.0 - c);
      suite.check(std::abs(lhs - swapped) < 1e-10, [&] { return describe("c <-> 1-c symmetry", lhs, swapped); });
    }
  }
  return suite.finish();
}

SuiteResult closed_form_suite(Rng& rng) {
  Suite suite("closed-form-vs-dense");
  for (int trial = 0; trial < 3; ++trial) {
    const DecoherenceModel model = random_qubit_model(7, rng, true);
    const std::vector<double>& priors = model.pointer().probabilities;
    const BranchEnsemble ens = branch_ensemble(model, 0.4 + 0.5 * trial);
    for (std::size_t m = 1; m <= 4; ++m) {
      for (const Fragment& f : enumerate_fragments(7, m)) {
        const double a = holevo_pure_branches(ens, f, priors);
        const double b = holevo_dense(ens, f, priors);
        suite.check(std::abs(a - b) < kSlack, [&] { return describe("chi closed form vs dense", a, b); });
        const double pa = helstrom_error_pure_branches(ens, f, priors);
        const double pb = helstrom_error_dense(ens, f, priors);
        suite.check(std::abs(pa - pb) < kSlack, [&] { return describe("P_e closed form vs dense", pa, pb); });
        const double ia = mutual_information_pure_global(model, ens, f);
        const double ib = mutual_information_dense(model, ens, f);
        suite.check(std::abs(ia - ib) < kSlack, [&] { return describe("I closed form vs dense", ia, ib); });
      }
    }
  }
  return suite.finish();
}

SuiteResult photon_suite(Rng& rng) {
  Suite suite("photon-receptivity");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  {
    const SkyModel full(build_sky_partition(64), BlackbodySpectrum::planck(1.0, 8),
                        ScatteringKernel::small_angle(0.2, 0.5), Vec3::Zero(), Vec3(0.3, 0.0, 0.0));
    const double alpha = receptivity(full);
    suite.check(alpha == 0.0, [&] { return describe("alpha on the full sphere", alpha, 0.0); });
  }
  for (int trial = 0; trial < 6; ++trial) {
    SphericalCap cap;
    cap.axis = Vec3(u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5).normalized();
    cap.half_angle = 0.3 + 1.5 * u(rng);
    const SkyModel sky(build_sky_partition(96, cap), BlackbodySpectrum::planck(0.5 + u(rng), 8),
                       ScatteringKernel::small_angle(0.05 + 0.3 * u(rng), 0.3 + 0.5 * u(rng)), Vec3::Zero(),
                       Vec3(u(rng), u(rng), u(rng)));
    const double alpha = receptivity(sky);
    suite.check(alpha >= 0.0 && alpha <= 1.0, [&] { return describe("alpha in [0, 1]", alpha, 0.5); });
    const double overlap = photon_chernoff_overlap(sky);
    suite.check(overlap >= -kSlack && overlap <= 1.0 + kSlack,
                [&] { return describe("photon overlap in [0, 1]", overlap, 0.5); });
  }
  return suite.finish();
}

}  // namespace

ComplexMatrix random_hermitian(int d, Rng& rng, double scale) {
  const ComplexMatrix g = ginibre(d, rng);
  return 0.5 * scale * (g + g.adjoint());
}

ComplexMatrix random_unitary(int d, Rng& rng) {
  const Eigen::HouseholderQR<ComplexMatrix> qr(ginibre(d, rng));
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix r = qr.matrixQR();
  for (int j = 0; j < d; ++j) {
    const Complex diag = r(j, j);
    if (std::abs(diag) > 0.0) q.col(j) *= diag / std::abs(diag);
  }
  return q;
}

ComplexVector random_pure_vector(int d, Rng& rng) {
  ComplexVector v = ginibre(d, rng).col(0);
  return v / v.norm();
}

ComplexMatrix random_mixed_state(int d, Rng& rng) {
  const ComplexMatrix g = ginibre(d, rng);
  ComplexMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return 0.5 * (rho + rho.adjoint());
}

ComplexMatrix random_psd(int d, Rng& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::uniform_int_distribution<int> rank(1, d);
  const ComplexMatrix g = ginibre(d, rng).leftCols(rank(rng));
  ComplexMatrix a = g * g.adjoint();
  a *= u(rng) / a.trace().real();
  return 0.5 * (a + a.adjoint());
}

DecoherenceModel random_qubit_model(std::size_t n, Rng& rng, bool pure_only, bool coherent_system) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const PointerSpec pointer = PointerSpec::qubit(0.15 + 0.7 * u(rng), coherent_system);
  std::vector<SubsystemSpec> subs;
  for (std::size_t k = 0; k < n; ++k) {
    SubsystemSpec s;
    if (pure_only || u(rng) < 0.5) {
      const ComplexVector psi = random_pure_vector(2, rng);
      s.initial_state = psi * psi.adjoint();
    } else {
      s.initial_state = random_mixed_state(2, rng);
    }
    s.interaction = random_hermitian(2, rng);
    s.self_hamiltonian = random_hermitian(2, rng, 0.5);
    subs.push_back(std::move(s));
  }
  return DecoherenceModel::from_list(pointer, std::move(subs));
}

std::vector<SuiteResult> run_selftest(std::uint64_t seed) {
  std::vector<SuiteResult> out;
  const std::vector<std::function<SuiteResult(Rng&)>> suites = {
      partial_trace_suite, bound_chain_suite, operator_inequality_suite, closed_form_suite, photon_suite};
  for (std::size_t i = 0; i < suites.size(); ++i) {
    Rng rng(seed + 0x9e3779b97f4a7c15ULL * (i + 1));
    try {
      out.push_back(suites[i](rng));
    } catch (const std::exception& e) {
      SuiteResult r;
      r.name = "suite " + std::to_string(i);
      r.detail = std::string("threw: ") + e.what();
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace qdarwin
