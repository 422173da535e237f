#include "qdarwin/info.hpp"

#include "qdarwin/chernoff.hpp"
#include "qdarwin/errors.hpp"
#include "qdarwin/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

namespace qdarwin {

namespace {

constexpr double kPriorTieTol = 1e-12;

void require_two_branches(const BranchEnsemble& e, const char* what) {
  if (e.system_dim() != 2) throw UnsupportedPathError(std::string(what) + ": requires a two-dimensional system");
}

void require_priors(const BranchEnsemble& e, std::span<const double> priors) {
  if (static_cast<int>(priors.size()) != e.system_dim()) throw InputError("priors: length must equal system dimension");
}

void require_pure(const BranchEnsemble& e, const char* what) {
  require_two_branches(e, what);
  if (!e.pure_subsystems()) {
    throw UnsupportedPathError(std::string(what) + ": environment initial states are mixed; use the dense path");
  }
}

// |Lambda_F|^2 = prod_{k in F} |lambda_k^{12}|^2.
double branch_overlap_sq(const BranchEnsemble& e, const Fragment& f) {
  double g = 1.0;
  for (std::size_t k : f.indices) g *= std::norm(e.overlap(k, 0, 1));
  return std::min(g, 1.0);
}

Eigen::Index fragment_dim(const BranchEnsemble& e, const Fragment& f, Eigen::Index max_dim, const char* what) {
  Eigen::Index d = 1;
  for (std::size_t k : f.indices) {
    d *= e.subsystem(k).conditional.front().rows();
    if (d > max_dim) {
      throw ResourceError(std::string(what) + ": fragment dimension exceeds dense cap " + std::to_string(max_dim));
    }
  }
  return d;
}

double dense_cost(const BranchEnsemble& e, const Fragment& f) {
  double d = 1.0;
  for (std::size_t k : f.indices) d *= static_cast<double>(e.subsystem(k).conditional.front().rows());
  return d * d * d;
}

// Restricts `target` to the numerical support of the PSD matrix `support` when that support is
// small; the nonzero spectrum is unchanged as long as range(target) lies inside it.
ComplexMatrix on_support(const ComplexMatrix& support, const ComplexMatrix& target) {
  constexpr Eigen::Index kMinCompress = 64;
  if (support.rows() < kMinCompress) return target;
  const auto basis = psd_range_basis(support, support.rows() / 4);
  if (!basis) return target;
  const ComplexMatrix reduced = basis->adjoint() * target * *basis;
  return 0.5 * (reduced + reduced.adjoint());
}

std::map<std::size_t, int> slot_counts(const BranchEnsemble& e, const Fragment& f) {
  std::map<std::size_t, int> counts;
  for (std::size_t k : f.indices) ++counts[e.slot_of(k)];
  return counts;
}

// Sym^n(v) on the orthonormal Dicke basis for every n <= top with the parity of top. Built by
// multiplying the degree n-1 polynomial map by one linear factor, so it is a homomorphism in v.
std::vector<ComplexMatrix> symmetric_powers(const ComplexMatrix& v, int top) {
  std::vector<ComplexMatrix> keep;
  ComplexMatrix prev = ComplexMatrix::Ones(1, 1);
  if (top % 2 == 0) keep.push_back(prev);
  for (int n = 1; n <= top; ++n) {
    ComplexMatrix next(n + 1, n + 1);
    for (int k = 0; k < n; ++k) {
      const double norm = 1.0 / std::sqrt(static_cast<double>(n - k));
      for (int i = 0; i <= n; ++i) {
        Complex acc = 0.0;
        if (i < n) acc += v(0, 0) * std::sqrt(static_cast<double>(n - i)) * prev(i, k);
        if (i > 0) acc += v(1, 0) * std::sqrt(static_cast<double>(i)) * prev(i - 1, k);
        next(i, k) = acc * norm;
      }
    }
    for (int i = 0; i <= n; ++i) {
      Complex acc = 0.0;
      if (i < n) acc += v(0, 1) * std::sqrt(static_cast<double>(n - i) / n) * prev(i, n - 1);
      if (i > 0) acc += v(1, 1) * std::sqrt(static_cast<double>(i) / n) * prev(i - 1, n - 1);
      next(i, n) = acc;
    }
    prev = std::move(next);
    if ((top - n) % 2 == 0) keep.push_back(prev);
  }
  std::reverse(keep.begin(), keep.end());  // keep[k] has degree top - 2k
  return keep;
}

// One branch-pair term sum coeff |s><s'| (x) (x)_k X_k^{ss'}, with X_k^{ss'} = U_k^s rho_k(0) U_k^{s'}^dag.
struct PairTerm {
  int s = 0;
  int sp = 0;
  Complex coeff{1.0, 0.0};
};

struct Irrep {
  double log_mult = 0.0;
  std::vector<ComplexMatrix> block;  // per term
  std::vector<Complex> log_scale;    // per term: k ln det X, real part -inf when det X = 0
};

ComplexMatrix pair_operator(const BranchEnsemble& e, const DecoherenceModel* model, std::size_t slot, int s, int sp) {
  const SubsystemBranches& b = e.slot(slot);
  if (s == sp) return b.conditional[static_cast<std::size_t>(s)];
  return b.propagators[static_cast<std::size_t>(s)] * model->slot_spec(slot).initial_state *
         b.propagators[static_cast<std::size_t>(sp)].adjoint();
}

std::vector<std::vector<Irrep>> fragment_irreps(const BranchEnsemble& e, const DecoherenceModel* model,
                                                const Fragment& f, std::span<const PairTerm> terms) {
  std::vector<std::vector<Irrep>> groups;
  for (const auto& [slot, count] : slot_counts(e, f)) {
    if (e.slot(slot).conditional.front().rows() != 2) {
      Irrep r;
      for (const PairTerm& t : terms) {
        r.block.push_back(pair_operator(e, model, slot, t.s, t.sp));
        r.log_scale.emplace_back(0.0, 0.0);
      }
      for (int c = 0; c < count; ++c) groups.push_back({r});
      continue;
    }
    std::vector<Irrep> group(static_cast<std::size_t>(count / 2 + 1));
    for (int k = 0; k <= count / 2; ++k) {
      // C(n,k) - C(n,k-1) = C(n,k) (n - 2k + 1) / (n - k + 1)
      group[k].log_mult = std::lgamma(count + 1.0) - std::lgamma(k + 1.0) - std::lgamma(count - k + 1.0) +
                          std::log(count - 2.0 * k + 1.0) - std::log(count - k + 1.0);
    }
    for (const PairTerm& t : terms) {
      const ComplexMatrix x = pair_operator(e, model, slot, t.s, t.sp);
      Complex det = x(0, 0) * x(1, 1) - x(0, 1) * x(1, 0);
      if (t.s == t.sp) det = std::max(0.0, det.real());
      const Complex log_det = det == Complex{0.0, 0.0} ? Complex(-std::numeric_limits<double>::infinity(), 0.0)
                                                       : std::log(det);
      std::vector<ComplexMatrix> powers = symmetric_powers(x, count);
      for (int k = 0; k <= count / 2; ++k) {
        group[k].block.push_back(std::move(powers[static_cast<std::size_t>(k)]));
        group[k].log_scale.push_back(k == 0 ? Complex{0.0, 0.0} : static_cast<double>(k) * log_det);
      }
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

// Visits every block of the operator: fn(scaled block, log multiplicity). The scaled block holds one
// representative times the multiplicity; `grid` places term (s, s') at block position (s, s').
template <class Fn>
void for_each_block(const std::vector<std::vector<Irrep>>& groups, std::span<const PairTerm> terms, int ds,
                    bool grid, Fn&& fn) {
  std::vector<std::size_t> pick(groups.size(), 0);
  std::vector<ComplexMatrix> factors(groups.size());
  while (true) {
    double log_mult = 0.0;
    Eigen::Index dim = 1;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      log_mult += groups[g][pick[g]].log_mult;
      dim *= groups[g][pick[g]].block.front().rows();
    }
    const Eigen::Index side = grid ? dim * ds : dim;
    ComplexMatrix scaled = ComplexMatrix::Zero(side, side);
    for (std::size_t i = 0; i < terms.size(); ++i) {
      Complex scale{log_mult, 0.0};
      for (std::size_t g = 0; g < groups.size(); ++g) {
        scale += groups[g][pick[g]].log_scale[i];
        factors[g] = groups[g][pick[g]].block[i];
      }
      if (terms[i].coeff == Complex{0.0, 0.0} || !std::isfinite(scale.real())) continue;
      const Complex w = terms[i].coeff * std::exp(scale);
      if (grid) {
        scaled.block(terms[i].s * dim, terms[i].sp * dim, dim, dim) += w * tensor_product(factors);
      } else {
        scaled += w * tensor_product(factors);
      }
    }
    fn(ComplexMatrix(0.5 * (scaled + scaled.adjoint())), log_mult);
    std::size_t g = 0;
    while (g < groups.size() && ++pick[g] == groups[g].size()) pick[g++] = 0;
    if (g == groups.size()) break;
  }
}

// Entropy in nats of the block-diagonal operator. Eigenvalues nu of a scaled block stand for mult
// copies of nu / mult: -mult (nu/mult) ln(nu/mult) = -nu ln nu + nu ln mult.
double block_entropy_nats(const std::vector<std::vector<Irrep>>& groups, std::span<const PairTerm> terms, int ds,
                          bool grid) {
  double h = 0.0;
  for_each_block(groups, terms, ds, grid, [&](const ComplexMatrix& scaled, double log_mult) {
    for (double v : hermitian_eigenvalues(scaled)) {
      if (v > 0.0) h += -v * std::log(v) + v * log_mult;
    }
  });
  return h;
}

std::vector<PairTerm> diagonal_terms(std::span<const double> priors) {
  std::vector<PairTerm> terms;
  for (std::size_t s = 0; s < priors.size(); ++s) {
    terms.push_back({static_cast<int>(s), static_cast<int>(s), Complex{priors[s], 0.0}});
  }
  return terms;
}

void check_block_budget(const BranchEnsemble& e, const Fragment& f, double factor, const char* what) {
  check_fragment(f, e.environment_size());
  if (f.indices.empty()) throw InputError(std::string(what) + ": fragment is empty");
  if (factor * symmetric_block_cost(e, f) > kSymmetricBlockBudget) {
    throw ResourceError(std::string(what) + ": block work exceeds budget");
  }
}

double conditional_entropy_sum(const BranchEnsemble& e, const Fragment& f, std::span<const double> priors) {
  double conditional = 0.0;
  for (int s = 0; s < e.system_dim(); ++s) {
    if (priors[s] <= 0.0) continue;
    // H of a product state is the sum of the factor entropies.
    double hs = 0.0;
    for (std::size_t k : f.indices) hs += von_neumann_entropy(e.subsystem(k).conditional[s]);
    conditional += priors[s] * hs;
  }
  return conditional;
}

}  // namespace

double symmetric_block_cost(const BranchEnsemble& ensemble, const Fragment& fragment) {
  double cost = 1.0;
  for (const auto& [slot, count] : slot_counts(ensemble, fragment)) {
    const auto d = static_cast<double>(ensemble.slot(slot).conditional.front().rows());
    if (d != 2.0) {
      cost *= std::pow(d * d * d, count);
      continue;
    }
    double group = 0.0;
    for (int k = 0; k <= count / 2; ++k) group += std::pow(count - 2.0 * k + 1.0, 3);
    cost *= group;
  }
  return cost;
}

bool prefer_symmetric_blocks(const BranchEnsemble& ensemble, const Fragment& fragment, double factor) {
  if (fragment.indices.empty()) return false;
  const double cost = symmetric_block_cost(ensemble, fragment);
  return factor * cost <= kSymmetricBlockBudget && cost < dense_cost(ensemble, fragment);
}

double holevo_symmetric(const BranchEnsemble& ensemble, const Fragment& fragment, std::span<const double> priors) {
  require_priors(ensemble, priors);
  check_block_budget(ensemble, fragment, 1.0, "holevo_symmetric");
  const std::vector<PairTerm> terms = diagonal_terms(priors);
  const double mixture = block_entropy_nats(fragment_irreps(ensemble, nullptr, fragment, terms), terms,
                                            ensemble.system_dim(), false);
  const double chi = mixture / std::numbers::ln2 - conditional_entropy_sum(ensemble, fragment, priors);
  return std::clamp(chi, 0.0, std::log2(static_cast<double>(ensemble.system_dim())));
}

double pointer_entropy(std::span<const double> priors) {
  double h = 0.0;
  for (double p : priors) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

double two_branch_mixture_entropy(double p1, double p2, double overlap_sq) {
  const double q = std::clamp(1.0 - overlap_sq, 0.0, 1.0);
  const double prod = p1 * p2;
  const double disc = std::sqrt(std::max(0.0, 1.0 - 4.0 * prod * q));
  const double low = 2.0 * prod * q / (1.0 + disc);
  if (low <= 0.0) return 0.0;
  const double high = 1.0 - low;
  return -low * std::log2(low) - high * std::log1p(-low) / std::numbers::ln2;
}

double holevo_pure_branches(const BranchEnsemble& ensemble, const Fragment& fragment, std::span<const double> priors) {
  require_pure(ensemble, "holevo_pure_branches");
  require_priors(ensemble, priors);
  check_fragment(fragment, ensemble.environment_size());
  return two_branch_mixture_entropy(priors[0], priors[1], branch_overlap_sq(ensemble, fragment));
}

double holevo_dense(const BranchEnsemble& ensemble, const Fragment& fragment, std::span<const double> priors,
                    Eigen::Index max_dim) {
  require_priors(ensemble, priors);
  check_fragment(fragment, ensemble.environment_size());
  const Eigen::Index d = fragment_dim(ensemble, fragment, max_dim, "holevo_dense");
  const int ds = ensemble.system_dim();

  ComplexMatrix mixture = ComplexMatrix::Zero(d, d);
  for (int s = 0; s < ds; ++s) {
    if (priors[s] > 0.0) mixture += priors[s] * conditional_fragment_state(ensemble, fragment, s, max_dim);
  }
  const double chi =
      von_neumann_entropy(on_support(mixture, mixture)) - conditional_entropy_sum(ensemble, fragment, priors);
  return std::clamp(chi, 0.0, std::log2(static_cast<double>(ds)));
}

double holevo(const BranchEnsemble& ensemble, const Fragment& fragment, std::span<const double> priors) {
  if (ensemble.system_dim() == 2 && ensemble.pure_subsystems()) return holevo_pure_branches(ensemble, fragment, priors);
  if (prefer_symmetric_blocks(ensemble, fragment)) return holevo_symmetric(ensemble, fragment, priors);
  return holevo_dense(ensemble, fragment, priors);
}

double mutual_information_dense(const DecoherenceModel& model, const BranchEnsemble& ensemble,
                                const Fragment& fragment) {
  const ComplexMatrix joint = joint_state_dense(model, ensemble, fragment);
  const int ds = model.pointer().dim();
  const int df = static_cast<int>(joint.rows()) / ds;
  const int dims[] = {ds, df};
  const int keep_s[] = {0};
  const int keep_f[] = {1};
  const double hs = von_neumann_entropy(partial_trace(joint, dims, keep_s));
  const ComplexMatrix rho_f = partial_trace(joint, dims, keep_f);
  const double hf = von_neumann_entropy(on_support(rho_f, rho_f));
  const double hsf = von_neumann_entropy(on_support(joint, joint));
  return std::max(0.0, hs + hf - hsf);
}

double mutual_information_symmetric(const DecoherenceModel& model, const BranchEnsemble& ensemble,
                                    const Fragment& fragment) {
  const PointerSpec& p = model.pointer();
  const int ds = p.dim();
  check_block_budget(ensemble, fragment, static_cast<double>(ds) * ds * ds, "mutual_information_symmetric");
  const Fragment rest = complement(fragment, model.environment_size());
  const double t = ensemble.time();
  std::vector<PairTerm> joint;
  std::vector<PairTerm> marginal;
  ComplexMatrix system = ComplexMatrix::Zero(ds, ds);
  for (int s = 0; s < ds; ++s) {
    marginal.push_back({s, s, Complex{p.initial_state(s, s).real(), 0.0}});
    for (int sp = 0; sp < ds; ++sp) {
      const Complex rho_s = p.initial_state(s, sp);
      if (rho_s == Complex{0.0, 0.0}) continue;
      const Complex coeff = rho_s * std::polar(1.0, -(p.phases[s] - p.phases[sp]) * t) *
                            decoherence_factor(ensemble, rest, s, sp);
      joint.push_back({s, sp, coeff});
      system(s, sp) = coeff * decoherence_factor(ensemble, fragment, s, sp);
    }
  }
  const double hs = von_neumann_entropy(ComplexMatrix(0.5 * (system + system.adjoint())));
  const double hf = block_entropy_nats(fragment_irreps(ensemble, &model, fragment, marginal), marginal, ds, false);
  const double hsf = block_entropy_nats(fragment_irreps(ensemble, &model, fragment, joint), joint, ds, true);
  return std::max(0.0, hs + (hf - hsf) / std::numbers::ln2);
}

double mutual_information_pure_global(const DecoherenceModel& model, const BranchEnsemble& ensemble,
                                      const Fragment& fragment) {
  require_pure(ensemble, "mutual_information_pure_global");
  if (!model.pure_system()) {
    throw UnsupportedPathError("mutual_information_pure_global: initial system state is mixed; use the dense path");
  }
  const auto& p = model.pointer().probabilities;
  const double in_fragment = branch_overlap_sq(ensemble, fragment);
  const double outside = branch_overlap_sq(ensemble, complement(fragment, ensemble.environment_size()));
  // Global state is pure, so H_SF equals the entropy of the complement E\F.
  const double hs = two_branch_mixture_entropy(p[0], p[1], in_fragment * outside);
  const double hf = two_branch_mixture_entropy(p[0], p[1], in_fragment);
  const double hsf = two_branch_mixture_entropy(p[0], p[1], outside);
  return std::max(0.0, hs + hf - hsf);
}

double mutual_information(const DecoherenceModel& model, const BranchEnsemble& ensemble, const Fragment& fragment) {
  if (model.pointer().dim() == 2 && model.pure_subsystems() && model.pure_system()) {
    return mutual_information_pure_global(model, ensemble, fragment);
  }
  const double ds = model.pointer().dim();
  if (prefer_symmetric_blocks(ensemble, fragment, ds * ds * ds)) {
    return mutual_information_symmetric(model, ensemble, fragment);
  }
  return mutual_information_dense(model, ensemble, fragment);
}

double mutual_information(const DecoherenceModel& model, const Fragment& fragment, double t) {
  return mutual_information(model, branch_ensemble(model, t), fragment);
}

double helstrom_error_dense(const BranchEnsemble& ensemble, const Fragment& fragment, std::span<const double> priors,
                            Eigen::Index max_dim) {
  require_two_branches(ensemble, "helstrom_error");
  require_priors(ensemble, priors);
  check_fragment(fragment, ensemble.environment_size());
  fragment_dim(ensemble, fragment, max_dim, "helstrom_error_dense");
  const ComplexMatrix a = priors[0] * conditional_fragment_state(ensemble, fragment, 0, max_dim);
  const ComplexMatrix b = priors[1] * conditional_fragment_state(ensemble, fragment, 1, max_dim);
  return std::clamp(0.5 * (1.0 - trace_norm(on_support(a + b, a - b))), 0.0, 0.5);
}

double helstrom_error_pure_branches(const BranchEnsemble& ensemble, const Fragment& fragment,
                                    std::span<const double> priors) {
  require_pure(ensemble, "helstrom_error_pure_branches");
  require_priors(ensemble, priors);
  check_fragment(fragment, ensemble.environment_size());
  const double x = 4.0 * priors[0] * priors[1] * branch_overlap_sq(ensemble, fragment);
  // (1 - sqrt(1 - x)) / 2 without cancellation.
  return 0.5 * x / (1.0 + std::sqrt(std::max(0.0, 1.0 - x)));
}

double helstrom_error_symmetric(const BranchEnsemble& ensemble, const Fragment& fragment,
                                std::span<const double> priors) {
  require_two_branches(ensemble, "helstrom_error_symmetric");
  require_priors(ensemble, priors);
  check_block_budget(ensemble, fragment, 1.0, "helstrom_error_symmetric");
  const PairTerm terms[] = {{0, 0, Complex{priors[0], 0.0}}, {1, 1, Complex{-priors[1], 0.0}}};
  double norm = 0.0;
  for_each_block(fragment_irreps(ensemble, nullptr, fragment, terms), terms, 2, false,
                 [&](const ComplexMatrix& scaled, double) { norm += hermitian_eigenvalues(scaled).cwiseAbs().sum(); });
  return std::clamp(0.5 * (1.0 - norm), 0.0, 0.5);
}

double helstrom_error(const BranchEnsemble& ensemble, const Fragment& fragment, std::span<const double> priors) {
  if (ensemble.system_dim() == 2 && ensemble.pure_subsystems()) {
    return helstrom_error_pure_branches(ensemble, fragment, priors);
  }
  if (prefer_symmetric_blocks(ensemble, fragment)) return helstrom_error_symmetric(ensemble, fragment, priors);
  return helstrom_error_dense(ensemble, fragment, priors);
}

double pe_star_bound(const BranchEnsemble& ensemble, const Fragment& fragment, std::span<const double> priors,
                     double c, std::span<const double> slot_overlaps) {
  require_two_branches(ensemble, "pe_star_bound");
  require_priors(ensemble, priors);
  if (!(c > 0.0 && c < 1.0)) throw InputError("pe_star_bound: c must lie in (0, 1)");
  check_fragment(fragment, ensemble.environment_size());
  double bound = std::pow(priors[0], c) * std::pow(priors[1], 1.0 - c);
  for (std::size_t k : fragment.indices) bound *= slot_overlaps[ensemble.slot_of(k)];
  return bound;
}

double pe_star_bound(const BranchEnsemble& ensemble, const Fragment& fragment, std::span<const double> priors,
                     double c) {
  require_two_branches(ensemble, "pe_star_bound");
  if (!(c > 0.0 && c < 1.0)) throw InputError("pe_star_bound: c must lie in (0, 1)");
  const std::vector<double> overlaps = slot_chernoff_overlaps(ensemble, c);
  return pe_star_bound(ensemble, fragment, priors, c, overlaps);
}

double fano_lower_bound(double pe, double system_entropy_bits) {
  if (!(pe >= 0.0 && pe <= 0.5)) throw InputError("fano_lower_bound: error probability must lie in [0, 1/2]");
  return std::max(0.0, system_entropy_bits - binary_entropy(pe));
}

double fidelity_upper_bound(const BranchEnsemble& ensemble, const Fragment& fragment, std::span<const double> priors) {
  require_two_branches(ensemble, "fidelity_upper_bound");
  require_priors(ensemble, priors);
  if (std::abs(priors[0] - priors[1]) > kPriorTieTol) {
    throw UnsupportedPathError("fidelity_upper_bound: only asserted for equal priors");
  }
  check_fragment(fragment, ensemble.environment_size());
  double root_fidelity = 1.0;
  if (ensemble.pure_subsystems()) {
    root_fidelity = std::sqrt(branch_overlap_sq(ensemble, fragment));
  } else {
    // Root fidelity is multiplicative over tensor products.
    std::map<std::size_t, double> per_slot;
    for (std::size_t k : fragment.indices) {
      const std::size_t slot = ensemble.slot_of(k);
      auto it = per_slot.find(slot);
      if (it == per_slot.end()) {
        const auto& b = ensemble.slot(slot);
        it = per_slot.emplace(slot, std::sqrt(fidelity(b.conditional[0], b.conditional[1]))).first;
      }
      root_fidelity *= it->second;
    }
  }
  return binary_entropy(0.5 * (1.0 - std::min(root_fidelity, 1.0)));
}

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::holevo: return "chi";
    case Metric::mutual_information: return "mutual_information";
    case Metric::helstrom: return "helstrom_error";
    case Metric::pe_star: return "pe_star";
    case Metric::fano_lower: return "fano_lower";
    case Metric::fidelity_upper: return "fidelity_upper";
  }
  return "unknown";
}

FragmentMetrics evaluate_fragment(const DecoherenceModel& model, const BranchEnsemble& ensemble,
                                  const Fragment& fragment, bool with_mutual_information) {
  const auto& priors = ensemble.pointer().probabilities;
  FragmentMetrics out;
  // Each quantity falls back to NaN on its own when its dense path is over the cap.
  auto guarded = [](double& slot, const auto& compute) {
    try {
      slot = compute();
    } catch (const ResourceError&) {
    }
  };
  guarded(out.chi, [&] { return holevo(ensemble, fragment, priors); });
  if (ensemble.system_dim() == 2) {
    guarded(out.pe, [&] { return helstrom_error(ensemble, fragment, priors); });
    if (!std::isnan(out.pe)) out.fano_lower = fano_lower_bound(out.pe, pointer_entropy(priors));
    if (std::abs(priors[0] - priors[1]) <= kPriorTieTol) {
      guarded(out.fidelity_upper, [&] { return fidelity_upper_bound(ensemble, fragment, priors); });
    }
  }
  if (with_mutual_information) {
    guarded(out.mutual_information, [&] { return mutual_information(model, ensemble, fragment); });
  }
  return out;
}

Average summarize(std::span<const double> values, bool exact) {
  Average a;
  a.count = values.size();
  if (values.empty()) return a;
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(values.size());
  if (!exact && values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    const double n = static_cast<double>(values.size());
    a.stderr_mean = std::sqrt(ss / (n - 1.0) / n);
  }
  return a;
}

namespace {

bool exact_average(const FragmentSampler& sampler, std::size_t fragments) {
  return fragments == 1 || sampler.mode == FragmentSampler::Mode::exhaustive;
}

}  // namespace

Average fragment_average(const DecoherenceModel& model, const BranchEnsemble& ensemble, std::size_t m, Metric metric,
                         const FragmentSampler& sampler, double c) {
  const std::size_t n = ensemble.environment_size();
  const std::vector<Fragment> fragments = select_fragments(sampler, n, m, ensemble.time(), ensemble.is_iid());
  const auto& priors = ensemble.pointer().probabilities;
  const double hs = pointer_entropy(priors);
  std::vector<double> slot_overlaps;
  if (metric == Metric::pe_star) slot_overlaps = slot_chernoff_overlaps(ensemble, c);

  std::vector<double> values(fragments.size());
  parallel_for(fragments.size(), sampler.workers, [&](std::size_t i) {
    const Fragment& f = fragments[i];
    switch (metric) {
      case Metric::holevo: values[i] = holevo(ensemble, f, priors); break;
      case Metric::mutual_information: values[i] = mutual_information(model, ensemble, f); break;
      case Metric::helstrom: values[i] = helstrom_error(ensemble, f, priors); break;
      case Metric::pe_star: values[i] = pe_star_bound(ensemble, f, priors, c, slot_overlaps); break;
      case Metric::fano_lower: values[i] = fano_lower_bound(helstrom_error(ensemble, f, priors), hs); break;
      case Metric::fidelity_upper: values[i] = fidelity_upper_bound(ensemble, f, priors); break;
    }
  });
  return summarize(values, exact_average(sampler, fragments.size()));
}

Average fragment_average(const DecoherenceModel& model, double t, std::size_t m, Metric metric,
                         const FragmentSampler& sampler, double c) {
  return fragment_average(model, branch_ensemble(model, t), m, metric, sampler, c);
}

std::vector<InformationRow> partial_information(const DecoherenceModel& model, const BranchEnsemble& ensemble,
                                                const std::vector<std::size_t>& sizes,
                                                const FragmentSampler& sampler, bool with_mutual_information) {
  std::vector<InformationRow> rows;
  rows.reserve(sizes.size());
  for (std::size_t m : sizes) {
    const std::vector<Fragment> fragments =
        select_fragments(sampler, ensemble.environment_size(), m, ensemble.time(), ensemble.is_iid());
    std::vector<FragmentMetrics> values(fragments.size());
    parallel_for(fragments.size(), sampler.workers, [&](std::size_t i) {
      values[i] = evaluate_fragment(model, ensemble, fragments[i], with_mutual_information);
    });
    const bool exact = exact_average(sampler, fragments.size());
    auto column = [&](double FragmentMetrics::*field) {
      std::vector<double> v(values.size());
      for (std::size_t i = 0; i < values.size(); ++i) v[i] = values[i].*field;
      return summarize(v, exact);
    };
    InformationRow row;
    row.m = m;
    const Average chi = column(&FragmentMetrics::chi);
    row.chi_mean = chi.mean;
    row.chi_stderr = chi.stderr_mean;
    row.mi_mean = column(&FragmentMetrics::mutual_information).mean;
    row.pe_mean = column(&FragmentMetrics::pe).mean;
    row.fano_lower = column(&FragmentMetrics::fano_lower).mean;
    row.fidelity_upper = column(&FragmentMetrics::fidelity_upper).mean;
    rows.push_back(row);
  }
  return rows;
}

RedundancyResult redundancy(const DecoherenceModel& model, const BranchEnsemble& ensemble, double delta,
                            const FragmentSampler& sampler) {
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("redundancy: delta must lie in (0, 1)");
  const std::size_t n = ensemble.environment_size();
  RedundancyResult r;
  r.delta = delta;
  r.target_bits = (1.0 - delta) * pointer_entropy(ensemble.pointer().probabilities);

  std::map<std::size_t, double> probed;
  auto chi_at = [&](std::size_t m) {
    auto it = probed.find(m);
    if (it != probed.end()) return it->second;
    Average a;
    try {
      a = fragment_average(model, ensemble, m, Metric::holevo, sampler);
    } catch (const ResourceError&) {
      a.mean = a.stderr_mean = std::numeric_limits<double>::quiet_NaN();
    }
    InformationRow row;
    row.m = m;
    row.chi_mean = a.mean;
    row.chi_stderr = a.stderr_mean;
    r.probes.push_back(row);
    probed.emplace(m, a.mean);
    return a.mean;
  };
  auto passes = [&](std::size_t m) { return chi_at(m) >= r.target_bits; };

  std::size_t found = 0;
  bool beyond_cap = false;
  // Doubling stops at the first size that cannot be evaluated; cost only grows with m.
  std::size_t lo = 0;
  std::size_t hi = 1;
  while (true) {
    if (std::isnan(chi_at(hi))) {
      beyond_cap = true;
      break;
    }
    if (passes(hi)) break;
    if (hi == n) break;
    lo = hi;
    hi = std::min(n, hi * 2);
  }
  if (!beyond_cap && passes(hi)) {
    // Invariant: passes(hi) and !passes(lo), with lo = 0 meaning no fragment.
    while (hi - lo > 4) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (passes(mid)) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    found = hi;
    for (std::size_t m = lo + 1; m < hi; ++m) {
      if (passes(m)) {
        found = m;
        break;
      }
    }
  }
  std::sort(r.probes.begin(), r.probes.end(), [](const auto& a, const auto& b) { return a.m < b.m; });

  if (found == 0) {
    if (beyond_cap) r.status = RedundancyStatus::beyond_cap;
    return r;
  }
  r.status = RedundancyStatus::ok;
  r.m_delta = found;
  r.redundancy = static_cast<double>(n) / static_cast<double>(found);
  const double below = found == 1 ? 0.0 : chi_at(found - 1);
  const double above = chi_at(found);
  r.interpolated_m = above > below ? static_cast<double>(found - 1) + (r.target_bits - below) / (above - below)
                                   : static_cast<double>(found);
  std::sort(r.probes.begin(), r.probes.end(), [](const auto& a, const auto& b) { return a.m < b.m; });
  return r;
}

}  // namespace qdarwin
