// info.hpp - information carried by environment fragments about the pointer observable.
//
// Entropies and information quantities are in bits. Error probabilities are for
// discriminating the two conditional fragment states rho_F|1, rho_F|2 with the
// pointer probabilities as priors.

#pragma once

#include "qdarwin/model.hpp"
#include "qdarwin/sampler.hpp"

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qdarwin {

// Dense fragment cap for conditional-state computations (dimension of F).
inline constexpr Eigen::Index kFragmentDenseCap = Eigen::Index{1} << 12;

// Shannon entropy of the pointer distribution, H(Pi_S).
double pointer_entropy(std::span<const double> priors);

// Entropy (bits) of p1 |a><a| + p2 |b><b| for unit vectors with |<a|b>|^2 = overlap_sq.
double two_branch_mixture_entropy(double p1, double p2, double overlap_sq);

// Work budget for the symmetric-block path, in units of cubed block dimension.
inline constexpr double kSymmetricBlockBudget = 2.5e8;

// Copies of one qubit slot inside F share a symmetric structure: rho^(x)n is block diagonal with
// blocks det(rho)^k Sym^(n-2k)(rho), each repeated C(n,k) - C(n,k-1) times. The *_symmetric
// functions evaluate exactly on those blocks; other slots enter as plain tensor factors.
double symmetric_block_cost(const BranchEnsemble& ensemble, const Fragment& fragment);
// True when the block path is within budget and cheaper than the dense one; `factor` scales the
// work per block (D_S^3 for operators on S (x) F).
bool prefer_symmetric_blocks(const BranchEnsemble& ensemble, const Fragment& fragment, double factor = 1.0);

// Holevo quantity chi(Pi_S : F).
double holevo_dense(const BranchEnsemble& ensemble, const Fragment& fragment, std::span<const double> priors,
                    Eigen::Index max_dim = kFragmentDenseCap);
double holevo_pure_branches(const BranchEnsemble& ensemble, const Fragment& fragment,
                            std::span<const double> priors);
double holevo_symmetric(const BranchEnsemble& ensemble, const Fragment& fragment, std::span<const double> priors);
// Closed form when the branches are pure and D_S = 2, symmetric blocks when they pay off, dense otherwise.
double holevo(const BranchEnsemble& ensemble, const Fragment& fragment, std::span<const double> priors);

// I(S:F) = H_S + H_F - H_SF, with H_S the entropy of the reduced system state.
double mutual_information_dense(const DecoherenceModel& model, const BranchEnsemble& ensemble,
                                const Fragment& fragment);
double mutual_information_symmetric(const DecoherenceModel& model, const BranchEnsemble& ensemble,
                                    const Fragment& fragment);
// Closed form valid when rho_S(0) and every rho_k(0) are pure and D_S = 2.
double mutual_information_pure_global(const DecoherenceModel& model, const BranchEnsemble& ensemble,
                                      const Fragment& fragment);
double mutual_information(const DecoherenceModel& model, const BranchEnsemble& ensemble, const Fragment& fragment);
double mutual_information(const DecoherenceModel& model, const Fragment& fragment, double t);

// Helstrom error (1 - ||p1 rho_F|1 - p2 rho_F|2||_1) / 2; D_S = 2 only.
double helstrom_error_dense(const BranchEnsemble& ensemble, const Fragment& fragment, std::span<const double> priors,
                            Eigen::Index max_dim = kFragmentDenseCap);
double helstrom_error_pure_branches(const BranchEnsemble& ensemble, const Fragment& fragment,
                                    std::span<const double> priors);
double helstrom_error_symmetric(const BranchEnsemble& ensemble, const Fragment& fragment,
                                std::span<const double> priors);
double helstrom_error(const BranchEnsemble& ensemble, const Fragment& fragment, std::span<const double> priors);

// p1^c p2^(1-c) prod_{k in F} tr[rho_k|1^c rho_k|2^(1-c)].
double pe_star_bound(const BranchEnsemble& ensemble, const Fragment& fragment, std::span<const double> priors,
                     double c);
// Same product from precomputed per-slot overlaps (see slot_chernoff_overlaps).
double pe_star_bound(const BranchEnsemble& ensemble, const Fragment& fragment, std::span<const double> priors,
                     double c, std::span<const double> slot_overlaps);

// max(0, H_S - H(P_e)) for D_S = 2.
double fano_lower_bound(double pe, double system_entropy_bits);

// H([1 - sqrt(F(rho_F|1, rho_F|2))]/2), asserted for equal priors only.
double fidelity_upper_bound(const BranchEnsemble& ensemble, const Fragment& fragment, std::span<const double> priors);

enum class Metric { holevo, mutual_information, helstrom, pe_star, fano_lower, fidelity_upper };

std::string metric_name(Metric m);

// Every metric on one fragment. Quantities whose paths are unavailable
// (dense cap exceeded, unequal priors for the fidelity bound) are NaN.
struct FragmentMetrics {
  double chi = std::numeric_limits<double>::quiet_NaN();
  double mutual_information = std::numeric_limits<double>::quiet_NaN();
  double pe = std::numeric_limits<double>::quiet_NaN();
  double fano_lower = std::numeric_limits<double>::quiet_NaN();
  double fidelity_upper = std::numeric_limits<double>::quiet_NaN();
};

FragmentMetrics evaluate_fragment(const DecoherenceModel& model, const BranchEnsemble& ensemble,
                                  const Fragment& fragment, bool with_mutual_information = true);

struct Average {
  double mean = 0.0;
  double stderr_mean = 0.0;  // sample standard deviation / sqrt(N); 0 for exact averages
  std::size_t count = 0;
};

// Mean over `values` in index order.
Average summarize(std::span<const double> values, bool exact);

Average fragment_average(const DecoherenceModel& model, const BranchEnsemble& ensemble, std::size_t m, Metric metric,
                         const FragmentSampler& sampler, double c = 0.5);
Average fragment_average(const DecoherenceModel& model, double t, std::size_t m, Metric metric,
                         const FragmentSampler& sampler, double c = 0.5);

struct InformationRow {
  std::size_t m = 0;
  double chi_mean = 0.0;
  double chi_stderr = 0.0;
  double mi_mean = std::numeric_limits<double>::quiet_NaN();
  double pe_mean = std::numeric_limits<double>::quiet_NaN();
  double fano_lower = std::numeric_limits<double>::quiet_NaN();
  double fidelity_upper = std::numeric_limits<double>::quiet_NaN();
};

// One row per requested fragment size, all metrics averaged over the same fragments.
std::vector<InformationRow> partial_information(const DecoherenceModel& model, const BranchEnsemble& ensemble,
                                                const std::vector<std::size_t>& sizes,
                                                const FragmentSampler& sampler, bool with_mutual_information = true);

// beyond_cap: chi stayed below target up to a size that could not be evaluated.
enum class RedundancyStatus { ok, insufficient_information, beyond_cap };

struct RedundancyResult {
  double delta = 0.0;
  double target_bits = 0.0;                   // (1 - delta) H_S
  std::size_t m_delta = 0;                    // 0 when no fragment suffices
  double redundancy = 0.0;                    // N / m_delta
  double interpolated_m = std::numeric_limits<double>::quiet_NaN();  // auxiliary, linear between m_delta-1 and m_delta
  RedundancyStatus status = RedundancyStatus::insufficient_information;
  std::vector<InformationRow> probes;         // chi at every size evaluated by the search
};

struct InformationReport {
  double time = 0.0;
  double system_entropy_bits = 0.0;
  std::vector<InformationRow> rows;
  std::vector<RedundancyResult> redundancy;
};

// Smallest m with <chi>_m >= (1 - delta) H_S, by doubling then bisection and a
// final linear scan.
RedundancyResult redundancy(const DecoherenceModel& model, const BranchEnsemble& ensemble, double delta,
                            const FragmentSampler& sampler);

}  // namespace qdarwin
