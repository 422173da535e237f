// chernoff.hpp - quantum Chernoff overlaps and the typical Chernoff information.
//
// Entropies elsewhere in the library are in bits; every Chernoff exponent here
// is in nats.

#pragma once

#include "qdarwin/linalg.hpp"
#include "qdarwin/model.hpp"
#include "qdarwin/sampler.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace qdarwin {

// tr[a^c b^(1-c)] for c in (0, 1), clamped to [0, 1].
double chernoff_overlap(const ComplexMatrix& a, const ComplexMatrix& b, double c,
                        const Tolerances& tol = default_tolerances());
double chernoff_overlap(const DensityMatrix& a, const DensityMatrix& b, double c,
                        const Tolerances& tol = default_tolerances());

struct ScalarMinimum {
  double x;
  double value;
};

// Golden-section search for the minimum of a convex function on [lo, hi],
// stopping once the bracket is narrower than `tol`.
ScalarMinimum golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                                      double tol = 1e-6);

inline constexpr double kChernoffCMin = 1e-4;

struct ChernoffOptimum {
  double c;
  double value;
};

// min over c in [1e-4, 1 - 1e-4] of tr[a^c b^(1-c)]. When the objective is flat
// near the minimum (pure states, projectors, identical inputs) c = 1/2 is reported.
ChernoffOptimum min_chernoff_overlap(const ComplexMatrix& a, const ComplexMatrix& b);

// Per-slot overlaps tr[rho_k|1^c rho_k|2^(1-c)] of a two-branch ensemble, indexed by
// BranchEnsemble slot.
std::vector<double> slot_chernoff_overlaps(const BranchEnsemble& ensemble, double c);

struct TypicalChernoff {
  double c = 0.5;
  double mean_overlap = 1.0;          // <tr[rho_k|1^c rho_k|2^(1-c)]>_k
  double xi_nats = 0.0;               // -ln(mean_overlap)
  bool perfect_records = false;       // every overlap vanished; xi is +inf
};

// Average the per-subsystem overlaps over the whole environment first, then take
// -ln. With `c` empty a single c is chosen to maximize the result.
TypicalChernoff typical_chernoff_information(const BranchEnsemble& ensemble, std::optional<double> c = 0.5);

struct RedundancyEstimate {
  double value = 0.0;
  bool exceeds_environment = false;  // value > environment size
};

// N xi / ln(1/delta).
RedundancyEstimate redundancy_estimate(std::size_t environment_size, double xi_nats, double delta);

// Asymptotic efficiency bounds xi <= r <= 2 xi (nats).
struct EfficiencyBounds {
  double lower;
  double upper;
};
EfficiencyBounds efficiency_bounds(double xi_nats);

enum class ErrorMeasure { helstrom, chernoff_bound };

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;                // root-mean-square residual of the fit
  std::vector<std::size_t> used;        // fragment sizes entering the fit
  std::vector<std::size_t> excluded;    // sizes whose average error vanished
  std::vector<double> neg_log_error;    // -ln<P_e> at each used size
};

// Least-squares line through (m, -ln<P_e>_m). `c` is used by the Chernoff bound
// measure only.
ExponentFit empirical_error_exponent(const DecoherenceModel& model, const BranchEnsemble& ensemble,
                                     const std::vector<std::size_t>& sizes, const FragmentSampler& sampler,
                                     ErrorMeasure measure = ErrorMeasure::helstrom, double c = 0.5);

// Ordinary least squares y = slope x + intercept.
ExponentFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct ChernoffReport {
  double time = 0.0;
  std::vector<double> slot_overlaps;
  std::optional<double> c_star;
  TypicalChernoff typical;
  EfficiencyBounds bounds{0.0, 0.0};
  std::vector<std::pair<double, RedundancyEstimate>> estimates;  // (delta, R estimate)
  std::optional<ExponentFit> fit;
};

}  // namespace qdarwin
