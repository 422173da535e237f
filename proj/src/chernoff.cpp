#include "qdarwin/chernoff.hpp"

#include "qdarwin/errors.hpp"
#include "qdarwin/info.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace qdarwin {

namespace {

constexpr double kFlatTol = 1e-12;
constexpr double kImagTol = 1e-10;

// tr[a^c b^(1-c)] = sum_ij a_i^c b_j^(1-c) |<a_i|b_j>|^2 from one pair of spectra,
// for repeated evaluation in c.
class OverlapObjective {
 public:
  OverlapObjective(const ComplexMatrix& a, const ComplexMatrix& b, const Tolerances& tol = default_tolerances()) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw InputError("chernoff overlap: dimension mismatch");
    if (!is_hermitian(a, tol.hermitian) || !is_hermitian(b, tol.hermitian)) {
      throw InputError("chernoff overlap: operators must be Hermitian");
    }
    const Spectrum sa = hermitian_spectrum(a);
    const Spectrum sb = hermitian_spectrum(b);
    a_ = clip(sa.values, tol);
    b_ = clip(sb.values, tol);
    weights_ = (sa.vectors.adjoint() * sb.vectors).cwiseAbs2();
  }

  double operator()(double c) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < a_.size(); ++i) {
      if (a_[i] == 0.0) continue;
      const double ai = std::pow(a_[i], c);
      for (Eigen::Index j = 0; j < b_.size(); ++j) {
        if (b_[j] == 0.0) continue;
        s += ai * std::pow(b_[j], 1.0 - c) * weights_(i, j);
      }
    }
    return std::clamp(s, 0.0, 1.0);
  }

 private:
  static RealVector clip(const RealVector& v, const Tolerances& tol) {
    RealVector out = v;
    for (double& x : out) {
      if (x < -tol.psd) throw InputError("chernoff overlap: operator is not positive semidefinite");
      if (x <= tol.clip) x = 0.0;
    }
    return out;
  }

  RealVector a_;
  RealVector b_;
  Eigen::MatrixXd weights_;
};

// Golden-section minimum with the flat-objective tie-break to c = 1/2.
ChernoffOptimum optimize_c(const std::function<double(double)>& f) {
  const ScalarMinimum m = golden_section_minimize(f, kChernoffCMin, 1.0 - kChernoffCMin, 1e-7);
  const double half = f(0.5);
  if (half - m.value <= kFlatTol * std::max(1.0, std::abs(m.value))) return {0.5, half};
  return {m.x, m.value};
}

}  // namespace

double chernoff_overlap(const ComplexMatrix& a, const ComplexMatrix& b, double c, const Tolerances& tol) {
  if (!(c > 0.0 && c < 1.0)) throw InputError("chernoff_overlap: c must lie in (0, 1)");
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InputError("chernoff_overlap: dimension mismatch");
  const Complex tr = (fractional_power(a, c, tol) * fractional_power(b, 1.0 - c, tol)).trace();
  if (std::abs(tr.imag()) > kImagTol) throw NumericalError("chernoff_overlap: trace has an imaginary part");
  return std::clamp(tr.real(), 0.0, 1.0);
}

double chernoff_overlap(const DensityMatrix& a, const DensityMatrix& b, double c, const Tolerances& tol) {
  return chernoff_overlap(a.matrix(), b.matrix(), c, tol);
}

ScalarMinimum golden_section_minimize(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (!(lo < hi)) throw InputError("golden_section_minimize: empty interval");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > tol) {
    // Ties keep the left part so the first minimizer of a flat stretch wins.
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    }
  }
  const double x = 0.5 * (lo + hi);
  return {x, f(x)};
}

ChernoffOptimum min_chernoff_overlap(const ComplexMatrix& a, const ComplexMatrix& b) {
  const OverlapObjective objective(a, b);
  return optimize_c([&](double c) { return objective(c); });
}

std::vector<double> slot_chernoff_overlaps(const BranchEnsemble& ensemble, double c) {
  if (ensemble.system_dim() != 2) throw UnsupportedPathError("Chernoff overlaps need a two-dimensional system");
  std::vector<double> out(ensemble.slot_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& b = ensemble.slot(i);
    out[i] = chernoff_overlap(b.conditional[0], b.conditional[1], c);
  }
  return out;
}

namespace {

std::vector<std::size_t> slot_multiplicity(const BranchEnsemble& ensemble) {
  std::vector<std::size_t> mult(ensemble.slot_count(), 0);
  if (ensemble.slot_count() == 1) {
    mult[0] = ensemble.environment_size();
  } else {
    for (std::size_t k = 0; k < ensemble.environment_size(); ++k) ++mult[ensemble.slot_of(k)];
  }
  return mult;
}

double weighted_mean(const std::vector<double>& values, const std::vector<std::size_t>& mult, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += static_cast<double>(mult[i]) * values[i];
  return s / static_cast<double>(n);
}

}  // namespace

TypicalChernoff typical_chernoff_information(const BranchEnsemble& ensemble, std::optional<double> c) {
  if (ensemble.system_dim() != 2) throw UnsupportedPathError("typical Chernoff information needs two branches");
  const std::vector<std::size_t> mult = slot_multiplicity(ensemble);
  const std::size_t n = ensemble.environment_size();
  TypicalChernoff out;
  if (c) {
    if (!(*c > 0.0 && *c < 1.0)) throw InputError("typical_chernoff_information: c must lie in (0, 1)");
    out.c = *c;
    out.mean_overlap = weighted_mean(slot_chernoff_overlaps(ensemble, *c), mult, n);
  } else {
    std::vector<OverlapObjective> objectives;
    objectives.reserve(ensemble.slot_count());
    for (std::size_t i = 0; i < ensemble.slot_count(); ++i) {
      objectives.emplace_back(ensemble.slot(i).conditional[0], ensemble.slot(i).conditional[1]);
    }
    auto mean_at = [&](double x) {
      std::vector<double> v(objectives.size());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = objectives[i](x);
      return weighted_mean(v, mult, n);
    };
    const ChernoffOptimum opt = optimize_c(mean_at);
    out.c = opt.c;
    // Report the value through the reference path at the chosen c.
    out.mean_overlap = weighted_mean(slot_chernoff_overlaps(ensemble, opt.c), mult, n);
  }
  if (out.mean_overlap <= 0.0) {
    out.perfect_records = true;
    out.xi_nats = std::numeric_limits<double>::infinity();
  } else {
    out.xi_nats = std::max(0.0, -std::log(out.mean_overlap));
  }
  return out;
}

RedundancyEstimate redundancy_estimate(std::size_t environment_size, double xi_nats, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("redundancy_estimate: delta must lie in (0, 1)");
  if (!(xi_nats >= 0.0)) throw InputError("redundancy_estimate: xi must be nonnegative");
  RedundancyEstimate r;
  r.value = static_cast<double>(environment_size) * xi_nats / std::log(1.0 / delta);
  r.exceeds_environment = r.value > static_cast<double>(environment_size);
  return r;
}

EfficiencyBounds efficiency_bounds(double xi_nats) { return {xi_nats, 2.0 * xi_nats}; }

ExponentFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("fit_line: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw InputError("fit_line: abscissae are all equal");
  ExponentFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.slope * x[i] + fit.intercept);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

ExponentFit empirical_error_exponent(const DecoherenceModel& model, const BranchEnsemble& ensemble,
                                     const std::vector<std::size_t>& sizes, const FragmentSampler& sampler,
                                     ErrorMeasure measure, double c) {
  if (sizes.size() < 3) throw InputError("empirical_error_exponent: need at least three fragment sizes");
  if (!std::is_sorted(sizes.begin(), sizes.end()) ||
      std::adjacent_find(sizes.begin(), sizes.end()) != sizes.end()) {
    throw InputError("empirical_error_exponent: fragment sizes must be strictly ascending");
  }
  const Metric metric = measure == ErrorMeasure::helstrom ? Metric::helstrom : Metric::pe_star;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<std::size_t> excluded;
  std::vector<std::size_t> used;
  for (std::size_t m : sizes) {
    const double avg = fragment_average(model, ensemble, m, metric, sampler, c).mean;
    if (avg <= 0.0) {
      excluded.push_back(m);
      continue;
    }
    used.push_back(m);
    x.push_back(static_cast<double>(m));
    y.push_back(-std::log(avg));
  }
  if (x.size() < 2) throw InputError("empirical_error_exponent: fewer than two sizes with nonzero error");
  ExponentFit fit = fit_line(x, y);
  fit.used = std::move(used);
  fit.excluded = std::move(excluded);
  fit.neg_log_error = std::move(y);
  return fit;
}

}  // namespace qdarwin
