// sampler.hpp - fragment selection for averages over equal-size fragments.

#pragma once

#include "qdarwin/model.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace qdarwin {

struct FragmentSampler {
  enum class Mode { exhaustive, monte_carlo };

  Mode mode = Mode::exhaustive;
  std::size_t samples = 400;                 // Monte Carlo draws per fragment size
  std::uint64_t master_seed = 0;
  std::size_t exhaustive_cap = 1'000'000;    // largest C(N, m) enumerated
  std::size_t workers = 0;                   // 0: resolve from the environment
};

// C(n, k), saturating at SIZE_MAX.
std::size_t binomial(std::size_t n, std::size_t k);

// All size-m subsets of {0..n-1} in lexicographic order.
std::vector<Fragment> enumerate_fragments(std::size_t n, std::size_t m);

// `count` independent uniform size-m subsets. The stream is a pure function of
// (master_seed, t, m); each subset is drawn without replacement.
std::vector<Fragment> sample_fragments(std::size_t n, std::size_t m, std::size_t count,
                                       std::uint64_t master_seed, double t);

// Fragments to average over for the given sampler. i.i.d. environments need
// only one representative fragment. Throws InputError when exhaustive mode
// would exceed the cap.
std::vector<Fragment> select_fragments(const FragmentSampler& sampler, std::size_t n, std::size_t m, double t,
                                       bool iid);

}  // namespace qdarwin
