#include "qdarwin/sampler.hpp"

#include "qdarwin/errors.hpp"
#include "qdarwin/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <string>
#include <thread>

namespace qdarwin {

std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv(kThreadsEnv)) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body) {
  workers = std::min(resolve_workers(workers), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    const std::size_t num = n - k + i;
    // r * num / i is exact at every step; guard the multiplication.
    if (r > std::numeric_limits<std::size_t>::max() / num) return std::numeric_limits<std::size_t>::max();
    r = r * num / i;
  }
  return r;
}

std::vector<Fragment> enumerate_fragments(std::size_t n, std::size_t m) {
  if (m > n) throw InputError("enumerate_fragments: fragment larger than environment");
  std::vector<Fragment> out;
  std::vector<std::size_t> idx(m);
  for (std::size_t i = 0; i < m; ++i) idx[i] = i;
  while (true) {
    out.push_back(Fragment{idx});
    if (m == 0) break;
    std::size_t i = m;
    while (i > 0 && idx[i - 1] == n - m + (i - 1)) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < m; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

namespace {

// Unbiased draw from [0, bound) by rejection; independent of the standard
// library's distribution implementation.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

std::vector<Fragment> sample_fragments(std::size_t n, std::size_t m, std::size_t count,
                                       std::uint64_t master_seed, double t) {
  if (m > n) throw InputError("sample_fragments: fragment larger than environment");
  const auto tbits = std::bit_cast<std::uint64_t>(t);
  const auto mm = static_cast<std::uint64_t>(m);
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(tbits), static_cast<std::uint32_t>(tbits >> 32),
                    static_cast<std::uint32_t>(mm), static_cast<std::uint32_t>(mm >> 32)};
  std::mt19937_64 rng(seq);

  std::vector<std::size_t> pool(n);
  std::vector<Fragment> out;
  out.reserve(count);
  for (std::size_t draw = 0; draw < count; ++draw) {
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    // Partial Fisher-Yates: the first m slots form a uniform subset.
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(bounded(rng, n - i));
      std::swap(pool[i], pool[j]);
    }
    Fragment f{std::vector<std::size_t>(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m))};
    std::sort(f.indices.begin(), f.indices.end());
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<Fragment> select_fragments(const FragmentSampler& sampler, std::size_t n, std::size_t m, double t,
                                       bool iid) {
  if (m > n) throw InputError("fragment size " + std::to_string(m) + " exceeds environment size " + std::to_string(n));
  if (iid || m == 0 || m == n) return {Fragment::first(m)};
  if (sampler.mode == FragmentSampler::Mode::exhaustive) {
    const std::size_t count = binomial(n, m);
    if (count > sampler.exhaustive_cap) {
      throw InputError("exhaustive averaging over C(" + std::to_string(n) + ", " + std::to_string(m) +
                       ") fragments exceeds the cap of " + std::to_string(sampler.exhaustive_cap) +
                       "; use monte-carlo sampling");
    }
    return enumerate_fragments(n, m);
  }
  if (sampler.samples == 0) throw InputError("monte-carlo sampling needs at least one sample");
  return sample_fragments(n, m, sampler.samples, sampler.master_seed, t);
}

}  // namespace qdarwin
