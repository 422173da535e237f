#pragma once

#include <cstddef>
#include <functional>

namespace qdarwin {

// Name of the environment variable that sets the default worker count.
inline constexpr const char* kThreadsEnv = "QDARWIN_THREADS";

// `requested` if nonzero, else $QDARWIN_THREADS, else the hardware concurrency.
std::size_t resolve_workers(std::size_t requested = 0);

// Calls body(i) for i in [0, n) on up to `workers` threads. Each index is
// visited exactly once; callers write into per-index slots and reduce in
// index order afterwards. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body);

}  // namespace qdarwin
