#pragma once

#include <cstddef>
#include <functional>

namespace liouville {

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Work is handed out in
/// index order and every result must be written to slot i, so the outcome does
/// not depend on the thread count. The first exception (lowest index) is
/// rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

/// Process-wide default used when a caller passes threads == 0.
std::size_t default_threads();
void set_default_threads(std::size_t n);

}  // namespace liouville
