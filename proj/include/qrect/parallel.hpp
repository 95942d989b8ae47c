#pragma once
// Index-parallel loop over [0, n). Each index writes only its own output
// slot, so results do not depend on the thread count. QRECT_THREADS caps the
// worker count (1 forces serial execution).

#include <cstddef>
#include <functional>

namespace qrect {

std::size_t worker_count();
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace qrect
