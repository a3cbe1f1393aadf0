#pragma once

#include <cstddef>
#include <functional>

namespace rgrst {

/// Worker cap used by every parallel loop in the library. 0 means hardware
/// concurrency. Results never depend on this value.
void set_max_threads(unsigned n);
unsigned max_threads();

/// Calls body(i) for i in [0, n) on up to max_threads() workers, in contiguous
/// blocks. The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace rgrst
