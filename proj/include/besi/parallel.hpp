#pragma once

#include <cstddef>
#include <functional>

namespace besi {

/// Worker count used by parallel_for; 0 means hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs body(i) for i in [0, n). Jobs write results by index, so the outcome does
/// not depend on scheduling. The first exception thrown by any job is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace besi
