#pragma once

#include <cstddef>
#include <functional>

namespace deqcert {

// Runs body(i) for i in [0, count) on up to `threads` workers (0 means
// hardware concurrency). Work is split into contiguous index ranges, so
// callers that write results by index get the same output for any thread
// count. The exception from the lowest failing index is rethrown.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body);

std::size_t resolve_threads(std::size_t requested);

} // namespace deqcert
