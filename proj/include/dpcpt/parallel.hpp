#pragma once

#include <cstddef>
#include <functional>

namespace dpcpt {

// Worker count resolution: explicit request > DPCPT_THREADS > hardware.
int resolve_workers(int requested);

// Runs body(i) for i in [0, count) across the given number of workers.
// Work items must write only to slots indexed by i so results do not depend
// on scheduling; exceptions escaping body are rethrown on the caller thread.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body);

}  // namespace dpcpt
