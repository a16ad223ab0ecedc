#pragma once

#include <cstddef>
#include <functional>

namespace esw {

// Resolve an effective worker count: explicit request wins, otherwise the
// ESW_WORKERS environment variable, otherwise 1.
int resolve_workers(int requested);

// Run fn(task_index) for every index in [0, count). Tasks are handed out via
// an atomic counter; fn must only write to per-task state, which keeps results
// independent of scheduling.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

// Variant exposing the worker id, for per-worker accumulators.
void parallel_for_worker(std::size_t count, int workers,
                         const std::function<void(std::size_t task, int worker)>& fn);

} // namespace esw
