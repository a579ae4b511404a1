#pragma once

#include <cstddef>
#include <functional>

namespace ffm {

/// Worker count: the WORKERS environment variable when set, else the
/// hardware concurrency clamped to 8.
int worker_count();

/// Runs f(i) for i in [0, n) across workers. Tasks must be independent;
/// callers get determinism by writing into index-addressed slots.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f, int workers = 0);

}  // namespace ffm
