// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace meshctrl {

/// Number of worker threads: MESHCTRL_THREADS when set, else the hardware
/// concurrency, at least 1.
int worker_count();

/// Runs fn(begin, end, chunk_index) over fixed-size chunks of [0, total).
/// Chunk boundaries depend only on chunk_size, never on the thread count, so
/// callers that reduce per-chunk partials in index order get identical
/// results however the chunks are scheduled. Runs inline when a single
/// worker suffices. The first exception thrown by any chunk is rethrown.
void parallel_chunks(long total, long chunk_size,
                     const std::function<void(long, long, long)>& fn);

}  // namespace meshctrl
