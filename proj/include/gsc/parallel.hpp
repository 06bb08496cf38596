// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace gsc {

/// Maximum worker threads used by parallel_for.  0 means "hardware
/// concurrency".  The CLI sets this from --threads.
void set_max_threads(int n);
int max_threads();

/// Deterministic parallel loop over [begin, end).
///
/// The range is cut into a fixed number of chunks that depends only on the
/// range size — never on the thread count — and `body(chunk_index,
/// chunk_begin, chunk_end)` is invoked once per chunk.  Callers that reduce
/// must accumulate into per-chunk slots and combine them in chunk order
/// afterwards; with that discipline results are bit-identical no matter how
/// many threads execute the chunks.
///
/// `chunks` fixes the chunk count explicitly; pass 0 to derive it from the
/// range (at most 64 chunks, never more than one element per chunk).
void parallel_for_chunks(std::size_t begin, std::size_t end,
                         const std::function<void(std::size_t, std::size_t, std::size_t)>& body,
                         std::size_t chunks = 0);

/// Number of chunks parallel_for_chunks will use for a range of size n with
/// the given explicit chunk request.  Exposed so callers can size per-chunk
/// accumulator arrays up front.
std::size_t chunk_count(std::size_t n, std::size_t chunks = 0);

} // namespace gsc
