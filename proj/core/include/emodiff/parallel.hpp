// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace emodiff {

// Worker count from EMODIFF_THREADS (default 1).
int worker_count();

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks; callers
// write results into per-index slots and reduce them in index order, so the
// outcome does not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace emodiff
