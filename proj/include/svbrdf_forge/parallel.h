// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

namespace sforge {

/// Worker count: SVBRDF_FORGE_THREADS if set, else hardware concurrency.
int worker_count();

/// Runs fn(i) for i in [0, count) across worker threads. Callers write
/// results to per-index slots, so output never depends on scheduling.
void parallel_for(int count, const std::function<void(int)> &fn);

} // namespace sforge
