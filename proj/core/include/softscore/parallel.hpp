#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace softscore {

/// Pairwise (tree) summation. The reduction order depends only on the
/// length, so results are bit-stable for a fixed input order.
double tree_sum(std::span<const double> values);

/// Mean via tree_sum. Empty input returns 0.
double tree_mean(std::span<const double> values);

/// Calls body(i) for i in [0, n) across `threads` workers. Each index is
/// visited exactly once; body must only write state owned by index i.
/// threads <= 1 runs inline.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

/// --threads fallback: SOFTSCORE_THREADS if set and valid, otherwise 1.
unsigned default_threads();

}  // namespace softscore
