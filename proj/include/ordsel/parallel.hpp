#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace ordsel::par {

// Worker cap: explicit set_thread_cap() wins, then ORDSEL_THREADS, then hardware.
int thread_cap();
void set_thread_cap(int cap);

// Runs fn(i) for i in [0, count). Each index must be self-contained (own seed, own
// output slot); results are then independent of the schedule and of the cap.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

// Fixed-order pairwise summation; deterministic reduction for per-slot results.
double pairwise_sum(const double* v, std::size_t count);
double pairwise_sum(const std::vector<double>& v);

// Mean and unbiased sample standard deviation via pairwise sums.
double mean(const std::vector<double>& v);
double sample_sd(const std::vector<double>& v);

}  // namespace ordsel::par
