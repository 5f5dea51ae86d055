#pragma once

#include <cstddef>
#include <vector>

namespace curate {

/// Selects between the OpenMP kernel and its serial reference.
enum class Execution { Serial, Parallel };

/// Order-preserving map over [0, n). fn must be safe to call concurrently.
template <typename Fn>
auto map_indices(std::size_t n, Execution exec, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
    std::vector<decltype(fn(std::size_t{}))> out(n);
    if (exec == Execution::Serial) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 16)
    for (long long i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
    return out;
}

void set_thread_count(int threads);
int thread_count();

}  // namespace curate
