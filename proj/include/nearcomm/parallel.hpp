#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace nearcomm {

/// `serial` is the reference loop; `parallel` distributes iterations over
/// OpenMP threads. Kernels written against for_each_index produce identical
/// results under both because each iteration writes only its own slot.
enum class ExecutionPolicy { serial, parallel };

/// Calls f(i) for i in [0, n). An exception thrown by any iteration is
/// rethrown after the loop; when several iterations throw, the one with the
/// smallest index wins so the outcome does not depend on scheduling.
template <class F>
void for_each_index(ExecutionPolicy policy, std::size_t n, F&& f) {
    if (policy == ExecutionPolicy::serial) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < count; ++i) {
        try {
            f(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace nearcomm
