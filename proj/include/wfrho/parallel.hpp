#pragma once

#include <exception>
#include <mutex>

namespace wfrho {

// Runs body(k) for k in [0, n), in parallel when OpenMP is enabled. Each index must write only its
// own output slot. The first exception thrown by any iteration is rethrown after the loop.
template <class Body>
void parallel_for(long n, Body&& body) {
    std::exception_ptr error;
    std::mutex guard;
#pragma omp parallel for schedule(dynamic, 8)
    for (long k = 0; k < n; ++k) {
        try {
            body(k);
        } catch (...) {
            std::lock_guard<std::mutex> lock(guard);
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace wfrho
