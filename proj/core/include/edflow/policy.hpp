#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <optional>
#include <thread>
#include <vector>

#include "edflow/metrics.hpp"
#include "edflow/model.hpp"

namespace edflow {

struct Evaluation {
    PerformanceMetrics metrics;
    ObjectiveBreakdown objective;
};

// Metrics and objective of one parameter record under the given capacity
// mode (nested: QBD solve; fixed: partitioned model).
Evaluation evaluate(const ModelParams& params, CapacityMode mode = CapacityMode::nested);

struct ThetaPoint {
    int theta = 0;
    PerformanceMetrics metrics;
    ObjectiveBreakdown objective;
};

struct ThetaCurve {
    CapacityMode mode = CapacityMode::nested;
    std::vector<ThetaPoint> rows; // theta = 0..k-1
    int theta_star = 0;           // smallest maximizer
    double Z_star = 0.0;

    const ThetaPoint& best() const { return rows[static_cast<std::size_t>(theta_star)]; }
};

ThetaCurve optimize_theta(const ModelParams& params, CapacityMode mode = CapacityMode::nested);

struct CapacityRow {
    int c_u = 0;
    int c_n = 0;
    bool stable = false;
    double intensity = 0.0;
    std::optional<int> theta_star;
    std::optional<double> Z_star;
};

struct CapacityScan {
    CapacityMode mode = CapacityMode::nested;
    int c_total = 0;
    std::vector<CapacityRow> rows;  // c_u = 1..c_total-1
    std::optional<std::size_t> best; // index into rows; smallest c_u on ties
};

CapacityScan optimize_capacity(const ModelParams& params, int c_total,
                               CapacityMode mode = CapacityMode::nested);

// Worker count for parallel_map; EDFLOW_THREADS overrides the hardware count.
unsigned worker_count();

namespace detail {
// Set inside parallel_map workers so nested maps run inline.
inline thread_local bool in_parallel_worker = false;
} // namespace detail

// Applies fn to 0..n-1 across worker threads. Results are stored by index,
// so the output never depends on scheduling. The lowest-index exception is
// rethrown after all workers finish.
template <class T>
std::vector<T> parallel_map(std::size_t n, const std::function<T(std::size_t)>& fn) {
    std::vector<std::optional<T>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        const bool outer = detail::in_parallel_worker;
        detail::in_parallel_worker = true;
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
        detail::in_parallel_worker = outer;
    };
    const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(worker_count(), n));
    if (threads <= 1 || detail::in_parallel_worker) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<T> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

} // namespace edflow
