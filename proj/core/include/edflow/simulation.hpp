#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edflow/model.hpp"

namespace edflow {

// SplitMix64 keyed by (seed, replication, stream): the n-th draw is a pure
// function of the key and n, so substreams never overlap or interact.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t replication, std::uint64_t stream);

    std::uint64_t next();
    double uniform(); // [0, 1)
    double exponential(double rate);
    bool bernoulli(double p) { return uniform() < p; }

private:
    std::uint64_t state_;
};

struct SimConfig {
    double horizon = 1e6; // hours, including warmup
    double warmup = 1e3;
    int replications = 10;
    std::uint64_t seed = 1;
    CapacityMode mode = CapacityMode::nested;
    // Writes time,event,N_u,N_n for replication 0 when set.
    std::optional<std::filesystem::path> event_log;
};

void validate(const SimConfig& config);

struct Estimate {
    double mean = 0.0;
    double half_width = 0.0; // 95% Student-t; infinite with one replication
    bool defined = true;     // false when no replication produced a value
    std::vector<double> replication_values;
};

struct EventCounts {
    std::uint64_t urgent_arrivals = 0;
    std::uint64_t nonurgent_arrivals = 0;
    std::uint64_t admissions = 0; // includes declined offers
    std::uint64_t redirections_accepted = 0;
    std::uint64_t redirections_declined = 0;
    std::uint64_t balks = 0;
    std::uint64_t preemptions = 0;
    std::uint64_t urgent_completions = 0;
    std::uint64_t nonurgent_completions = 0;

    friend bool operator==(const EventCounts&, const EventCounts&) = default;
};

struct ReplicationStats {
    EventCounts whole_run; // from time 0
    EventCounts window;    // after warmup
    // Largest gap between the running time integrals and the same averages
    // recomputed from the per-state dwell table.
    double occupancy_consistency = 0.0;
};

struct SimResult {
    SimConfig config;
    // Same names as the PerformanceMetrics and ObjectiveBreakdown fields.
    std::vector<std::pair<std::string, Estimate>> metrics;
    std::vector<ReplicationStats> replications;
    std::vector<std::string> warnings;

    const Estimate& get(std::string_view name) const;
};

// Names of the estimated quantities, in output order.
const std::vector<std::string>& sim_metric_names();

// Throws ParameterError/StabilityError before simulating anything.
SimResult simulate(const ModelParams& params, const SimConfig& config);

// Two-sided 95% Student-t critical value with dof degrees of freedom.
double t_critical_95(int dof);

} // namespace edflow
