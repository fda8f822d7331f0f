#include "edflow/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "edflow/errors.hpp"
#include "edflow/io.hpp"
#include "edflow/policy.hpp"

namespace edflow {

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

enum Stream : std::uint64_t {
    kArrival = 1,
    kClassification = 2,
    kAcceptance = 3,
    kUrgentService = 4,
    kNonurgentService = 5,
};

struct Completion {
    double time;
    std::uint32_t slot;
    std::uint32_t generation;
    bool urgent;
};

struct LaterFirst {
    bool operator()(const Completion& a, const Completion& b) const { return a.time > b.time; }
};

struct Patient {
    double arrival = 0.0;
    std::uint32_t generation = 0;
    std::uint32_t position = 0; // index in the non-urgent service list
};

struct ReplicationOutput {
    ReplicationStats stats;
    std::vector<std::optional<double>> values; // sim_metric_names() order
};

class Replication {
public:
    Replication(const ModelParams& p, const SimConfig& cfg, std::uint64_t rep)
        : p_(p),
          cfg_(cfg),
          c_(p.c_u + p.c_n),
          lambda_(p.lambda),
          arrival_(cfg.seed, rep, kArrival),
          classification_(cfg.seed, rep, kClassification),
          acceptance_(cfg.seed, rep, kAcceptance),
          urgent_service_(cfg.seed, rep, kUrgentService),
          nonurgent_service_(cfg.seed, rep, kNonurgentService),
          log_(rep == 0 && cfg.event_log.has_value()) {
        dwell_.assign(static_cast<std::size_t>(p.k + 1) * 8, 0.0);
    }

    ReplicationOutput run() {
        double next_arrival = arrival_.exponential(lambda_);
        if (log_) log_text_ = "time,event,N_u,N_n\n";
        while (true) {
            const bool service_next = !heap_.empty() && heap_.front().time < next_arrival;
            const double t_next = service_next ? heap_.front().time : next_arrival;
            if (t_next > cfg_.horizon) {
                accumulate(cfg_.horizon);
                break;
            }
            accumulate(t_next);
            now_ = t_next;
            if (service_next) {
                const Completion done = heap_.front();
                std::pop_heap(heap_.begin(), heap_.end(), LaterFirst{});
                heap_.pop_back();
                if (done.generation != patients_[done.slot].generation) continue; // preempted
                complete(done);
            } else {
                arrive();
                next_arrival = now_ + arrival_.exponential(lambda_);
            }
            allocate();
        }
        return finish();
    }

private:
    bool in_window() const { return now_ >= cfg_.warmup; }

    void count(std::uint64_t EventCounts::*field) {
        ++(stats_.whole_run.*field);
        if (in_window()) ++(stats_.window.*field);
    }

    void log(const char* event) {
        if (!log_) return;
        log_text_ += format_double(now_);
        log_text_ += ',';
        log_text_ += event;
        log_text_ += ',';
        log_text_ += std::to_string(n_u_);
        log_text_ += ',';
        log_text_ += std::to_string(n_n_);
        log_text_ += '\n';
    }

    void accumulate(double until) {
        const double from = std::max(now_, cfg_.warmup);
        if (until <= from) return;
        const double dt = until - from;
        const int s_n = static_cast<int>(serving_n_.size());
        nu_ += n_u_ * dt;
        nn_ += n_n_ * dt;
        su_ += serving_u_ * dt;
        sn_ += s_n * dt;
        const int occupancy = n_u_ + n_n_;
        if (occupancy < p_.theta)
            below_ += dt;
        else if (occupancy < p_.k)
            band_ += dt;
        else
            balk_ += dt;
        const std::size_t idx = static_cast<std::size_t>(n_u_) * (p_.k + 1) + n_n_;
        if (idx >= dwell_.size()) dwell_.resize(std::max(idx + 1, dwell_.size() * 2), 0.0);
        dwell_[idx] += dt;
        if (s_n > 0) dwell_sn_ += s_n * dt;
    }

    std::uint32_t admit_patient() {
        std::uint32_t slot;
        if (!free_.empty()) {
            slot = free_.back();
            free_.pop_back();
        } else {
            slot = static_cast<std::uint32_t>(patients_.size());
            patients_.emplace_back();
        }
        patients_[slot].arrival = now_;
        ++patients_[slot].generation;
        return slot;
    }

    void release(std::uint32_t slot) {
        ++patients_[slot].generation;
        free_.push_back(slot);
    }

    void arrive() {
        if (classification_.bernoulli(p_.p_u)) {
            count(&EventCounts::urgent_arrivals);
            ++n_u_;
            waiting_u_.push_back(admit_patient());
            log("urgent_arrival");
            return;
        }
        count(&EventCounts::nonurgent_arrivals);
        const int occupancy = n_u_ + n_n_;
        if (occupancy >= p_.k) {
            count(&EventCounts::balks);
            log("balk");
            return;
        }
        if (occupancy >= p_.theta) {
            if (acceptance_.bernoulli(p_.p_a)) {
                count(&EventCounts::redirections_accepted);
                log("redirect");
                return;
            }
            count(&EventCounts::redirections_declined);
        }
        count(&EventCounts::admissions);
        ++n_n_;
        waiting_n_.push_back(admit_patient());
        log("nonurgent_arrival");
    }

    void complete(const Completion& done) {
        const double sojourn = now_ - patients_[done.slot].arrival;
        if (done.urgent) {
            count(&EventCounts::urgent_completions);
            --n_u_;
            --serving_u_;
            if (in_window()) {
                wu_sum_ += sojourn;
                ++wu_count_;
            }
            log("urgent_departure");
        } else {
            count(&EventCounts::nonurgent_completions);
            --n_n_;
            drop_from_service(done.slot);
            if (in_window()) {
                wn_sum_ += sojourn;
                ++wn_count_;
            }
            log("nonurgent_departure");
        }
        release(done.slot);
    }

    void drop_from_service(std::uint32_t slot) {
        const std::uint32_t pos = patients_[slot].position;
        const std::uint32_t last = serving_n_.back();
        serving_n_[pos] = last;
        patients_[last].position = pos;
        serving_n_.pop_back();
    }

    void schedule(std::uint32_t slot, bool urgent) {
        const double dt = urgent ? urgent_service_.exponential(p_.mu_u)
                                 : nonurgent_service_.exponential(p_.mu_n);
        heap_.push_back({now_ + dt, slot, patients_[slot].generation, urgent});
        std::push_heap(heap_.begin(), heap_.end(), LaterFirst{});
    }

    // Brings the busy-bed counts to s_u and s_n of the current state.
    void allocate() {
        int target_u, target_n;
        if (cfg_.mode == CapacityMode::nested) {
            target_u = std::min(n_u_, c_);
            target_n = std::min({n_n_, std::max(0, c_ - n_u_), p_.c_n});
        } else {
            target_u = std::min(n_u_, p_.c_u);
            target_n = std::min(n_n_, p_.c_n);
        }
        while (serving_u_ < target_u) {
            const std::uint32_t slot = waiting_u_.front();
            waiting_u_.pop_front();
            ++serving_u_;
            schedule(slot, true);
        }
        while (static_cast<int>(serving_n_.size()) > target_n) {
            // Back to the head of the line; the stale completion is skipped
            // when it surfaces because the generation moved on.
            const std::uint32_t slot = serving_n_.back();
            serving_n_.pop_back();
            ++patients_[slot].generation;
            waiting_n_.push_front(slot);
            count(&EventCounts::preemptions);
            log("preempt");
        }
        while (static_cast<int>(serving_n_.size()) < target_n) {
            const std::uint32_t slot = waiting_n_.front();
            waiting_n_.pop_front();
            patients_[slot].position = static_cast<std::uint32_t>(serving_n_.size());
            serving_n_.push_back(slot);
            schedule(slot, false);
        }
    }

    ReplicationOutput finish() {
        if (log_) write_file_atomic(*cfg_.event_log, log_text_);
        const double span = cfg_.horizon - cfg_.warmup;
        const double e_nn = nn_ / span;
        const double e_nu = nu_ / span;

        // Same averages from the dwell table.
        double nn2 = 0.0, nu2 = 0.0;
        const std::size_t width = static_cast<std::size_t>(p_.k) + 1;
        for (std::size_t idx = 0; idx < dwell_.size(); ++idx) {
            if (dwell_[idx] == 0.0) continue;
            nu2 += static_cast<double>(idx / width) * dwell_[idx];
            nn2 += static_cast<double>(idx % width) * dwell_[idx];
        }
        stats_.occupancy_consistency =
            std::max({std::abs(nn2 / span - e_nn), std::abs(nu2 / span - e_nu),
                      std::abs(dwell_sn_ / span - sn_ / span)});

        const EventCounts& w = stats_.window;
        const auto rate = [&](std::uint64_t n) { return static_cast<double>(n) / span; };
        std::optional<double> e_wn, e_wu;
        if (wn_count_ > 0) e_wn = wn_sum_ / static_cast<double>(wn_count_);
        if (wu_count_ > 0) e_wu = wu_sum_ / static_cast<double>(wu_count_);

        const double r_u = p_.r_u_ed * rate(w.urgent_completions);
        const double r_n = p_.r_n_ed * rate(w.nonurgent_completions);
        const double r_alt = p_.r_alt * rate(w.redirections_accepted);
        const double b = p_.c_b * rate(w.balks);
        double w_n, w_u;
        if (p_.waiting_cost_basis == WaitingCostBasis::headcount) {
            w_n = p_.cw_n * e_nn;
            w_u = p_.cw_u * e_nu;
        } else {
            w_n = p_.cw_n * e_wn.value_or(0.0);
            w_u = p_.cw_u * e_wu.value_or(0.0);
        }
        const double z = p_.w_rev * (r_u + r_n + r_alt) - p_.w_balk * b - p_.w_wait * (w_n + w_u);

        ReplicationOutput out;
        out.stats = stats_;
        out.values = {e_nn,        e_nu,         sn_ / span,  su_ / span, rate(w.admissions),
                      e_wn,        e_wu,         balk_ / span, band_ / span, below_ / span,
                      r_u,         r_n,          r_alt,       b,          w_n,
                      w_u,         z};
        return out;
    }

    const ModelParams& p_;
    const SimConfig& cfg_;
    const int c_;
    const double lambda_;
    CounterRng arrival_, classification_, acceptance_, urgent_service_, nonurgent_service_;

    double now_ = 0.0;
    int n_u_ = 0;
    int n_n_ = 0;
    int serving_u_ = 0;
    std::vector<std::uint32_t> serving_n_;
    std::deque<std::uint32_t> waiting_u_, waiting_n_;
    std::vector<Patient> patients_;
    std::vector<std::uint32_t> free_;
    std::vector<Completion> heap_;

    double nu_ = 0.0, nn_ = 0.0, su_ = 0.0, sn_ = 0.0;
    double below_ = 0.0, band_ = 0.0, balk_ = 0.0;
    std::vector<double> dwell_;
    double dwell_sn_ = 0.0;
    double wn_sum_ = 0.0, wu_sum_ = 0.0;
    std::uint64_t wn_count_ = 0, wu_count_ = 0;
    ReplicationStats stats_;

    bool log_;
    std::string log_text_;
};

} // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t replication, std::uint64_t stream)
    : state_(mix64(mix64(seed) ^ mix64(replication * 0x9e3779b97f4a7c15ULL + stream))) {}

std::uint64_t CounterRng::next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
}

double CounterRng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double CounterRng::exponential(double rate) { return -std::log1p(-uniform()) / rate; }

double t_critical_95(int dof) {
    if (dof < 1) return std::numeric_limits<double>::infinity();
    boost::math::students_t dist(static_cast<double>(dof));
    return boost::math::quantile(dist, 0.975);
}

const std::vector<std::string>& sim_metric_names() {
    static const std::vector<std::string> names{
        "E_Nn", "E_Nu",   "E_Nn_s",    "E_Nu_s", "lambda_n_eff", "E_Wn",     "E_Wu",     "p_balk", "p_band",
        "p_below", "R_u", "R_n_ed", "R_alt_rev", "B_cost", "W_n_cost", "W_u_cost", "Z"};
    return names;
}

const Estimate& SimResult::get(std::string_view name) const {
    for (const auto& [key, value] : metrics)
        if (key == name) return value;
    throw std::out_of_range("no simulated metric named '" + std::string(name) + "'");
}

void validate(const SimConfig& c) {
    if (!(std::isfinite(c.horizon) && c.horizon > 0.0)) throw ParameterError("horizon", "must be positive");
    if (!(c.warmup >= 0.0 && c.warmup < c.horizon))
        throw ParameterError("warmup", "must lie in [0, horizon)");
    if (c.replications < 1) throw ParameterError("replications", "must be at least 1");
}

SimResult simulate(const ModelParams& params, const SimConfig& config) {
    validate(params);
    validate(config);
    require_stable(params, config.mode);
    if (config.mode == CapacityMode::fixed && params.c_n < 1)
        throw ParameterError("c_n", "the fixed partition needs at least one non-urgent bed");

    const auto outputs = parallel_map<ReplicationOutput>(
        static_cast<std::size_t>(config.replications),
        [&](std::size_t rep) { return Replication(params, config, rep).run(); });

    SimResult result;
    result.config = config;
    const auto& names = sim_metric_names();
    for (std::size_t m = 0; m < names.size(); ++m) {
        Estimate e;
        for (const auto& out : outputs)
            if (out.values[m]) e.replication_values.push_back(*out.values[m]);
        const std::size_t n = e.replication_values.size();
        if (n == 0) {
            e.defined = false;
            e.mean = std::numeric_limits<double>::quiet_NaN();
            e.half_width = std::numeric_limits<double>::quiet_NaN();
        } else {
            double sum = 0.0;
            for (double v : e.replication_values) sum += v;
            e.mean = sum / static_cast<double>(n);
            if (n == 1) {
                e.half_width = std::numeric_limits<double>::infinity();
            } else {
                double ss = 0.0;
                for (double v : e.replication_values) ss += (v - e.mean) * (v - e.mean);
                const double sd = std::sqrt(ss / static_cast<double>(n - 1));
                e.half_width = t_critical_95(static_cast<int>(n) - 1) * sd / std::sqrt(static_cast<double>(n));
            }
            if (n < outputs.size())
                result.warnings.push_back(names[m] + ": defined in " + std::to_string(n) + " of " +
                                          std::to_string(outputs.size()) + " replications");
        }
        result.metrics.emplace_back(names[m], std::move(e));
    }
    for (std::size_t r = 0; r < outputs.size(); ++r) {
        result.replications.push_back(outputs[r].stats);
        const EventCounts& w = outputs[r].stats.window;
        if (w.urgent_arrivals + w.nonurgent_arrivals + w.urgent_completions + w.nonurgent_completions == 0)
            result.warnings.push_back("replication " + std::to_string(r) + " saw no events after warmup");
    }
    return result;
}

} // namespace edflow
