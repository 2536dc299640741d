// Seeded Monte Carlo machinery: preference sampling, full time-zone
// simulation runs and ensemble statistics.
//
// Reproducibility: a (seed, scenario) pair fully determines every trace.
// Ensemble runs draw from independent sub-streams derived by a counter split
// of the master seed, and results are reduced in run-index order, so the
// thread count never changes any output bit.
#pragma once

#include <Eigen/Cholesky>
#include <cmath>
#include <cstdint>
#include <limits>
#include <thread>
#include <utility>
#include <vector>

#include "rtpg/beliefs.hpp"
#include "rtpg/errors.hpp"
#include "rtpg/model.hpp"
#include "rtpg/rng.hpp"

namespace rtpg {

// ---------------------------------------------------------------------------
// Preference sampling

/// Multivariate-normal sampler with a cached Cholesky factor.  A diagonal
/// covariance (including all-zero) is factored exactly; otherwise a failed
/// factorization is retried once with 1e-12 diagonal jitter.
class PreferenceSampler {
  public:
    explicit PreferenceSampler(const PreferencePrior& prior)
        : mean_(Vector::Constant(prior.n(), prior.g_bar)) {
        prior.validate();
        const Matrix& cov = prior.covariance;
        if (cov.isDiagonal(0.0)) {
            factor_ = cov.diagonal().cwiseSqrt().asDiagonal();
            return;
        }
        Eigen::LLT<Matrix> llt(cov);
        if (llt.info() == Eigen::Success) {
            factor_ = llt.matrixL();
            return;
        }
        Matrix jittered = cov;
        jittered.diagonal().array() += 1e-12;
        Eigen::LLT<Matrix> retry(jittered);
        if (retry.info() != Eigen::Success)
            throw InvalidParameter(
                "PreferenceSampler: covariance is not positive semidefinite "
                "(Cholesky failed even with diagonal jitter)");
        factor_ = retry.matrixL();
    }

    Vector sample(Rng& rng) const {
        Vector z(mean_.size());
        for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
        return mean_ + factor_ * z;
    }

  private:
    Vector mean_;
    Matrix factor_;
};

/// One preference draw from the prior (convenience wrapper).
inline Vector sample_preferences(const PreferencePrior& prior, Rng& rng) {
    return PreferenceSampler(prior).sample(rng);
}

// ---------------------------------------------------------------------------
// Time-zone simulation

namespace detail {

/// Replay a precomputed public schedule against freshly drawn preferences
/// and renewable terms.  Draw order: all preferences first, then one
/// renewable draw per slot.
inline SimulationTrace replay_zone(const Scenario& scenario, const ZoneSchedule& schedule,
                                   const PreferenceSampler& sampler, Rng& rng) {
    const int n = scenario.n();
    SimulationTrace trace;
    trace.preferences = sampler.sample(rng);

    Matrix means(n, n + 1);
    for (int i = 0; i < n; ++i)
        means.row(i) = initial_mean(scenario.prior, i, trace.preferences[i]);

    const CommunicationGraph* graph = scenario.graph ? &*scenario.graph : nullptr;
    trace.slots.reserve(static_cast<std::size_t>(scenario.horizon));
    for (int slot = 0; slot < scenario.horizon; ++slot) {
        const SlotPlan& plan = schedule.slots[static_cast<std::size_t>(slot)];
        SlotRecord rec;
        rec.consumption = consumptions_at_means(plan.coeffs, means);
        rec.total = rec.consumption.sum();
        rec.omega = scenario.forecast.omega_bar.at(slot) +
                    scenario.forecast.omega_std.at(slot) * rng.normal();
        const double gamma = scenario.policy.gamma.at(slot);
        const double kappa = scenario.policy.kappa.at(slot);
        const double alpha = scenario.policy.alpha.at(slot);
        rec.price = price(rec.total, rec.omega, gamma, n);
        rec.utilities.resize(n);
        for (int i = 0; i < n; ++i) {
            rec.utilities[i] = utility(rec.consumption[i], rec.total, trace.preferences[i],
                                       rec.omega, gamma, alpha, n);
            if (rec.consumption[i] < 0.0) ++trace.negative_consumptions;
        }
        const SystemMetrics sm = system_metrics(rec.consumption, rec.omega, gamma, kappa, alpha,
                                                trace.preferences);
        rec.aggregate_utility = sm.aggregate_utility;
        rec.net_revenue = sm.net_revenue;
        rec.welfare = sm.welfare;
        update_means(scenario.info, graph, plan, rec.consumption, means);
        trace.slots.push_back(std::move(rec));
    }
    return trace;
}

}  // namespace detail

/// Simulate one full time zone with an explicit RNG and precomputed schedule.
inline SimulationTrace run_time_zone(const Scenario& scenario, const ZoneSchedule& schedule,
                                     Rng& rng) {
    if (static_cast<int>(schedule.slots.size()) != scenario.horizon)
        throw InvalidParameter("run_time_zone: schedule does not match the scenario horizon");
    const PreferenceSampler sampler(scenario.prior);
    return detail::replay_zone(scenario, schedule, sampler, rng);
}

/// Simulate one full time zone; preferences are drawn once for the zone and
/// the renewable term fresh in every slot.  Deterministic given scenario.seed.
inline SimulationTrace run_time_zone(const Scenario& scenario) {
    scenario.validate();
    const ZoneSchedule schedule = build_zone_schedule(scenario);
    Rng rng(scenario.seed);
    return run_time_zone(scenario, schedule, rng);
}

// ---------------------------------------------------------------------------
// Ensemble statistics

/// Streaming mean/variance accumulator (Welford).
struct RunningStat {
    long count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++count;
        const double delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (x - mean);
    }

    /// Sample variance (n-1 denominator); NaN with fewer than two samples.
    double variance() const {
        if (count < 2) return std::numeric_limits<double>::quiet_NaN();
        return m2 / static_cast<double>(count - 1);
    }

    double std_error() const { return std::sqrt(variance() / static_cast<double>(count)); }
};

/// Per-slot ensemble statistics of the per-capita metrics.
struct SlotStats {
    RunningStat demand;    // L / n
    RunningStat utility;   // U / n
    RunningStat welfare;   // W / n
};

struct EnsembleStats {
    std::vector<SlotStats> slots;
    long runs = 0;
    long negative_consumptions = 0;  // totalled across runs (diagnostic)
};

/// Run `runs` independent zone simulations and accumulate per-slot statistics.
/// Sub-seed k = split(scenario.seed, k); reduction is in run-index order.
inline EnsembleStats ensemble(const Scenario& scenario, int runs, int threads = 1) {
    if (runs < 1) throw InvalidParameter("ensemble: runs must be >= 1");
    scenario.validate();
    const ZoneSchedule schedule = build_zone_schedule(scenario);
    const PreferenceSampler sampler(scenario.prior);
    const int n = scenario.n();
    const int horizon = scenario.horizon;

    struct RunSummary {
        std::vector<double> demand, utility, welfare;
        long negatives = 0;
    };
    std::vector<RunSummary> results(static_cast<std::size_t>(runs));

    const auto worker = [&](int begin, int end) {
        for (int k = begin; k < end; ++k) {
            Rng rng(Rng::split(scenario.seed, static_cast<std::uint64_t>(k)));
            const SimulationTrace trace = detail::replay_zone(scenario, schedule, sampler, rng);
            RunSummary& out = results[static_cast<std::size_t>(k)];
            out.demand.resize(static_cast<std::size_t>(horizon));
            out.utility.resize(static_cast<std::size_t>(horizon));
            out.welfare.resize(static_cast<std::size_t>(horizon));
            for (int h = 0; h < horizon; ++h) {
                const SlotRecord& rec = trace.slots[static_cast<std::size_t>(h)];
                out.demand[static_cast<std::size_t>(h)] = rec.total / n;
                out.utility[static_cast<std::size_t>(h)] = rec.aggregate_utility / n;
                out.welfare[static_cast<std::size_t>(h)] = rec.welfare / n;
            }
            out.negatives = trace.negative_consumptions;
        }
    };

    const int workers = std::max(1, std::min(threads, runs));
    if (workers == 1) {
        worker(0, runs);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        const int chunk = (runs + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const int begin = w * chunk;
            const int end = std::min(runs, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(worker, begin, end);
        }
        for (auto& t : pool) t.join();
    }

    EnsembleStats stats;
    stats.slots.resize(static_cast<std::size_t>(horizon));
    stats.runs = runs;
    for (int k = 0; k < runs; ++k) {
        const RunSummary& run = results[static_cast<std::size_t>(k)];
        for (int h = 0; h < horizon; ++h) {
            stats.slots[static_cast<std::size_t>(h)].demand.add(run.demand[static_cast<std::size_t>(h)]);
            stats.slots[static_cast<std::size_t>(h)].utility.add(run.utility[static_cast<std::size_t>(h)]);
            stats.slots[static_cast<std::size_t>(h)].welfare.add(run.welfare[static_cast<std::size_t>(h)]);
        }
        stats.negative_consumptions += run.negatives;
    }
    return stats;
}

}  // namespace rtpg
