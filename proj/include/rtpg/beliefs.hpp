// Sequential game filter: belief propagation over the augmented preference
// vector g~ = [g_1..g_N, g_bar].
//
// Every agent tracks, for ALL agents j, the estimation-weight matrix T_j
// (mean estimate as a linear map of the realized g~) and the error covariance
// M_j.  Both evolve from public quantities only (strategy coefficients,
// observation matrices, network topology), so the emulation is identical in
// every agent; it is computed once per slot and shared.  Each agent
// additionally owns its local mean estimate, which it propagates with its own
// Kalman gain and its actually observed consumptions.
//
// Observations per information model:
//   Private       - none; beliefs are static over the zone.
//   ActionSharing - one row v_k' T_k per graph neighbor k (ascending index).
//   Broadcast     - a single row sum_j v_j' T_j (the announced total).
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <vector>

#include "rtpg/equilibrium.hpp"
#include "rtpg/errors.hpp"
#include "rtpg/model.hpp"
#include "rtpg/network.hpp"

namespace rtpg {

// ---------------------------------------------------------------------------
// State

/// Shared estimation weights/covariances for all agents plus each agent's
/// locally owned mean estimate (row i of `means` is E[g~ | I_i]).
struct BeliefState {
    std::vector<Matrix> weights;      // T_j, (n+1) x (n+1) each
    std::vector<Matrix> covariances;  // M_j, (n+1) x (n+1) each
    Matrix means;                     // n x (n+1)

    int n() const { return static_cast<int>(weights.size()); }
};

/// Estimation weights at the start of a zone: the agent knows its own
/// preference exactly and projects every other preference onto it.
inline Matrix initial_weights(const PreferencePrior& prior, int agent) {
    const int n = prior.n();
    Matrix t = Matrix::Zero(n + 1, n + 1);
    for (int j = 0; j < n; ++j) {
        if (j == agent) {
            t(j, j) = 1.0;
            continue;
        }
        const double ratio = prior.correlation_ratio(agent, j);
        t(j, agent) = ratio;
        t(j, n) = 1.0 - ratio;
    }
    t(n, n) = 1.0;
    return t;
}

/// Error covariance at the start of a zone: prior covariance conditioned on
/// the agent's own preference; the augmented mean component is deterministic.
inline Matrix initial_covariance(const PreferencePrior& prior, int agent) {
    const int n = prior.n();
    Matrix m = Matrix::Zero(n + 1, n + 1);
    const Vector col = prior.covariance.col(agent);
    m.topLeftCorner(n, n) =
        prior.covariance - col * col.transpose() / prior.covariance(agent, agent);
    m.row(agent).setZero();
    m.col(agent).setZero();
    return m;
}

/// Mean estimate at the start of a zone given the agent's own preference.
inline Vector initial_mean(const PreferencePrior& prior, int agent, double g_i) {
    const int n = prior.n();
    Vector mean(n + 1);
    for (int j = 0; j < n; ++j) {
        const double ratio = prior.correlation_ratio(agent, j);
        mean[j] = (1.0 - ratio) * prior.g_bar + ratio * g_i;
    }
    mean[agent] = g_i;
    mean[n] = prior.g_bar;
    return mean;
}

/// Belief state for the whole population given the realized preferences
/// (row i of the mean block uses only agent i's own preference).
inline BeliefState init_beliefs(const PreferencePrior& prior, const Vector& g) {
    prior.validate_for_filtering();
    const int n = prior.n();
    if (g.size() != n) throw InvalidParameter("init_beliefs: preference vector size mismatch");
    BeliefState state;
    state.weights.reserve(n);
    state.covariances.reserve(n);
    state.means.resize(n, n + 1);
    for (int i = 0; i < n; ++i) {
        state.weights.push_back(initial_weights(prior, i));
        state.covariances.push_back(initial_covariance(prior, i));
        state.means.row(i) = initial_mean(prior, i, g[i]);
    }
    return state;
}

// ---------------------------------------------------------------------------
// Observations and Kalman updates

/// What one agent observes after a slot, expressed over g~: `rows` is the
/// d x (n+1) observation matrix and `offsets` the matching strategy
/// intercepts, so that observed = rows * g~ + offsets.
struct ObservationMatrix {
    Matrix rows;
    Vector offsets;

    int dimension() const { return static_cast<int>(rows.rows()); }
};

inline ObservationMatrix observation_matrix(InfoModel info, const CommunicationGraph* graph,
                                            const StrategyCoefficients& coeffs,
                                            const std::vector<Matrix>& weights, int agent) {
    const int n = static_cast<int>(weights.size());
    const int dim = n + 1;
    ObservationMatrix out;
    switch (info) {
        case InfoModel::Private:
            out.rows = Matrix(0, dim);
            out.offsets = Vector(0);
            break;
        case InfoModel::ActionSharing: {
            if (graph == nullptr)
                throw ConfigError("observation_matrix: action sharing requires a graph");
            const auto& nbrs = graph->neighbors(agent);
            const int d = static_cast<int>(nbrs.size());
            out.rows.resize(d, dim);
            out.offsets.resize(d);
            for (int k = 0; k < d; ++k) {
                out.rows.row(k) = coeffs.effective.row(nbrs[static_cast<std::size_t>(k)]);
                out.offsets[k] = coeffs.r[nbrs[static_cast<std::size_t>(k)]];
            }
            break;
        }
        case InfoModel::Broadcast:
            out.rows = coeffs.effective.colwise().sum();
            out.offsets = Vector::Constant(1, coeffs.r.sum());
            break;
    }
    return out;
}

/// Kalman gain K = M H' (H M H')^+ with an SVD pseudo-inverse.  Singular
/// values below 1e-10 of the innovation scale are treated as zero, so
/// redundant or fully anticipated observations produce zero gain columns.
/// The scale includes |H|^2 |M|, not just the largest singular value of the
/// innovation itself: once information saturates, H M H' is pure rounding
/// residue (~1e-16 of the operand scale) and must not be inverted.
inline Matrix kalman_gain(const Matrix& covariance, const Matrix& observation) {
    const int dim = static_cast<int>(covariance.rows());
    const int d = static_cast<int>(observation.rows());
    if (d == 0) return Matrix(dim, 0);
    const Matrix cross = covariance * observation.transpose();  // (n+1) x d
    const Matrix innovation = observation * cross;              // d x d
    Eigen::JacobiSVD<Matrix> svd(innovation, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double h_scale = observation.cwiseAbs().maxCoeff();
    const double m_scale = covariance.cwiseAbs().maxCoeff();
    const double scale =
        std::max(sv.size() > 0 ? sv[0] : 0.0, h_scale * h_scale * m_scale);
    const double cutoff = 1e-10 * scale;
    Vector inv = Vector::Zero(sv.size());
    for (int k = 0; k < sv.size(); ++k)
        if (sv[k] > cutoff && sv[k] > 0.0) inv[k] = 1.0 / sv[k];
    const Matrix pinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
    return cross * pinv;
}

/// Estimation-weight recursion T' = T + K (H - H T); a no-op whenever the
/// observation is already implied by the agent's knowledge.
inline Matrix propagate_weights(const Matrix& weights, const Matrix& gain,
                                const Matrix& observation) {
    if (gain.cols() == 0) return weights;
    return weights + gain * (observation - observation * weights);
}

/// Covariance recursion M' = M - K H M, re-symmetrized; eigenvalues in
/// [-1e-10, 0) are clamped to zero, anything lower is a numerical failure.
inline Matrix propagate_covariance(const Matrix& covariance, const Matrix& gain,
                                   const Matrix& observation) {
    if (gain.cols() == 0) return covariance;
    Matrix next = covariance - gain * (observation * covariance);
    next = ((next + next.transpose()) * 0.5).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(next);
    const double lowest = eig.eigenvalues().minCoeff();
    if (lowest < -1e-10) {
        std::ostringstream msg;
        msg << "propagate_covariance: covariance lost positive semidefiniteness "
            << "(eigenvalue " << lowest << ")";
        throw NumericalFailure(msg.str());
    }
    if (lowest < 0.0) {
        // Exactly-zero rows mark exactly-known components; the eigenvector
        // reconstruction must not resurrect them with rounding residue.
        std::vector<int> known;
        for (int k = 0; k < next.rows(); ++k)
            if ((next.row(k).array() == 0.0).all()) known.push_back(k);
        Vector clamped = eig.eigenvalues().cwiseMax(0.0);
        next = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
        next = ((next + next.transpose()) * 0.5).eval();
        for (int k : known) {
            next.row(k).setZero();
            next.col(k).setZero();
        }
    }
    return next;
}

/// Local Bayesian mean update from the agent's own observation.
inline Vector local_mean_update(const Vector& mean, const Matrix& gain, const Vector& observed,
                                const Vector& predicted) {
    if (observed.size() != gain.cols() || predicted.size() != gain.cols())
        throw InvalidParameter("local_mean_update: observation dimension mismatch");
    if (gain.cols() == 0) return mean;
    return mean + gain * (observed - predicted);
}

// ---------------------------------------------------------------------------
// Slot plans (the public part of the filter)

/// Public per-slot data: equilibrium coefficients plus, when the information
/// model delivers observations, each agent's observation matrix and gain.
struct SlotPlan {
    StrategyCoefficients coeffs;
    std::vector<ObservationMatrix> observations;  // empty under private info
    std::vector<Matrix> gains;                    // empty under private info
};

namespace detail {

/// Solve the slot equilibrium and, when requested, derive all observation
/// matrices and gains and advance the shared weights/covariances in place.
inline SlotPlan plan_slot(const BehaviorConstants& constants, double omega_bar, InfoModel info,
                          const CommunicationGraph* graph, std::vector<Matrix>& weights,
                          std::vector<Matrix>& covariances, bool advance_beliefs) {
    SlotPlan plan;
    plan.coeffs = solve_bne(constants, weights, omega_bar);
    if (info == InfoModel::Private || !advance_beliefs) return plan;

    const int n = static_cast<int>(weights.size());
    plan.observations.reserve(static_cast<std::size_t>(n));
    plan.gains.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        plan.observations.push_back(observation_matrix(info, graph, plan.coeffs, weights, i));
        plan.gains.push_back(
            kalman_gain(covariances[static_cast<std::size_t>(i)],
                        plan.observations.back().rows));
    }
    for (int i = 0; i < n; ++i) {
        auto& t = weights[static_cast<std::size_t>(i)];
        auto& m = covariances[static_cast<std::size_t>(i)];
        const auto& h = plan.observations[static_cast<std::size_t>(i)].rows;
        const auto& k = plan.gains[static_cast<std::size_t>(i)];
        t = propagate_weights(t, k, h);
        m = propagate_covariance(m, k, h);
    }
    return plan;
}

/// Consumptions for one slot evaluated at the agents' local means.
inline Vector consumptions_at_means(const StrategyCoefficients& coeffs, const Matrix& means) {
    const int n = static_cast<int>(means.rows());
    Vector out(n);
    for (int i = 0; i < n; ++i) out[i] = coeffs.consumption(i, means.row(i));
    return out;
}

/// Per-agent local mean updates given the slot's realized consumptions.
inline void update_means(InfoModel info, const CommunicationGraph* graph, const SlotPlan& plan,
                         const Vector& consumptions, Matrix& means) {
    if (info == InfoModel::Private || plan.gains.empty()) return;
    const int n = static_cast<int>(means.rows());
    const double total = consumptions.sum();
    for (int i = 0; i < n; ++i) {
        const auto& obs = plan.observations[static_cast<std::size_t>(i)];
        const int d = obs.dimension();
        if (d == 0) continue;
        Vector observed(d);
        if (info == InfoModel::Broadcast) {
            observed[0] = total;
        } else {
            const auto& nbrs = graph->neighbors(i);
            for (int k = 0; k < d; ++k) observed[k] = consumptions[nbrs[static_cast<std::size_t>(k)]];
        }
        const Vector predicted = obs.rows * means.row(i).transpose() + obs.offsets;
        means.row(i) = local_mean_update(means.row(i), plan.gains[static_cast<std::size_t>(i)],
                                         observed, predicted);
    }
}

}  // namespace detail

/// One full filter step at `slot` (0-based): solve the slot equilibrium,
/// evaluate consumptions at the agents' local means, then propagate the
/// shared weights/covariances and each agent's own mean from its observation.
/// The state is advanced in place; under private information it is unchanged.
struct FilterStepResult {
    Vector consumptions;
    StrategyCoefficients coeffs;
};

inline FilterStepResult filter_step(const Scenario& scenario, int slot, BeliefState& state) {
    if (slot < 0 || slot >= scenario.horizon)
        throw InvalidParameter("filter_step: slot outside the time zone");
    if (state.n() != scenario.n())
        throw InvalidParameter("filter_step: belief state does not match the scenario");
    const CommunicationGraph* graph = scenario.graph ? &*scenario.graph : nullptr;
    SlotPlan plan = detail::plan_slot(scenario.constants_at(slot),
                                      scenario.forecast.omega_bar.at(slot), scenario.info, graph,
                                      state.weights, state.covariances, /*advance_beliefs=*/true);
    Vector consumptions = detail::consumptions_at_means(plan.coeffs, state.means);
    detail::update_means(scenario.info, graph, plan, consumptions, state.means);
    return {std::move(consumptions), std::move(plan.coeffs)};
}

/// The realization-independent part of a whole zone: per-slot coefficients,
/// observation matrices and gains.  Computing it once and replaying it across
/// Monte Carlo runs is mathematically identical to running the filter per
/// run, because all of it derives from public data.
struct ZoneSchedule {
    std::vector<SlotPlan> slots;
};

inline ZoneSchedule build_zone_schedule(const Scenario& scenario) {
    scenario.validate();
    const int n = scenario.n();
    std::vector<Matrix> weights;
    std::vector<Matrix> covariances;
    weights.reserve(static_cast<std::size_t>(n));
    covariances.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        weights.push_back(initial_weights(scenario.prior, i));
        covariances.push_back(initial_covariance(scenario.prior, i));
    }
    const CommunicationGraph* graph = scenario.graph ? &*scenario.graph : nullptr;

    ZoneSchedule schedule;
    schedule.slots.reserve(static_cast<std::size_t>(scenario.horizon));
    double prev_omega_bar = 0.0;
    BehaviorConstants prev_constants{scenario.behavior, 0, 0, 0, 0};
    for (int slot = 0; slot < scenario.horizon; ++slot) {
        const BehaviorConstants constants = scenario.constants_at(slot);
        const double omega_bar = scenario.forecast.omega_bar.at(slot);
        const bool last = (slot + 1 == scenario.horizon);
        // Under private information the system is unchanged between slots
        // with identical parameters; reuse the previous solution.
        if (scenario.info == InfoModel::Private && slot > 0 &&
            constants.lambda == prev_constants.lambda && constants.mu == prev_constants.mu &&
            constants.tau == prev_constants.tau && constants.rho == prev_constants.rho &&
            omega_bar == prev_omega_bar) {
            schedule.slots.push_back(schedule.slots.back());
        } else {
            schedule.slots.push_back(detail::plan_slot(constants, omega_bar, scenario.info, graph,
                                                       weights, covariances,
                                                       /*advance_beliefs=*/!last));
        }
        prev_constants = constants;
        prev_omega_bar = omega_bar;
    }
    return schedule;
}

}  // namespace rtpg
