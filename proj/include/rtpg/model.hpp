// Core domain types and the primitive economic functions of the
// real-time-pricing consumption game: price, utilities, operator cost,
// net revenue and welfare, plus the per-behavior best-response constants.
//
// All types are immutable value objects after construction and all
// operations are pure; everything here is safe to share across threads.
#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rtpg/errors.hpp"
#include "rtpg/network.hpp"

namespace rtpg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Tags

/// What each consumer maximizes: its own utility (Selfish), the population's
/// aggregate utility (Altruistic), or aggregate utility plus operator net
/// revenue (Welfare).
enum class Behavior { Selfish, Altruistic, Welfare };

/// What consumers observe between slots: nothing beyond the initial public
/// signal (Private), their graph neighbors' consumptions (ActionSharing), or
/// the operator's announcement of total consumption (Broadcast).
enum class InfoModel { Private, ActionSharing, Broadcast };

/// The two static information regimes with closed-form strategies.
enum class InfoRegime { Private, Complete };

inline std::string tag(Behavior b) {
    switch (b) {
        case Behavior::Selfish: return "S";
        case Behavior::Altruistic: return "U";
        case Behavior::Welfare: return "W";
    }
    return "?";
}

inline std::string tag(InfoModel m) {
    switch (m) {
        case InfoModel::Private: return "P";
        case InfoModel::ActionSharing: return "AS";
        case InfoModel::Broadcast: return "B";
    }
    return "?";
}

inline std::string tag(InfoRegime r) {
    return r == InfoRegime::Private ? "private" : "complete";
}

inline Behavior behavior_from_tag(const std::string& s) {
    if (s == "S") return Behavior::Selfish;
    if (s == "U") return Behavior::Altruistic;
    if (s == "W") return Behavior::Welfare;
    throw InvalidParameter("unknown behavior tag '" + s + "' (expected S, U or W)");
}

inline InfoModel info_from_tag(const std::string& s) {
    if (s == "P") return InfoModel::Private;
    if (s == "AS") return InfoModel::ActionSharing;
    if (s == "B") return InfoModel::Broadcast;
    throw InvalidParameter("unknown info tag '" + s + "' (expected P, AS or B)");
}

// ---------------------------------------------------------------------------
// Per-slot parameter sequences

/// A parameter that is either constant over the horizon or given per slot.
class PerSlot {
  public:
    PerSlot(double value) : values_{value} {}  // NOLINT: implicit by design
    PerSlot(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) throw InvalidParameter("PerSlot: empty value sequence");
    }

    /// Value at 0-based slot index; a scalar broadcasts to every slot.
    double at(int slot) const {
        if (values_.size() == 1) return values_.front();
        return values_.at(static_cast<std::size_t>(slot));
    }

    bool constant() const { return values_.size() == 1; }
    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }

  private:
    std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Exogenous model inputs

/// Operator pricing policy: price slope gamma, quadratic generation cost
/// coefficient kappa, and consumption-utility decay alpha (all per-capita
/// normalized where applicable, all strictly positive).
struct PricingPolicy {
    PerSlot gamma{1.2};
    PerSlot kappa{1.0};
    PerSlot alpha{1.0};

    void validate(int horizon) const {
        check_sequence(gamma, horizon, "gamma");
        check_sequence(kappa, horizon, "kappa");
        check_sequence(alpha, horizon, "alpha");
    }

  private:
    static void check_sequence(const PerSlot& p, int horizon, const char* name) {
        if (!p.constant() && static_cast<int>(p.size()) != horizon)
            throw InvalidParameter(std::string(name) + ": sequence length must equal the horizon");
        for (double v : p.values())
            if (!(v > 0.0)) throw InvalidParameter(std::string(name) + " must be > 0");
    }
};

/// Announced renewable adjustment: mean (any sign) and standard deviation.
struct RenewableForecast {
    PerSlot omega_bar{0.0};
    PerSlot omega_std{0.0};

    void validate(int horizon) const {
        if (!omega_bar.constant() && static_cast<int>(omega_bar.size()) != horizon)
            throw InvalidParameter("omega_bar: sequence length must equal the horizon");
        if (!omega_std.constant() && static_cast<int>(omega_std.size()) != horizon)
            throw InvalidParameter("omega_std: sequence length must equal the horizon");
        for (double v : omega_std.values())
            if (!(v >= 0.0)) throw InvalidParameter("omega_std must be >= 0");
    }
};

/// Homogeneous correlation structure: equal diagonal variance `diag` and a
/// common off-diagonal/diagonal ratio `sigma` in [0, 1].
struct SigmaCorrelation {
    double sigma = 0.0;
    double diag = 1.0;

    void validate() const {
        if (!(sigma >= 0.0 && sigma <= 1.0))
            throw InvalidParameter("SigmaCorrelation: sigma must lie in [0, 1]");
        if (!(diag > 0.0)) throw InvalidParameter("SigmaCorrelation: diag must be > 0");
    }

    Matrix covariance(int n) const {
        validate();
        if (n < 1) throw InvalidParameter("SigmaCorrelation: n must be >= 1");
        Matrix cov = Matrix::Constant(n, n, sigma * diag);
        cov.diagonal().setConstant(diag);
        return cov;
    }
};

/// Gaussian prior over the population preference vector: common mean g_bar
/// and an n x n covariance matrix (symmetric PSD, strictly positive diagonal).
struct PreferencePrior {
    double g_bar = 30.0;
    Matrix covariance;

    PreferencePrior() = default;
    PreferencePrior(double mean, Matrix cov) : g_bar(mean), covariance(std::move(cov)) {
        validate();
    }

    static PreferencePrior sigma_correlated(int n, const SigmaCorrelation& corr,
                                            double mean = 30.0) {
        return PreferencePrior(mean, corr.covariance(n));
    }

    int n() const { return static_cast<int>(covariance.rows()); }

    /// Conditional-expectation ratio sigma_ij / sigma_ii.
    double correlation_ratio(int i, int j) const {
        return covariance(i, j) / covariance(i, i);
    }

    /// Structural checks; the full PSD test happens at the Cholesky in the
    /// sampler.  Sampling tolerates a degenerate (even all-zero) covariance;
    /// the filtering machinery additionally needs strictly positive
    /// diagonals, which it enforces via validate_for_filtering().
    void validate() const {
        if (!(g_bar > 0.0)) throw InvalidParameter("PreferencePrior: g_bar must be > 0");
        if (covariance.rows() < 1 || covariance.rows() != covariance.cols())
            throw InvalidParameter("PreferencePrior: covariance must be square, n >= 1");
        if (!covariance.isApprox(covariance.transpose(), 1e-12))
            throw InvalidParameter("PreferencePrior: covariance must be symmetric");
        for (int i = 0; i < covariance.rows(); ++i)
            if (!(covariance(i, i) >= 0.0))
                throw InvalidParameter("PreferencePrior: covariance diagonal must be >= 0");
        for (int i = 0; i < covariance.rows(); ++i)
            for (int j = 0; j < covariance.cols(); ++j) {
                const double bound =
                    std::sqrt(covariance(i, i) * covariance(j, j)) + 1e-12;
                if (std::abs(covariance(i, j)) > bound)
                    throw InvalidParameter(
                        "PreferencePrior: covariance violates Cauchy-Schwarz bound");
            }
    }

    void validate_for_filtering() const {
        validate();
        for (int i = 0; i < covariance.rows(); ++i)
            if (!(covariance(i, i) > 0.0))
                throw InvalidParameter(
                    "PreferencePrior: conditioning requires strictly positive diagonal variance");
    }
};

// ---------------------------------------------------------------------------
// Behavior constants

/// Coefficients of the common best-response form
///   BR = (g_i - mu*omega_bar - lambda * E[sum of others]) / (2 (tau + alpha)),
/// with rho = 1 / (2 (tau + alpha)).
struct BehaviorConstants {
    Behavior model;
    double lambda;
    double mu;
    double tau;
    double rho;
};

inline BehaviorConstants behavior_constants(Behavior model, double gamma, double kappa,
                                            double alpha, int n) {
    if (!(gamma > 0.0) || !(kappa > 0.0) || !(alpha > 0.0))
        throw InvalidParameter("behavior_constants: gamma, kappa, alpha must be > 0");
    if (n < 1) throw InvalidParameter("behavior_constants: n must be >= 1");
    const double nn = static_cast<double>(n);
    BehaviorConstants c{model, 0.0, 0.0, 0.0, 0.0};
    switch (model) {
        case Behavior::Selfish:
            c.lambda = gamma / nn;
            c.mu = gamma / nn;
            c.tau = gamma / nn;
            break;
        case Behavior::Altruistic:
            c.lambda = 2.0 * gamma / nn;
            c.mu = gamma / nn;
            c.tau = gamma / nn;
            break;
        case Behavior::Welfare:
            c.lambda = 2.0 * kappa / nn;
            c.mu = 0.0;
            c.tau = kappa / nn;
            break;
    }
    c.rho = 1.0 / (2.0 * (c.tau + alpha));
    return c;
}

// ---------------------------------------------------------------------------
// Primitive economic functions

/// Per-unit price: (gamma / n) * (total_load + omega).
inline double price(double total_load, double omega, double gamma, int n) {
    if (n < 1) throw InvalidParameter("price: n must be >= 1");
    return gamma / static_cast<double>(n) * (total_load + omega);
}

/// Single-consumer utility: -l_i * p(L, omega) + g_i l_i - alpha l_i^2.
inline double utility(double l_i, double total_load, double g_i, double omega,
                      double gamma, double alpha, int n) {
    return -l_i * price(total_load, omega, gamma, n) + g_i * l_i - alpha * l_i * l_i;
}

/// Population-level outcomes for one slot, all evaluated on the same inputs.
struct SystemMetrics {
    double aggregate_utility;  // U = sum of individual utilities
    double net_revenue;        // NR = p * L - C
    double welfare;            // W = U + NR (exact by construction)
    double cost;               // C = (kappa / n) L^2
};

inline SystemMetrics system_metrics(const Vector& consumptions, double omega, double gamma,
                                    double kappa, double alpha, const Vector& preferences) {
    const int n = static_cast<int>(consumptions.size());
    if (preferences.size() != n)
        throw InvalidParameter("system_metrics: consumption/preference size mismatch");
    const double total = consumptions.sum();
    double aggregate = 0.0;
    for (int i = 0; i < n; ++i)
        aggregate += utility(consumptions[i], total, preferences[i], omega, gamma, alpha, n);
    const double cost = kappa / static_cast<double>(n) * total * total;
    const double revenue = price(total, omega, gamma, n) * total - cost;
    return {aggregate, revenue, aggregate + revenue, cost};
}

// ---------------------------------------------------------------------------
// Scenario and trace

/// Everything exogenous about one time zone: prior, policy, forecast,
/// horizon, behavior/information model, communication graph (action-sharing
/// only) and the RNG seed.
struct Scenario {
    PreferencePrior prior;
    PricingPolicy policy;
    RenewableForecast forecast;
    int horizon = 5;
    Behavior behavior = Behavior::Selfish;
    InfoModel info = InfoModel::Private;
    std::optional<CommunicationGraph> graph;
    std::uint64_t seed = 1;

    int n() const { return prior.n(); }

    BehaviorConstants constants_at(int slot) const {
        return behavior_constants(behavior, policy.gamma.at(slot), policy.kappa.at(slot),
                                  policy.alpha.at(slot), n());
    }

    void validate() const {
        prior.validate_for_filtering();
        if (horizon < 1) throw InvalidParameter("Scenario: horizon must be >= 1");
        policy.validate(horizon);
        forecast.validate(horizon);
        const bool needs_graph = (info == InfoModel::ActionSharing);
        if (needs_graph != graph.has_value())
            throw InvalidParameter(
                "Scenario: a communication graph is required exactly when info = AS");
        if (graph && graph->size() != n())
            throw InvalidParameter("Scenario: graph size must match the population size");
    }
};

/// Realized outcomes of one slot.
struct SlotRecord {
    Vector consumption;   // l_i for each agent
    double total;         // L
    double omega;         // realized renewable adjustment
    double price;         // realized per-unit price
    Vector utilities;     // u_i for each agent
    double aggregate_utility;
    double net_revenue;
    double welfare;       // aggregate_utility + net_revenue, exact
};

/// Full record of one simulated time zone.
struct SimulationTrace {
    Vector preferences;              // realized g (fixed over the zone)
    std::vector<SlotRecord> slots;
    long negative_consumptions = 0;  // diagnostic: strategies are affine and
                                     // may go negative for extreme draws
};

}  // namespace rtpg
