// Analytic characterizations of expected demand, demand variance, aggregate
// utility and welfare for the symmetric closed-form strategies, plus the
// large-population behavior-model ratios.
//
// The demand-variance and expected utility/welfare formulas are stated for
// sigma-correlated priors with unit diagonal variance; for a diagonal
// variance sigma_ii != 1 the demand variance scales by sigma_ii (strategies
// depend only on the correlation ratio).  The utility/welfare
// characterizations additionally require omega_bar = 0; outside that regime
// only Monte Carlo estimates are available.
#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "rtpg/equilibrium.hpp"
#include "rtpg/errors.hpp"
#include "rtpg/model.hpp"

namespace rtpg {

/// Expected per-capita demand b (g_bar - omega_bar mu); identical across the
/// private and complete information regimes because b is.
inline double expected_demand(double b, double g_bar, double omega_bar, double mu) {
    return b * (g_bar - omega_bar * mu);
}

/// Variance of per-capita demand under private information (unit-diagonal
/// sigma-correlated prior): ((1 + (n-1) sigma) / n) a^2.
inline double demand_variance_private(double a, double sigma, int n) {
    if (n < 1) throw InvalidParameter("demand_variance_private: n must be >= 1");
    if (!(sigma >= 0.0 && sigma <= 1.0))
        throw InvalidParameter("demand_variance_private: sigma must lie in [0, 1]");
    const double nn = static_cast<double>(n);
    return (1.0 + (nn - 1.0) * sigma) / nn * a * a;
}

/// Variance of per-capita demand under complete information:
/// ((n-1) / n^2) a^2.
inline double demand_variance_complete(double a, int n) {
    if (n < 1) throw InvalidParameter("demand_variance_complete: n must be >= 1");
    const double nn = static_cast<double>(n);
    return (nn - 1.0) / (nn * nn) * a * a;
}

/// Sensitivity of the large-population private-information demand variance to
/// the correlation coefficient: (2 alpha - n lambda sigma) / (n lambda sigma
/// + 2 alpha)^3.  Positive below sigma = 2 alpha / (n lambda), negative above.
inline double variance_sensitivity_private(double sigma, double lambda, double alpha, int n) {
    const double u = static_cast<double>(n) * lambda * sigma + 2.0 * alpha;
    return (2.0 * alpha - static_cast<double>(n) * lambda * sigma) / (u * u * u);
}

/// Expected per-capita aggregate utility for symmetric strategies
/// s_i = a (g_i - g_bar) + b g_bar at omega_bar = 0:
///   (b - (gamma + alpha) b^2) g_bar^2
///     - (((n-1)/n) gamma sigma + gamma/n + alpha) a^2 + a.
inline double expected_aggregate_utility(double a, double b, double gamma, double alpha,
                                         double sigma, int n, double g_bar) {
    const double nn = static_cast<double>(n);
    const double quadratic = (b - (gamma + alpha) * b * b) * g_bar * g_bar;
    const double spread = ((nn - 1.0) / nn * gamma * sigma + gamma / nn + alpha) * a * a;
    return quadratic - spread + a;
}

/// Expected per-capita welfare at omega_bar = 0: the aggregate-utility form
/// with gamma replaced by kappa.
inline double expected_welfare(double a, double b, double kappa, double alpha, double sigma,
                               int n, double g_bar) {
    return expected_aggregate_utility(a, b, kappa, alpha, sigma, n, g_bar);
}

/// Large-population ratios between the behavior models (independent of n,
/// g_bar and sigma in the limit).
struct LargePopulationRatios {
    double demand_selfish_vs_altruistic;     // 2 (gamma + alpha) / (gamma + 2 alpha)
    double demand_welfare_vs_altruistic;     // (gamma + alpha) / (kappa + alpha)
    double demand_selfish_vs_welfare;        // 2 (kappa + alpha) / (gamma + 2 alpha)
    double utility_selfish_vs_altruistic;    // (4a^2 + 4ag) / (4a^2 + 4ag + g^2)
    double utility_welfare_vs_altruistic;    // (g + a)(2k + a - g) / (k + a)^2
    double welfare_selfish_vs_welfare;       // (4a^2 + 4ag + 4k(g - k)) / (4a^2 + 4ag + g^2)
    double welfare_altruistic_vs_welfare;    // (k + a)(2g + a - k) / (g + a)^2
};

inline LargePopulationRatios large_population_ratios(double gamma, double kappa, double alpha) {
    if (!(gamma > 0.0) || !(kappa > 0.0) || !(alpha > 0.0))
        throw InvalidParameter("large_population_ratios: parameters must be > 0");
    LargePopulationRatios r;
    r.demand_selfish_vs_altruistic = 2.0 * (gamma + alpha) / (gamma + 2.0 * alpha);
    r.demand_welfare_vs_altruistic = (gamma + alpha) / (kappa + alpha);
    r.demand_selfish_vs_welfare = 2.0 * (kappa + alpha) / (gamma + 2.0 * alpha);
    r.utility_selfish_vs_altruistic =
        (4.0 * alpha * alpha + 4.0 * alpha * gamma) /
        (4.0 * alpha * alpha + 4.0 * alpha * gamma + gamma * gamma);
    r.utility_welfare_vs_altruistic =
        (gamma + alpha) * (2.0 * kappa + alpha - gamma) / ((kappa + alpha) * (kappa + alpha));
    r.welfare_selfish_vs_welfare =
        (4.0 * alpha * alpha + 4.0 * alpha * gamma + 4.0 * kappa * (gamma - kappa)) /
        (4.0 * alpha * alpha + 4.0 * alpha * gamma + gamma * gamma);
    r.welfare_altruistic_vs_welfare =
        (kappa + alpha) * (2.0 * gamma + alpha - kappa) / ((gamma + alpha) * (gamma + alpha));
    return r;
}

/// Analytic predictions for one (behavior, information-regime) pair, scaled
/// to the supplied prior diagonal.  Utility/welfare entries are present only
/// at omega_bar = 0, where their characterizations hold.
struct AnalyticReport {
    Behavior behavior;
    InfoRegime info;
    double sigma;
    double sigma_diag;
    int n;
    double g_bar;
    double omega_bar;
    double expected_demand_per_capita;
    double demand_variance;
    std::optional<double> expected_utility_per_capita;
    std::optional<double> expected_welfare_per_capita;
};

inline AnalyticReport analytic_report(Behavior behavior, InfoRegime info, double gamma,
                                      double kappa, double alpha, double sigma,
                                      double sigma_diag, int n, double g_bar,
                                      double omega_bar) {
    const BehaviorConstants c = behavior_constants(behavior, gamma, kappa, alpha, n);
    const ClosedFormCoefficients cf = info == InfoRegime::Private
                                          ? closed_form_private(c, sigma, n)
                                          : closed_form_complete(c, n);
    AnalyticReport rep{behavior, info,  sigma, sigma_diag, n, g_bar, omega_bar,
                       0.0,      0.0,   std::nullopt, std::nullopt};
    rep.expected_demand_per_capita = expected_demand(cf.b, g_bar, omega_bar, c.mu);
    rep.demand_variance = sigma_diag * (info == InfoRegime::Private
                                            ? demand_variance_private(cf.a, sigma, n)
                                            : demand_variance_complete(cf.a, n));
    if (omega_bar == 0.0) {
        // The a-terms of the utility/welfare characterizations scale with the
        // prior diagonal variance; the g_bar^2 term does not.
        const auto scaled = [&](double price_coeff) {
            const double quadratic = (cf.b - (price_coeff + alpha) * cf.b * cf.b) * g_bar * g_bar;
            const double nn = static_cast<double>(n);
            const double spread =
                ((nn - 1.0) / nn * price_coeff * sigma + price_coeff / nn + alpha) * cf.a * cf.a;
            return quadratic + sigma_diag * (cf.a - spread);
        };
        rep.expected_utility_per_capita = scaled(gamma);
        rep.expected_welfare_per_capita = scaled(kappa);
    }
    return rep;
}

}  // namespace rtpg
