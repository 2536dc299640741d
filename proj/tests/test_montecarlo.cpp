#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rtpg/metrics.hpp"
#include "rtpg/montecarlo.hpp"

using namespace rtpg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Scenario fig_scenario(int n, Behavior behavior, InfoModel info, int horizon, double sigma,
                      double diag, std::uint64_t seed) {
    Scenario s;
    s.prior = PreferencePrior::sigma_correlated(n, {sigma, diag});
    s.horizon = horizon;
    s.behavior = behavior;
    s.info = info;
    s.forecast.omega_bar = 0.0;
    s.forecast.omega_std = 2.0;
    s.seed = seed;
    return s;
}

/// 3-standard-error band for a sample variance of (approximately) Gaussian data.
double variance_band(double sample_variance, long runs) {
    return 3.0 * sample_variance * std::sqrt(2.0 / static_cast<double>(runs - 1));
}

}  // namespace

TEST_CASE("preference sampling", "[montecarlo]") {
    SECTION("all-zero covariance is degenerate at the mean") {
        PreferencePrior prior;
        prior.g_bar = 30.0;
        prior.covariance = Matrix::Zero(3, 3);
        Rng rng(5);
        const Vector g = sample_preferences(prior, rng);
        CHECK(g == Vector::Constant(3, 30.0));
    }
    SECTION("sample moments match the prior within 3 standard errors") {
        const auto prior = PreferencePrior::sigma_correlated(3, {0.3, 4.0});
        const PreferenceSampler sampler(prior);
        Rng rng(123);
        const int runs = 100000;
        RunningStat mean0;
        double sum0 = 0, sum1 = 0, sum00 = 0, sum11 = 0, sum01 = 0;
        for (int k = 0; k < runs; ++k) {
            const Vector g = sampler.sample(rng);
            mean0.add(g[0]);
            sum0 += g[0];
            sum1 += g[1];
            sum00 += g[0] * g[0];
            sum11 += g[1] * g[1];
            sum01 += g[0] * g[1];
        }
        CHECK(std::abs(mean0.mean - 30.0) <= 3.0 * mean0.std_error());
        const double m0 = sum0 / runs, m1 = sum1 / runs;
        const double v0 = sum00 / runs - m0 * m0;
        const double v1 = sum11 / runs - m1 * m1;
        const double c01 = sum01 / runs - m0 * m1;
        const double corr = c01 / std::sqrt(v0 * v1);
        const double corr_se = (1.0 - 0.3 * 0.3) / std::sqrt(static_cast<double>(runs));
        CHECK(std::abs(corr - 0.3) <= 3.0 * corr_se);
    }
    SECTION("slightly indefinite covariance is rescued by the jitter retry") {
        PreferencePrior prior;
        prior.g_bar = 30.0;
        prior.covariance = Matrix::Zero(2, 2);
        prior.covariance << 1.0, 1.0 + 5e-13, 1.0 + 5e-13, 1.0;  // eigenvalue -5e-13
        Rng rng(1);
        CHECK_NOTHROW(sample_preferences(prior, rng));
    }
    SECTION("genuinely non-psd covariance rejected") {
        // passes every pairwise Cauchy-Schwarz bound but is indefinite
        PreferencePrior prior;
        prior.g_bar = 30.0;
        prior.covariance = Matrix::Zero(3, 3);
        prior.covariance << 1.0, 0.9, 0.9,
                            0.9, 1.0, -0.9,
                            0.9, -0.9, 1.0;
        Rng rng(1);
        CHECK_THROWS_AS(sample_preferences(prior, rng), InvalidParameter);
    }
}

TEST_CASE("time zone runs", "[montecarlo]") {
    SECTION("identical seeds give identical traces") {
        Scenario s = fig_scenario(6, Behavior::Selfish, InfoModel::Broadcast, 4, 0.3, 4.0, 77);
        const SimulationTrace t1 = run_time_zone(s);
        const SimulationTrace t2 = run_time_zone(s);
        REQUIRE(t1.slots.size() == t2.slots.size());
        CHECK(t1.preferences == t2.preferences);
        for (std::size_t h = 0; h < t1.slots.size(); ++h) {
            CHECK(t1.slots[h].consumption == t2.slots[h].consumption);
            CHECK(t1.slots[h].omega == t2.slots[h].omega);
            CHECK(t1.slots[h].welfare == t2.slots[h].welfare);
        }
    }
    SECTION("single-slot private run hits the closed form at the realized draw") {
        Scenario s = fig_scenario(8, Behavior::Altruistic, InfoModel::Private, 1, 0.4, 4.0, 3);
        s.forecast.omega_bar = 1.3;
        const SimulationTrace t = run_time_zone(s);
        const auto c = s.constants_at(0);
        const auto cf = closed_form_private(c, 0.4, 8);
        for (int i = 0; i < 8; ++i)
            CHECK_THAT(t.slots[0].consumption[i],
                       WithinAbs(cf.evaluate(t.preferences[i], 30.0, 1.3, c.mu), 1e-9));
    }
    SECTION("broadcast runs play the complete-information strategy from slot 2") {
        Scenario s = fig_scenario(7, Behavior::Welfare, InfoModel::Broadcast, 3, 0.2, 4.0, 9);
        const SimulationTrace t = run_time_zone(s);
        const auto c = s.constants_at(0);
        const auto cf = closed_form_complete(c, 7);
        const double realized_mean = t.preferences.mean();
        for (std::size_t h = 1; h < t.slots.size(); ++h)
            for (int i = 0; i < 7; ++i)
                CHECK_THAT(t.slots[h].consumption[i],
                           WithinAbs(cf.evaluate(t.preferences[i], realized_mean, 0.0, c.mu), 1e-8));
    }
    SECTION("slot records are internally consistent") {
        Scenario s = fig_scenario(5, Behavior::Selfish, InfoModel::Broadcast, 3, 0.5, 4.0, 21);
        const SimulationTrace t = run_time_zone(s);
        for (const SlotRecord& rec : t.slots) {
            CHECK_THAT(rec.total, WithinRel(rec.consumption.sum(), 1e-14));
            CHECK(rec.welfare == rec.aggregate_utility + rec.net_revenue);
            CHECK_THAT(rec.price, WithinRel(price(rec.total, rec.omega, 1.2, 5), 1e-14));
        }
    }
    SECTION("extreme draws go negative and are only counted, never clamped") {
        Scenario s = fig_scenario(10, Behavior::Selfish, InfoModel::Private, 1, 0.0, 9.0, 5);
        s.prior.g_bar = 1.0;  // most of the prior mass sits below zero consumption
        const EnsembleStats stats = ensemble(s, 200);
        CHECK(stats.negative_consumptions > 0);
    }
}

TEST_CASE("ensemble statistics", "[montecarlo]") {
    SECTION("running stat basics") {
        RunningStat st;
        st.add(1.0);
        CHECK(std::isnan(st.variance()));
        st.add(3.0);
        CHECK_THAT(st.mean, WithinRel(2.0, 1e-15));
        CHECK_THAT(st.variance(), WithinRel(2.0, 1e-15));
        CHECK_THAT(st.std_error(), WithinRel(1.0, 1e-15));
    }
    SECTION("demand variance matches the private-information formula") {
        const int n = 20, runs = 4000;
        Scenario s = fig_scenario(n, Behavior::Selfish, InfoModel::Private, 1, 0.3, 1.0, 4242);
        const EnsembleStats stats = ensemble(s, runs);
        const auto c = s.constants_at(0);
        const auto cf = closed_form_private(c, 0.3, n);
        const double predicted = demand_variance_private(cf.a, 0.3, n);
        const double measured = stats.slots[0].demand.variance();
        CHECK(std::abs(measured - predicted) <= variance_band(measured, runs));
    }
    SECTION("broadcast demand variance tracks the mean-estimate projection") {
        // From slot 2 the only randomness left in total demand is the realized
        // population mean, entering through the b coefficient.
        const int n = 12, runs = 4000;
        Scenario s = fig_scenario(n, Behavior::Selfish, InfoModel::Broadcast, 2, 0.3, 1.0, 777);
        const EnsembleStats stats = ensemble(s, runs);
        const auto c = s.constants_at(0);
        const auto cf = closed_form_complete(c, n);
        const double mean_variance = (1.0 + (n - 1) * 0.3) / n;  // Var of the realized mean
        const double predicted = cf.b * cf.b * mean_variance;
        const double measured = stats.slots[1].demand.variance();
        CHECK(std::abs(measured - predicted) <= variance_band(measured, runs));
    }
    SECTION("mean aggregate utility matches the analytic characterization") {
        const int n = 20, runs = 4000;
        Scenario s = fig_scenario(n, Behavior::Selfish, InfoModel::Private, 1, 0.3, 1.0, 99);
        s.prior.g_bar = 30.0;
        const EnsembleStats stats = ensemble(s, runs);
        const auto c = s.constants_at(0);
        const auto cf = closed_form_private(c, 0.3, n);
        const double predicted = expected_aggregate_utility(cf.a, cf.b, 1.2, 1.0, 0.3, n, 30.0);
        const auto& ust = stats.slots[0].utility;
        CHECK(std::abs(ust.mean - predicted) <= 3.0 * ust.std_error());
    }
    SECTION("demand forecasts do not depend on the information model") {
        const int n = 15, runs = 3000;
        Scenario p = fig_scenario(n, Behavior::Altruistic, InfoModel::Private, 2, 0.4, 4.0, 1001);
        Scenario b = p;
        b.info = InfoModel::Broadcast;
        const EnsembleStats sp = ensemble(p, runs);
        const EnsembleStats sb = ensemble(b, runs);
        const auto& dp = sp.slots[1].demand;
        const auto& db = sb.slots[1].demand;
        const double gap = std::abs(dp.mean - db.mean);
        const double band = 3.0 * std::sqrt(dp.std_error() * dp.std_error() +
                                            db.std_error() * db.std_error());
        CHECK(gap <= band);
    }
    SECTION("thread count never changes any output bit") {
        Scenario s = fig_scenario(6, Behavior::Selfish, InfoModel::Broadcast, 3, 0.3, 4.0, 31337);
        const EnsembleStats serial = ensemble(s, 128, 1);
        const EnsembleStats threaded = ensemble(s, 128, 4);
        REQUIRE(serial.slots.size() == threaded.slots.size());
        for (std::size_t h = 0; h < serial.slots.size(); ++h) {
            CHECK(serial.slots[h].demand.mean == threaded.slots[h].demand.mean);
            CHECK(serial.slots[h].demand.m2 == threaded.slots[h].demand.m2);
            CHECK(serial.slots[h].welfare.mean == threaded.slots[h].welfare.mean);
            CHECK(serial.slots[h].welfare.m2 == threaded.slots[h].welfare.m2);
        }
    }
    SECTION("information ordering of demand variance, smoke version") {
        const int n = 10, runs = 600;
        Rng graph_rng(0);
        const auto graph = CommunicationGraph::random_geometric(n, 3.0, 5.0, 2.0, graph_rng);
        Scenario p = fig_scenario(n, Behavior::Selfish, InfoModel::Private, 5, 0.0, 4.0, 2024);
        Scenario as = p;
        as.info = InfoModel::ActionSharing;
        as.graph = graph;
        Scenario b = p;
        b.info = InfoModel::Broadcast;
        const auto avg_variance = [&](const Scenario& s) {
            const EnsembleStats stats = ensemble(s, runs);
            double total = 0.0;
            for (const auto& slot : stats.slots) total += slot.demand.variance();
            return total / static_cast<double>(stats.slots.size());
        };
        const double vp = avg_variance(p);
        const double vas = avg_variance(as);
        const double vb = avg_variance(b);
        CHECK(vp >= vas);
        CHECK(vas >= vb);
    }
}
