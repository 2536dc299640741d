#include <catch2/catch_amalgamated.hpp>

#include "rtpg/model.hpp"
#include "rtpg/equilibrium.hpp"
#include "rtpg/rng.hpp"

using namespace rtpg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("behavior constants per model", "[model]") {
    SECTION("selfish") {
        const auto c = behavior_constants(Behavior::Selfish, 1.2, 1.0, 1.0, 3);
        CHECK_THAT(c.lambda, WithinAbs(0.4, 1e-15));
        CHECK_THAT(c.mu, WithinAbs(0.4, 1e-15));
        CHECK_THAT(c.tau, WithinAbs(0.4, 1e-15));
        CHECK_THAT(c.rho, WithinRel(1.0 / 2.8, 1e-15));
    }
    SECTION("welfare") {
        const auto c = behavior_constants(Behavior::Welfare, 1.2, 1.0, 1.0, 3);
        CHECK_THAT(c.lambda, WithinRel(2.0 / 3.0, 1e-15));
        CHECK(c.mu == 0.0);
        CHECK_THAT(c.tau, WithinRel(1.0 / 3.0, 1e-15));
        CHECK_THAT(c.rho, WithinRel(1.0 / (2.0 * (1.0 / 3.0 + 1.0)), 1e-15));
    }
    SECTION("altruistic") {
        const auto c = behavior_constants(Behavior::Altruistic, 1.2, 1.0, 1.0, 3);
        CHECK_THAT(c.lambda, WithinAbs(0.8, 1e-15));
        CHECK_THAT(c.mu, WithinAbs(0.4, 1e-15));
        CHECK_THAT(c.tau, WithinAbs(0.4, 1e-15));
    }
    SECTION("altruistic and welfare coincide at gamma = kappa, omega_bar = 0") {
        const auto u = behavior_constants(Behavior::Altruistic, 1.0, 1.0, 0.7, 5);
        const auto w = behavior_constants(Behavior::Welfare, 1.0, 1.0, 0.7, 5);
        CHECK_THAT(u.lambda, WithinRel(w.lambda, 1e-15));
        CHECK_THAT(u.tau, WithinRel(w.tau, 1e-15));
        // mu differs, but is inert when omega_bar = 0.
        CHECK_THAT(best_response(u, 12.0, 0.0, 7.0), WithinRel(best_response(w, 12.0, 0.0, 7.0), 1e-15));
    }
    SECTION("invalid parameters") {
        CHECK_THROWS_AS(behavior_constants(Behavior::Selfish, 0.0, 1.0, 1.0, 3), InvalidParameter);
        CHECK_THROWS_AS(behavior_constants(Behavior::Selfish, 1.0, -2.0, 1.0, 3), InvalidParameter);
        CHECK_THROWS_AS(behavior_constants(Behavior::Selfish, 1.0, 1.0, 1.0, 0), InvalidParameter);
    }
}

TEST_CASE("price", "[model]") {
    CHECK(price(0.0, 0.0, 1.7, 4) == 0.0);
    CHECK_THAT(price(30.0, 0.0, 1.2, 3), WithinRel(12.0, 1e-15));
    CHECK_THAT(price(10.0, -10.0, 2.0, 5), WithinAbs(0.0, 1e-15));

    SECTION("linear in load and renewable term") {
        Rng rng(7);
        for (int k = 0; k < 50; ++k) {
            const double l1 = 40.0 * rng.uniform(), l2 = 40.0 * rng.uniform();
            const double w1 = 10.0 * (rng.uniform() - 0.5), w2 = 10.0 * (rng.uniform() - 0.5);
            const double c1 = rng.uniform(), c2 = 1.7;
            const double lhs = price(c1 * l1 + c2 * l2, c1 * w1 + c2 * w2, 1.2, 7);
            const double rhs = c1 * price(l1, w1, 1.2, 7) + c2 * price(l2, w2, 1.2, 7);
            CHECK_THAT(lhs, WithinAbs(rhs, 1e-12));
        }
    }
}

TEST_CASE("individual utility", "[model]") {
    CHECK(utility(0.0, 25.0, 30.0, 1.5, 1.2, 1.0, 3) == 0.0);
    CHECK_THAT(utility(1.0, 1.0, 3.0, 0.0, 1.0, 1.0, 1), WithinRel(1.0, 1e-15));

    SECTION("argmax with zero price slope is g / (2 alpha)") {
        const double g = 5.0, alpha = 0.8;
        // grid-scan oracle around the stationary point
        double best_l = 0.0, best_u = -1e300;
        for (int k = 0; k <= 20000; ++k) {
            const double l = 8.0 * k / 20000.0;
            const double u = utility(l, l, g, 0.0, 1e-300, alpha, 1);
            if (u > best_u) { best_u = u; best_l = l; }
        }
        CHECK_THAT(best_l, WithinAbs(g / (2.0 * alpha), 1e-3));
    }

    SECTION("strictly concave; argmax matches best response when others known") {
        const auto c = behavior_constants(Behavior::Selfish, 1.2, 1.0, 1.0, 4);
        const double g = 20.0, others = 18.0, omega = 0.6;
        // numeric argmax of own utility holding others' total fixed
        double best_l = 0.0, best_u = -1e300;
        for (int k = 0; k <= 400000; ++k) {
            const double l = 12.0 * k / 400000.0;
            const double u = utility(l, l + others, g, omega, 1.2, 1.0, 4);
            if (u > best_u) { best_u = u; best_l = l; }
        }
        CHECK_THAT(best_l, WithinAbs(best_response(c, g, omega, others), 1e-4));
        // second difference is negative everywhere
        const double h = 0.25;
        for (double l = 0.5; l < 10.0; l += 1.0) {
            const double second = utility(l + h, l + h + others, g, omega, 1.2, 1.0, 4) -
                                  2.0 * utility(l, l + others, g, omega, 1.2, 1.0, 4) +
                                  utility(l - h, l - h + others, g, omega, 1.2, 1.0, 4);
            CHECK(second < 0.0);
        }
    }
}

TEST_CASE("system metrics", "[model]") {
    SECTION("all zero consumption") {
        const Vector zero = Vector::Zero(4);
        const Vector g = Vector::Constant(4, 30.0);
        const auto m = system_metrics(zero, 2.5, 1.2, 1.0, 1.0, g);
        CHECK(m.aggregate_utility == 0.0);
        CHECK(m.net_revenue == 0.0);
        CHECK(m.welfare == 0.0);
        CHECK(m.cost == 0.0);
    }
    SECTION("two-agent hand-computed case") {
        Vector l(2), g(2);
        l << 1.0, 1.0;
        g << 3.0, 3.0;
        const auto m = system_metrics(l, 0.0, 1.0, 1.0, 1.0, g);
        CHECK_THAT(m.aggregate_utility, WithinRel(2.0, 1e-15));
        CHECK_THAT(m.cost, WithinRel(2.0, 1e-15));
        CHECK_THAT(m.net_revenue, WithinAbs(0.0, 1e-15));
        CHECK_THAT(m.welfare, WithinRel(2.0, 1e-15));
    }
    SECTION("welfare identity holds for random inputs") {
        Rng rng(11);
        for (int k = 0; k < 100; ++k) {
            const int n = 1 + static_cast<int>(rng.uniform() * 6);
            Vector l(n), g(n);
            for (int i = 0; i < n; ++i) {
                l[i] = 10.0 * (rng.uniform() - 0.2);
                g[i] = 40.0 * rng.uniform();
            }
            const double omega = 6.0 * (rng.uniform() - 0.5);
            const auto m = system_metrics(l, omega, 0.3 + rng.uniform(), 0.3 + rng.uniform(),
                                          0.3 + rng.uniform(), g);
            CHECK(m.welfare == m.aggregate_utility + m.net_revenue);
        }
    }
}

TEST_CASE("per-slot parameters and scenario validation", "[model]") {
    SECTION("scalar broadcasts, sequences are per slot") {
        const PerSlot constant(1.5);
        CHECK(constant.at(0) == 1.5);
        CHECK(constant.at(4) == 1.5);
        const PerSlot seq(std::vector<double>{1.0, 2.0, 3.0});
        CHECK(seq.at(2) == 3.0);
        CHECK_THROWS(seq.at(3));
    }
    SECTION("sigma correlation bounds") {
        CHECK_THROWS_AS((SigmaCorrelation{1.5, 1.0}).covariance(3), InvalidParameter);
        CHECK_THROWS_AS((SigmaCorrelation{-0.1, 1.0}).covariance(3), InvalidParameter);
        const Matrix cov = SigmaCorrelation{0.5, 4.0}.covariance(3);
        CHECK(cov(0, 0) == 4.0);
        CHECK(cov(0, 1) == 2.0);
    }
    SECTION("graph required exactly for action sharing") {
        Scenario s;
        s.prior = PreferencePrior::sigma_correlated(4, {0.0, 4.0});
        s.horizon = 3;
        s.info = InfoModel::ActionSharing;
        CHECK_THROWS_AS(s.validate(), InvalidParameter);
        Rng rng(3);
        s.graph = CommunicationGraph::random_geometric(4, 3.0, 5.0, 2.0, rng);
        CHECK_NOTHROW(s.validate());
        s.info = InfoModel::Private;
        CHECK_THROWS_AS(s.validate(), InvalidParameter);
        s.graph.reset();
        CHECK_NOTHROW(s.validate());
    }
    SECTION("per-slot sequence length must match horizon") {
        Scenario s;
        s.prior = PreferencePrior::sigma_correlated(2, {0.0, 1.0});
        s.horizon = 3;
        s.policy.gamma = PerSlot(std::vector<double>{1.0, 2.0});
        CHECK_THROWS_AS(s.validate(), InvalidParameter);
        s.policy.gamma = PerSlot(std::vector<double>{1.0, 2.0, 3.0});
        CHECK_NOTHROW(s.validate());
    }
}
