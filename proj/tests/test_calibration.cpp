/*
 * Copyright (C) 2022 epictrl contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS
 * OF ANY KIND, either express or implied. See the License for the
 * specific language governing permissions and limitations under the
 * License.
 */
#include "epictrl/calibration.hpp"

#include "support/toys.hpp"

#include <doctest.h>

#include <cmath>

using namespace epictrl;
using namespace epictrl::testing;

TEST_CASE("seven-day smoothing") {
    SUBCASE("constant series is unchanged") {
        const Eigen::VectorXd c = Eigen::VectorXd::Constant(20, 3.5);
        CHECK((smooth_7day(c) - c).cwiseAbs().maxCoeff() < 1e-14);
    }

    SUBCASE("impulse spreads into a unit plateau") {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(21);
        x[10] = 7.0;
        const Eigen::VectorXd s = smooth_7day(x);
        for (int i = 7; i <= 13; ++i) {
            CHECK(s[i] == doctest::Approx(1.0).epsilon(1e-14));
        }
        CHECK(s[6] == 0.0);
        CHECK(s[14] == 0.0);
    }

    SUBCASE("weekly sawtooth is crushed") {
        const double weekday[7] = {0.30, 0.15, 0.05, -0.05, -0.10, -0.45, 0.10};
        Eigen::VectorXd x(140), trend(140);
        for (int i = 0; i < 140; ++i) {
            trend[i] = 100.0 + 2.0 * i;
            x[i] = trend[i] * (1.0 + 0.8 * weekday[i % 7]);
        }
        const Eigen::VectorXd s = smooth_7day(x);
        double raw_dev = 0.0, smooth_dev = 0.0;
        for (int i = 3; i < 137; ++i) {
            raw_dev += std::pow(x[i] - trend[i], 2);
            smooth_dev += std::pow(s[i] - trend[i], 2);
        }
        CHECK(raw_dev > 25.0 * smooth_dev);
    }

    SUBCASE("totals preserved up to edge effects") {
        Eigen::VectorXd x(30);
        for (int i = 0; i < 30; ++i) {
            x[i] = 10.0 + 9.0 * std::sin(0.9 * i);
        }
        const Eigen::VectorXd s = smooth_7day(x);
        CHECK(std::abs(s.sum() - x.sum()) <= 3.0 * x.maxCoeff());
    }

    SUBCASE("short series is an error") {
        CHECK_THROWS_AS(smooth_7day(Eigen::VectorXd::Zero(6)), HorizonError);
    }
}

TEST_CASE("historical lockdown approximation") {
    const double lb = 0.3;

    CHECK(lockdown_path(10, lb) == 1.0);
    CHECK(lockdown_path(16, lb) == 1.0);
    CHECK(lockdown_path(50, lb) == doctest::Approx(lb));
    CHECK(lockdown_path(103, lb) == doctest::Approx(lb));
    CHECK(lockdown_path(104, lb) == doctest::Approx(lb).epsilon(1e-12));

    SUBCASE("phase two declines from one to the floor") {
        double prev = lockdown_path(16, lb);
        for (int t = 17; t <= 33; ++t) {
            const double cur = lockdown_path(t, lb);
            CHECK(cur <= prev + 1e-12);
            prev = cur;
        }
        CHECK(lockdown_path(33, lb) == doctest::Approx(lb).epsilon(1e-12));
    }

    SUBCASE("continuous on t >= 17 and recovering in phase four") {
        for (int t = 17; t <= 700; ++t) {
            CHECK(std::abs(lockdown_path(t, lb) - lockdown_path(t - 1, lb)) < 0.06);
        }
        double prev = lockdown_path(104, lb);
        for (int t = 105; t <= 700; ++t) {
            const double cur = lockdown_path(t, lb);
            CHECK(cur >= prev - 1e-12);
            CHECK(cur <= 1.0);
            prev = cur;
        }
        // slow reopening: roughly 60% of the economy by Fall 2021
        CHECK(lockdown_path(560, lb) > 0.55);
        CHECK(lockdown_path(560, lb) < 0.75);
    }

    SUBCASE("bad arguments") {
        CHECK_THROWS_AS(lockdown_path(0, lb), ParameterError);
        LockdownShape shape;
        shape.breaks = {32, 16, 103};
        CHECK_THROWS_AS(lockdown_path(5, lb, shape), ParameterError);
    }
}

TEST_CASE("test-path extrapolation") {
    SUBCASE("exact quadratic is recovered") {
        Eigen::VectorXd x(40);
        for (int i = 0; i < 40; ++i) {
            const double t = i + 1;
            x[i] = 2.0 + 0.3 * t + 0.01 * t * t;
        }
        const DateSeries path = extrapolate_tests(x, 80);
        for (int t = 41; t <= 80; ++t) {
            const double expected = 2.0 + 0.3 * t + 0.01 * t * t;
            CHECK(path(t) == doctest::Approx(expected).epsilon(1e-9));
        }
    }

    SUBCASE("linear input has a vanishing curvature") {
        Eigen::VectorXd x(60);
        for (int i = 0; i < 60; ++i) {
            x[i] = 5.0 + 0.2 * (i + 1);
        }
        const DateSeries path = extrapolate_tests(x, 120);
        // second difference of the out-of-sample path is the curvature
        const double dd = (path(110) - path(109)) - (path(109) - path(108));
        CHECK(std::abs(dd) < 1e-10);
    }

    SUBCASE("continuous at the sample boundary") {
        Eigen::VectorXd x(50);
        for (int i = 0; i < 50; ++i) {
            const double t = i + 1;
            x[i] = 1.0 + 0.05 * t * t + 2.0 * std::sin(0.5 * t);
        }
        const DateSeries path = extrapolate_tests(x, 100);
        const double slope = std::abs(path(52) - path(51));
        CHECK(std::abs(path(51) - path(50)) < std::max(1.0, 3.0 * slope) + 3.0);
    }

    SUBCASE("negative extrapolation is floored at zero") {
        Eigen::VectorXd x(30);
        for (int i = 0; i < 30; ++i) {
            const double t = i + 1;
            x[i] = std::max(0.0, 20.0 - 0.1 * t * t);
        }
        const DateSeries path = extrapolate_tests(x, 90);
        for (int t = 31; t <= 90; ++t) {
            CHECK(path(t) >= 0.0);
        }
    }

    SUBCASE("too short") {
        CHECK_THROWS_AS(extrapolate_tests(Eigen::VectorXd::Zero(2), 10),
                        HorizonError);
    }
}

TEST_CASE("positive flow") {
    ModelParams p = toy_params(8);
    const VaccineSchedule sched = toy_schedule(p);
    (void)sched;

    SUBCASE("without tests only hospitalizations are confirmed") {
        PolicyPath policy(8); // x_bar = 0 so tau = 0
        const CompartmentGrid grid = simulate_forward(p, policy);
        const Eigen::VectorXd flow = positive_flow(grid, policy, p);
        for (int t = 1; t <= 8; ++t) {
            const double expected = p.m_i / p.t_i *
                                    (grid.I_tot(t) + grid.IT(t)) * p.population;
            CHECK(flow[t - 1] == doctest::Approx(expected).epsilon(1e-13));
        }
    }

    SUBCASE("no infections, no positives") {
        ModelParams clean = p;
        clean.e0 = 0.0;
        PolicyPath policy(8);
        policy.x_bar.values().setConstant(0.01);
        const CompartmentGrid grid = simulate_forward(clean, policy);
        const Eigen::VectorXd flow = positive_flow(grid, policy, clean);
        CHECK(flow.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("hospitalization-to-death slope") {
    SUBCASE("constructed recovery") {
        Eigen::VectorXd H(100), D(100);
        for (int i = 0; i < 100; ++i) {
            H[i] = 1000.0 + 37.0 * i;
            D[i] = 0.1705 / 7.0 * H[i];
        }
        CHECK(estimate_mh(H, D, 7) == doctest::Approx(0.1705).epsilon(1e-12));
    }

    SUBCASE("scale invariance") {
        Eigen::VectorXd H(50), D(50);
        for (int i = 0; i < 50; ++i) {
            H[i] = 500.0 + 11.0 * i;
            D[i] = 0.02 * H[i] + 3.0 * std::sin(0.3 * i);
        }
        const double base = estimate_mh(H, D, 7);
        CHECK(estimate_mh(2.0 * H, 2.0 * D, 7) ==
              doctest::Approx(base).epsilon(1e-12));
    }

    SUBCASE("zero regressor") {
        CHECK_THROWS_AS(
            estimate_mh(Eigen::VectorXd::Zero(10), Eigen::VectorXd::Ones(10), 7),
            StateError);
    }
}

namespace {

/// Synthetic observation set generated from the engine itself at theta.
ObservedSeries synthesize(const ModelParams& p, const VaccineSchedule& sched,
                          const DateSeries& lambda, const DateSeries& x_bar,
                          int days) {
    const InnerResult inner = inner_sweep(lambda, x_bar, p, sched);
    const Eigen::VectorXd pos = positive_flow(inner.grid, inner.policy, p);
    ObservedSeries data;
    data.deaths_flow.resize(days);
    data.positives_flow.resize(days);
    data.hospitalized.resize(days);
    data.tests.resize(days);
    data.smoothed = true; // bypass re-smoothing inside calibrate
    for (int t = 1; t <= days; ++t) {
        data.dates.push_back("day");
        data.deaths_flow[t - 1] =
            (inner.grid.D(t + 1) - inner.grid.D(t)) * p.population;
        data.positives_flow[t - 1] = pos[t - 1];
        data.hospitalized[t - 1] = inner.grid.H(t) * p.population;
        data.tests[t - 1] = x_bar(t) * p.population;
    }
    return data;
}

} // namespace

TEST_CASE("loss function") {
    ModelParams p = toy_params(40);
    p.kappa = 1e-12;
    const VaccineSchedule sched = toy_schedule(p);
    DateSeries lambda(40, 1.0);
    DateSeries x_bar(40, 0.0);
    for (int t = 1; t <= 40; ++t) {
        lambda(t) = 0.75 + 0.2 * std::cos(0.2 * t);
        x_bar(t) = 0.002 * t / 40.0;
    }
    const ObservedSeries data = synthesize(p, sched, lambda, x_bar, 30);

    Theta truth;
    truth.beta = p.beta_w;
    truth.gamma = p.gamma;
    truth.c = p.c;
    truth.phi_plus = p.phi_plus;

    SUBCASE("zero at the generating parameters") {
        ModelParams base = p;
        // beta_s = beta_w is enforced by Theta::apply; the toy generator
        // already satisfies it when both betas match
        base.beta_s = base.beta_w;
        const ObservedSeries from_equal =
            synthesize(base, sched, lambda, x_bar, 30);
        const LossValue v =
            loss(truth, from_equal, 0.5, base, lambda, x_bar, sched);
        CHECK(v.converged);
        CHECK(v.value == doctest::Approx(0.0).epsilon(1e-18));
    }

    SUBCASE("omega weights the two terms") {
        ObservedSeries garbled = data;
        garbled.positives_flow.array() += 1e4;
        const LossValue deaths_only =
            loss(truth, garbled, 1.0, p, lambda, x_bar, sched);
        const LossValue clean = loss(truth, data, 1.0, p, lambda, x_bar, sched);
        CHECK(deaths_only.value == doctest::Approx(clean.value).epsilon(1e-12));
        const LossValue both = loss(truth, garbled, 0.5, p, lambda, x_bar, sched);
        CHECK(both.value > deaths_only.value);
    }

    SUBCASE("auto omega balances the observed scales") {
        const double omega = auto_omega(data, 30);
        const double d2 = data.deaths_flow.head(30).squaredNorm();
        const double x2 = data.positives_flow.head(30).squaredNorm();
        CHECK(omega == doctest::Approx(x2 / (d2 + x2)).epsilon(1e-14));
    }
}

TEST_CASE("calibration search") {
    // compact instance: the loss is cheap enough for a few simplex runs
    ModelParams base = toy_params(60);
    base.kappa = 1e-12;
    base.vaccine_mean = 30.0;
    base.vaccine_variance = 15.0;
    const VaccineSchedule sched = toy_schedule(base);

    DateSeries lambda(60, 1.0);
    DateSeries x_bar(60, 0.0);
    for (int t = 1; t <= 60; ++t) {
        lambda(t) = lockdown_path(t, base.lambda_bar);
        x_bar(t) = 0.003 * std::max(0, t - 5) / 55.0;
    }

    SUBCASE("degenerate search region returns the pinned loss") {
        const ObservedSeries data = synthesize(base, sched, lambda, x_bar, 45);
        CalibrationConfig cfg;
        cfg.starts = 1;
        cfg.fit_days = 45;
        cfg.max_evaluations = 8;
        Theta pin;
        pin.beta = 0.31;
        pin.gamma = 0.21;
        pin.c = 0.52;
        pin.phi_plus = 1.1;
        cfg.bounds = {{{pin.beta, pin.beta},
                       {pin.gamma, pin.gamma},
                       {pin.c, pin.c},
                       {pin.phi_plus, pin.phi_plus}}};
        ModelParams window = base;
        window.horizon = 60;

        const CalibrationResult res = calibrate(data, cfg, window);
        const DateSeries x_fit =
            extrapolate_tests(data.tests / base.population, base.horizon);
        const LossValue direct =
            loss(pin, data, res.omega, window, lambda, x_fit, sched);
        CHECK(res.theta.beta == pin.beta);
        CHECK(res.loss == doctest::Approx(direct.value).epsilon(1e-12));
    }
}
