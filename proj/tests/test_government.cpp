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
#include "epictrl/government.hpp"

#include "support/fd.hpp"
#include "support/gov_oracle.hpp"
#include "support/lagrangian.hpp"
#include "support/toys.hpp"

#include <doctest.h>

#include <cmath>

using namespace epictrl;
using namespace epictrl::testing;

namespace {

/// Converged agent equilibrium plus the multiplier fixed point on a small
/// instance with a date-varying lockdown.
struct Fixture {
    ModelParams params;
    VaccineSchedule sched;
    DateSeries lambda;
    DateSeries x_bar;
    InnerResult inner;
    MultiplierPoint mult;

    explicit Fixture(int horizon) : params(toy_params(horizon)) {
        sched = toy_schedule(params);
        lambda = DateSeries(horizon, 1.0);
        x_bar = DateSeries(horizon, 0.008);
        for (int t = 1; t <= horizon; ++t) {
            lambda(t) = 0.9 - 0.04 * t;
        }
        InnerOptions opts;
        opts.tol = 1e-13;
        inner = inner_sweep(lambda, x_bar, params, sched, opts);
        mult = multiplier_fixed_point(inner.grid, inner.policy, inner.adjoints,
                                      params, sched);
    }

    LagrangianPoint point() const {
        LagrangianPoint pt;
        pt.grid = inner.grid;
        pt.agent = inner.adjoints;
        pt.policy = inner.policy;
        pt.eta = mult.eta;
        pt.chi = mult.chi;
        pt.duals = mult.duals;
        pt.gov = mult.gov;
        return pt;
    }
};

} // namespace

TEST_CASE("government objective") {
    SUBCASE("disease-free economy") {
        ModelParams p = toy_params(6);
        p.e0 = 0.0;
        const VaccineSchedule sched = toy_schedule(p);
        PolicyPath policy(6);
        const CompartmentGrid grid = simulate_forward(p, policy);

        double y_g = 0.0, p_mass = 0.0;
        for (int t = 1; t <= 6; ++t) {
            y_g += (1.0 - p.delta_g) * std::pow(p.delta_g, t - 1) * sched.q(t) +
                   std::pow(p.delta_g, t) * sched.p(t);
            p_mass += sched.p(t);
        }
        CHECK(government_objective(grid, policy, p, sched) ==
              doctest::Approx(y_g + p.xi * p_mass).epsilon(1e-13));
        CHECK(government_output_value(grid, policy, p, sched) ==
              doctest::Approx(y_g).epsilon(1e-13));
        CHECK(expected_survivors(grid, p, sched) ==
              doctest::Approx(p_mass).epsilon(1e-13));
    }

    SUBCASE("xi zero is pure discounted output") {
        ModelParams p = toy_params(5);
        p.xi = 0.0;
        const VaccineSchedule sched = toy_schedule(p);
        PolicyPath policy(5);
        policy.x_bar.values().setConstant(0.005);
        const CompartmentGrid grid = simulate_forward(p, policy);
        CHECK(government_objective(grid, policy, p, sched) ==
              doctest::Approx(government_output_value(grid, policy, p, sched))
                  .epsilon(1e-14));
    }

    SUBCASE("matches the direct-summation oracle") {
        const Fixture fx(3);
        CHECK(government_objective(fx.inner.grid, fx.inner.policy, fx.params,
                                   fx.sched) ==
              doctest::Approx(gov_value_direct(fx.inner.grid, fx.inner.policy,
                                               fx.params, fx.sched))
                  .epsilon(1e-12));
    }
}

TEST_CASE("dual forward system") {
    const Fixture fx(4);

    SUBCASE("zero multipliers propagate nothing") {
        const TriSeries eta(4, 0, 0.0);
        const CompartmentGrid duals =
            dual_forward(fx.inner.grid, fx.inner.policy, eta, fx.params);
        CHECK(duals.S.raw().cwiseAbs().maxCoeff() == 0.0);
        CHECK(duals.I.raw().cwiseAbs().maxCoeff() == 0.0);
        CHECK(duals.R.raw().cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("one step from zero matches the closed form") {
        TriSeries eta(4, 0, 0.0);
        eta(1, 1) = 0.37;
        const CompartmentGrid duals =
            dual_forward(fx.inner.grid, fx.inner.policy, eta, fx.params);
        const double hatI = fx.inner.policy.alpha(1, 1) * fx.inner.grid.I(1, 1);
        const double expected = (1.0 - fx.inner.policy.tau(1) * fx.params.gamma) *
                                fx.params.beta_s * 0.37 * fx.inner.grid.S(1, 1) *
                                hatI;
        CHECK(duals.S(2, 1) == doctest::Approx(expected).epsilon(1e-13));
    }

    SUBCASE("Lagrangian is stationary in the agent adjoints") {
        LagrangianPoint pt = fx.point();
        for (int t = 1; t <= 3; ++t) {
            for (int k = 1; k <= t + 1; ++k) {
                const double d = central_diff(
                    [&](double eps) {
                        LagrangianPoint q = pt;
                        q.agent.S(t, k) += eps;
                        return government_lagrangian(q, fx.params, fx.sched);
                    },
                    1e-6);
                REQUIRE(std::abs(d) < 1e-6);
            }
            for (int k = 1; k <= t; ++k) {
                const double di = central_diff(
                    [&](double eps) {
                        LagrangianPoint q = pt;
                        q.agent.I(t, k) += eps;
                        return government_lagrangian(q, fx.params, fx.sched);
                    },
                    1e-6);
                REQUIRE(std::abs(di) < 1e-6);
                const double dr = central_diff(
                    [&](double eps) {
                        LagrangianPoint q = pt;
                        q.agent.R(t, k) += eps;
                        return government_lagrangian(q, fx.params, fx.sched);
                    },
                    1e-6);
                REQUIRE(std::abs(dr) < 1e-6);
            }
            for (const char family : {'T', 'U', 'H'}) {
                const double d = central_diff(
                    [&](double eps) {
                        LagrangianPoint q = pt;
                        if (family == 'T') q.agent.IT(t) += eps;
                        if (family == 'U') q.agent.RT(t) += eps;
                        if (family == 'H') q.agent.H(t) += eps;
                        return government_lagrangian(q, fx.params, fx.sched);
                    },
                    1e-6);
                REQUIRE(std::abs(d) < 1e-6);
            }
        }
    }
}

TEST_CASE("government backward system") {
    const Fixture fx(4);

    SUBCASE("RT recursion one step from the terminal condition") {
        const int T = 4;
        const auto& adj = fx.mult.gov;
        const double terminal =
            fx.sched.p(T) * (fx.params.xi + std::pow(fx.params.delta_g, T));
        CHECK(adj.RT(T) == terminal);
        const double expected =
            adj.RT(T) +
            (1.0 - fx.params.delta_g) * std::pow(fx.params.delta_g, T - 1) *
                fx.lambda(T) * fx.sched.q(T) +
            (std::pow(fx.params.delta_g, T - 1) + fx.params.xi) * fx.sched.p(T - 1);
        CHECK(adj.RT(T - 1) == doctest::Approx(expected).epsilon(1e-13));
    }

    SUBCASE("Lagrangian is stationary in the states at interior dates") {
        LagrangianPoint pt = fx.point();
        for (int t = 2; t <= 3; ++t) {
            for (int k = 1; k <= t; ++k) {
                for (const char family : {'S', 'I', 'R'}) {
                    if (family != 'S' && k == t) {
                        // I_t^t and R_t^t are pinned at zero by their own
                        // constraints, not free variables
                        continue;
                    }
                    const double d = central_diff(
                        [&](double eps) {
                            LagrangianPoint q = pt;
                            if (family == 'S') q.grid.S(t, k) += eps;
                            if (family == 'I') q.grid.I(t, k) += eps;
                            if (family == 'R') q.grid.R(t, k) += eps;
                            return government_lagrangian(q, fx.params, fx.sched);
                        },
                        1e-6);
                    REQUIRE(std::abs(d) < 1e-6);
                }
            }
            for (const char family : {'T', 'U', 'H'}) {
                const double d = central_diff(
                    [&](double eps) {
                        LagrangianPoint q = pt;
                        if (family == 'T') q.grid.IT(t) += eps;
                        if (family == 'U') q.grid.RT(t) += eps;
                        if (family == 'H') q.grid.H(t) += eps;
                        return government_lagrangian(q, fx.params, fx.sched);
                    },
                    1e-6);
                REQUIRE(std::abs(d) < 1e-6);
            }
        }
    }

    SUBCASE("adjoints match finite differences of the re-equilibrated value") {
        const double h = 1e-6;
        const auto fd = [&](char family, int date, int bin) {
            return central_diff(
                [&](double eps) {
                    const auto [grid, policy] = injected_equilibrium(
                        fx.params, fx.sched, fx.lambda, fx.x_bar,
                        Injection{date, family, bin, eps});
                    return gov_value_direct(grid, policy, fx.params, fx.sched);
                },
                h);
        };
        const auto& adj = fx.mult.gov;
        for (int date = 2; date <= 4; ++date) {
            for (int bin = 1; bin <= date; ++bin) {
                REQUIRE(rel_error(adj.S(date - 1, bin), fd('S', date, bin)) < 1e-4);
                if (bin < date) {
                    REQUIRE(rel_error(adj.I(date - 1, bin), fd('I', date, bin)) <
                            1e-4);
                    REQUIRE(rel_error(adj.R(date - 1, bin), fd('R', date, bin)) <
                            1e-4);
                }
            }
            REQUIRE(rel_error(adj.IT(date - 1), fd('T', date, 1)) < 1e-4);
            REQUIRE(rel_error(adj.RT(date - 1), fd('U', date, 1)) < 1e-4);
            REQUIRE(rel_error(adj.H(date - 1), fd('H', date, 1)) < 1e-4);
        }
    }
}

TEST_CASE("multiplier solves") {
    const Fixture fx(5);

    SUBCASE("Lagrangian is stationary in alpha given eta") {
        LagrangianPoint pt = fx.point();
        for (int t = 1; t <= 4; ++t) {
            for (int k = 1; k <= t; ++k) {
                const double d = central_diff(
                    [&](double eps) {
                        LagrangianPoint q = pt;
                        q.policy.alpha(t, k) += eps;
                        return government_lagrangian(q, fx.params, fx.sched);
                    },
                    1e-7);
                REQUIRE(std::abs(d) < 1e-6);
            }
        }
    }

    SUBCASE("Lagrangian is stationary in tau given chi") {
        LagrangianPoint pt = fx.point();
        for (int t = 1; t <= 4; ++t) {
            const double d = central_diff(
                [&](double eps) {
                    LagrangianPoint q = pt;
                    q.policy.tau(t) += eps;
                    return government_lagrangian(q, fx.params, fx.sched);
                },
                1e-7);
            REQUIRE(std::abs(d) < 1e-6);
        }
    }

    SUBCASE("eta is linear in chi") {
        const int t = 3;
        const auto solve_at = [&](double chi_t) {
            return solve_eta(t, fx.inner.grid, fx.inner.policy, fx.inner.adjoints,
                             fx.mult.gov, fx.mult.duals, chi_t, fx.params,
                             fx.sched);
        };
        const Eigen::VectorXd base = solve_at(0.0);
        const Eigen::VectorXd one = solve_at(0.01);
        const Eigen::VectorXd two = solve_at(0.02);
        CHECK(((two - base) - 2.0 * (one - base)).lpNorm<Eigen::Infinity>() <
              1e-12);
    }

    SUBCASE("chi vanishes when every adjoint and dual is zero") {
        const AdjointFamily zero_adj(5);
        const CompartmentGrid zero_duals(5);
        const TriSeries zero_eta(5, 0, 0.0);
        CHECK(solve_chi(3, fx.inner.grid, fx.inner.policy, zero_adj, zero_adj,
                        zero_duals, zero_eta, fx.params, fx.sched) == 0.0);
    }

    SUBCASE("chi is linear in the adjoint inputs") {
        AdjointFamily scaled = fx.mult.gov;
        scaled.S.raw() *= 2.0;
        scaled.I.raw() *= 2.0;
        scaled.R.raw() *= 2.0;
        scaled.IT.raw() *= 2.0;
        scaled.RT.raw() *= 2.0;
        scaled.H.raw() *= 2.0;
        const AdjointFamily zero_adj(5);
        const CompartmentGrid zero_duals(5);
        const TriSeries zero_eta(5, 0, 0.0);
        const double base =
            solve_chi(2, fx.inner.grid, fx.inner.policy, zero_adj, fx.mult.gov,
                      zero_duals, zero_eta, fx.params, fx.sched);
        const double twice =
            solve_chi(2, fx.inner.grid, fx.inner.policy, zero_adj, scaled,
                      zero_duals, zero_eta, fx.params, fx.sched);
        CHECK(twice == doctest::Approx(2.0 * base).epsilon(1e-12));
    }

    SUBCASE("chi matches the envelope derivative in the test capacity") {
        const int t = 2;
        const double d = central_diff(
            [&](double eps) {
                DateSeries x = fx.x_bar;
                x(t) += eps;
                InnerOptions opts;
                opts.tol = 1e-13;
                const InnerResult inner =
                    inner_sweep(fx.lambda, x, fx.params, fx.sched, opts);
                return government_objective(inner.grid, inner.policy, fx.params,
                                            fx.sched);
            },
            1e-6);
        REQUIRE(rel_error(fx.mult.chi(t), d) < 1e-3);
    }
}

TEST_CASE("lockdown coefficients and update") {
    SUBCASE("closed-form maximizer") {
        CHECK(optimal_lambda(0.4, -0.5, 0.3) == 1.0);
        CHECK(optimal_lambda(0.4, 0.0, 0.3) == 1.0);
        CHECK(optimal_lambda(0.4, 1.0, 0.3) == doctest::Approx(0.3));
        CHECK(optimal_lambda(2.0, 1.0, 0.3) == 1.0);
        CHECK(optimal_lambda(1.2, 1.0, 0.3) == doctest::Approx(0.6));
    }

    SUBCASE("no infections means no quadratic cost") {
        ModelParams p = toy_params(4);
        p.e0 = 0.0;
        const VaccineSchedule sched = toy_schedule(p);
        PolicyPath policy(4);
        policy.x_bar.values().setConstant(0.002);
        const CompartmentGrid grid = simulate_forward(p, policy);
        const AdjointFamily agent_adj = backward_agent_adjoints(grid, policy, p, sched);
        const AdjointFamily gov_adj =
            dual_backward(grid, policy, agent_adj, CompartmentGrid(4),
                          TriSeries(4, 0, 0.0), DateSeries(4, 0.0), p, sched);
        const auto [a, b] =
            lambda_coefficients(2, grid, policy, agent_adj, gov_adj,
                                CompartmentGrid(4), DateSeries(4, 0.0), p, sched);
        CHECK(b == 0.0);
        CHECK(a > 0.0);
    }

    SUBCASE("derivative of the Lagrangian in lambda equals a - 2 b lambda") {
        const Fixture fx(4);
        LagrangianPoint pt = fx.point();
        for (int t = 1; t <= 3; ++t) {
            const auto [a, b] = lambda_coefficients(
                t, fx.inner.grid, fx.inner.policy, fx.inner.adjoints, fx.mult.gov,
                fx.mult.duals, fx.mult.chi, fx.params, fx.sched);
            const double d = central_diff(
                [&](double eps) {
                    LagrangianPoint q = pt;
                    q.policy.lambda(t) += eps;
                    return government_lagrangian(q, fx.params, fx.sched);
                },
                1e-7);
            REQUIRE(std::abs(d - (a - 2.0 * b * fx.inner.policy.lambda(t))) < 1e-8);
        }
    }

    SUBCASE("argmax agrees with a fine grid search on the Lagrangian") {
        const Fixture fx(3);
        LagrangianPoint pt = fx.point();
        for (int t = 1; t <= 2; ++t) {
            const auto [a, b] = lambda_coefficients(
                t, fx.inner.grid, fx.inner.policy, fx.inner.adjoints, fx.mult.gov,
                fx.mult.duals, fx.mult.chi, fx.params, fx.sched);
            const double closed = optimal_lambda(a, b, fx.params.lambda_bar);

            double best = fx.params.lambda_bar, best_v = -1e300;
            for (double lam = fx.params.lambda_bar; lam <= 1.0 + 1e-12;
                 lam += 1e-3) {
                LagrangianPoint q = pt;
                q.policy.lambda(t) = lam;
                const double v = government_lagrangian(q, fx.params, fx.sched);
                if (v > best_v) {
                    best_v = v;
                    best = lam;
                }
            }
            REQUIRE(std::abs(closed - best) < 2e-3);
        }
    }
}

TEST_CASE("outer sweep on a toy instance") {
    ModelParams p = toy_params(3);
    p.epsilon = 0.2;
    const VaccineSchedule sched = toy_schedule(p);
    const DateSeries x_bar(3, 0.008);

    OuterOptions opts;
    opts.eps = 0.2;
    opts.tol = 1e-9;
    const OptimalPolicyResult res = outer_sweep(p, x_bar, sched, opts);

    SUBCASE("fixed-point invariants") {
        for (int t = 1; t <= 3; ++t) {
            CHECK(res.policy.lambda(t) >= p.lambda_bar);
            CHECK(res.policy.lambda(t) <= 1.0);
            const double recomputed =
                compute_testing_rate(res.grid, res.policy, p, t);
            CHECK(std::abs(recomputed - res.policy.tau(t)) < 1e-12);
        }
    }

    SUBCASE("multi-start runs agree") {
        const OptimalPolicyResult multi =
            outer_sweep_multistart(p, x_bar, sched, opts, 5, 42);
        CHECK(std::abs(multi.objective - res.objective) < 1e-6);
    }
}
