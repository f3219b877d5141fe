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
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "epictrl/dynamics.hpp"

#include <cmath>
#include <sstream>

namespace epictrl {

namespace {

constexpr double kNegativeSlack = 1e-12;

double clamp_share(double x, const char* what, int t) {
    if (x < 0.0) {
        if (x < -kNegativeSlack) {
            std::ostringstream os;
            os << what << " left [0,1] at t=" << t << ": " << x;
            throw ConsistencyError(os.str());
        }
        return 0.0;
    }
    if (x > 1.0) {
        if (x > 1.0 + kNegativeSlack) {
            std::ostringstream os;
            os << what << " left [0,1] at t=" << t << ": " << x;
            throw ConsistencyError(os.str());
        }
        return 1.0;
    }
    return x;
}

double eligible_pool(double S, double I, double R, double new_inf,
                     const ModelParams& p) {
    const double rec_i = (1.0 - p.m_i) / p.t_i * I;
    return p.gamma * (S - new_inf) + p.gamma * (R + rec_i) +
           (1.0 - 1.0 / p.t_i) * I + new_inf;
}

double testing_rate_from_pool(double x_bar, double pool, int t) {
    if (x_bar < 0.0) {
        throw ParameterError("x_bar must be nonnegative");
    }
    if (x_bar == 0.0) {
        return 0.0;
    }
    if (!(pool > 0.0)) {
        std::ostringstream os;
        os << "empty testing-eligible pool at t=" << t;
        throw StateError(os.str());
    }
    const double tau = x_bar / pool;
    if (tau >= 1.0) {
        std::ostringstream os;
        os << "too many tests for the eligible pool at t=" << t << ": tau = " << tau;
        throw CapacityError(os.str());
    }
    return tau;
}

} // namespace

double compute_testing_rate(const AggState& state, double lambda, double x_bar,
                            const ModelParams& params) {
    const double new_inf = params.beta_w * lambda * lambda * state.S * state.I +
                           params.beta_s * state.S * state.I;
    const double pool = eligible_pool(state.S, state.I, state.R, new_inf, params);
    return testing_rate_from_pool(x_bar, pool, 0);
}

double compute_testing_rate(const CompartmentGrid& grid, const PolicyPath& policy,
                            const ModelParams& params, int t) {
    const double S = grid.S_tot(t);
    const double I = grid.I_tot(t);
    const double R = grid.R_tot(t);
    const double hatS = hat_sum(grid.S, policy.alpha, t);
    const double hatI = hat_sum(grid.I, policy.alpha, t);
    const double lam = policy.lambda(t);
    const double new_inf =
        params.beta_w * lam * lam * S * I + params.beta_s * hatS * hatI;
    const double pool = eligible_pool(S, I, R, new_inf, params);
    return testing_rate_from_pool(policy.x_bar(t), pool, t);
}

AggState step_mechanical(const AggState& state, double lambda, double tau,
                         const ModelParams& params) {
    const double ti_stay = 1.0 - 1.0 / params.t_i;
    const double rec_share = (1.0 - params.m_i) / params.t_i;
    const double new_inf = params.beta_w * lambda * lambda * state.S * state.I +
                           params.beta_s * state.S * state.I;

    AggState next;
    next.S = state.S - new_inf;
    next.I = (1.0 - tau) * (ti_stay * state.I + new_inf);
    next.IT = ti_stay * state.IT + tau * (ti_stay * state.I + new_inf);
    next.H = (1.0 - 1.0 / params.t_h) * state.H +
             params.m_i / params.t_i * (state.I + state.IT);
    next.D = state.D + params.m_h / params.t_h * state.H;
    next.R = (1.0 - tau * params.gamma) * (state.R + rec_share * state.I);
    next.RT = state.RT + rec_share * state.IT +
              (1.0 - params.m_h) / params.t_h * state.H +
              tau * params.gamma * (state.R + rec_share * state.I);

    next.S = clamp_share(next.S, "S", 0);
    next.I = clamp_share(next.I, "I", 0);
    next.IT = clamp_share(next.IT, "IT", 0);
    next.R = clamp_share(next.R, "R", 0);
    next.RT = clamp_share(next.RT, "RT", 0);
    next.H = clamp_share(next.H, "H", 0);
    next.D = clamp_share(next.D, "D", 0);
    return next;
}

void step_behavioral(CompartmentGrid& grid, const PolicyPath& policy,
                     const ModelParams& params, int t) {
    if (t + 1 > grid.horizon()) {
        throw ShapeError("step_behavioral: date t+1 exceeds the grid horizon");
    }
    const double ti_stay = 1.0 - 1.0 / params.t_i;
    const double rec_share = (1.0 - params.m_i) / params.t_i;
    const double tau = policy.tau(t);
    const double lam = policy.lambda(t);

    const auto S_t = grid.S.row(t);
    const auto I_t = grid.I.row(t);
    const auto R_t = grid.R.row(t);
    const auto alpha_t = policy.alpha.row(t);

    const double I_tot = I_t.sum();
    const double hatI = alpha_t.dot(I_t);

    // per-bin infection hazard: work matches plus social matches
    const Eigen::ArrayXd hazard =
        params.beta_w * lam * lam * I_tot +
        params.beta_s * hatI * alpha_t.array();
    const Eigen::ArrayXd infections = S_t.array() * hazard;
    const double new_inf_total = infections.sum();

    auto S_next = grid.S.row(t + 1);
    auto I_next = grid.I.row(t + 1);
    auto R_next = grid.R.row(t + 1);

    // updated bins k <= t, then the freshly-tested bin k = t+1 (index t)
    S_next.head(t) = (1.0 - tau * params.gamma) * (S_t.array() - infections).matrix();
    S_next(t) = tau * params.gamma * (S_t.sum() - new_inf_total);
    I_next.head(t) =
        (1.0 - tau) * (ti_stay * I_t.array() + infections).matrix();
    I_next(t) = 0.0;
    R_next.head(t) =
        (1.0 - tau * params.gamma) * (R_t.array() + rec_share * I_t.array()).matrix();
    R_next(t) = 0.0;

    grid.IT(t + 1) = ti_stay * grid.IT(t) + tau * (ti_stay * I_tot + new_inf_total);
    grid.H(t + 1) = (1.0 - 1.0 / params.t_h) * grid.H(t) +
                    params.m_i / params.t_i * (I_tot + grid.IT(t));
    grid.RT(t + 1) = grid.RT(t) + rec_share * grid.IT(t) +
                     (1.0 - params.m_h) / params.t_h * grid.H(t) +
                     tau * params.gamma * (R_t.sum() + rec_share * I_tot);

    for (int k = 1; k <= t + 1; ++k) {
        grid.S(t + 1, k) = clamp_share(grid.S(t + 1, k), "S", t + 1);
        grid.I(t + 1, k) = clamp_share(grid.I(t + 1, k), "I", t + 1);
        grid.R(t + 1, k) = clamp_share(grid.R(t + 1, k), "R", t + 1);
    }
    grid.IT(t + 1) = clamp_share(grid.IT(t + 1), "IT", t + 1);
    grid.RT(t + 1) = clamp_share(grid.RT(t + 1), "RT", t + 1);
    grid.H(t + 1) = clamp_share(grid.H(t + 1), "H", t + 1);
}

CompartmentGrid simulate_forward(const ModelParams& params, PolicyPath& policy) {
    const int horizon = policy.horizon();
    if (policy.alpha.horizon() != horizon) {
        throw ShapeError("simulate_forward: alpha horizon mismatch");
    }
    CompartmentGrid grid(horizon);
    grid.S(1, 1) = 1.0 - params.e0;
    grid.I(1, 1) = params.e0;
    grid.D(1) = accounting_death(grid, 1);

    double death_evolved = 0.0;
    for (int t = 1; t <= horizon; ++t) {
        policy.tau(t) = compute_testing_rate(grid, policy, params, t);
        if (t == horizon) {
            break;
        }
        death_evolved += params.m_h / params.t_h * grid.H(t);
        step_behavioral(grid, policy, params, t);
        grid.D(t + 1) = accounting_death(grid, t + 1);
        if (std::abs(grid.D(t + 1) - death_evolved) > 1e-10) {
            std::ostringstream os;
            os << "dynamics violated mass balance at t=" << t + 1 << ": identity D = "
               << grid.D(t + 1) << " vs evolved D = " << death_evolved;
            throw ConsistencyError(os.str());
        }
    }
    return grid;
}

} // namespace epictrl
