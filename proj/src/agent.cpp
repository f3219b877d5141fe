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
#include "epictrl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace epictrl {

AgentObjectiveParts agent_objective(const CompartmentGrid& grid,
                                    const PolicyPath& policy,
                                    const ModelParams& params,
                                    const VaccineSchedule& sched) {
    const int T = grid.horizon();
    const double da = params.delta_a;
    const double c = params.c;

    AgentObjectiveParts parts;
    double disc = 1.0; // delta_A^{t-1}
    double log_sum = 0.0;
    for (int t = 1; t <= T; ++t) {
        const double q = sched.q(t);
        const double p = sched.p(t);
        const double Y = output_at(grid, policy, t);
        // the truncated problem freezes the world at T: the last arrival
        // term weighs survivors at T, matching the terminal adjoint values
        const double d_next = (t < T) ? grid.D(t + 1) : grid.D(T);

        parts.y_a += (1.0 - da) * disc * Y * q + disc * da * (1.0 - d_next) * p;

        double distancing = 0.0;
        double logs = 0.0;
        for (int k = 1; k <= t; ++k) {
            const double mass = grid.S(t, k) + grid.I(t, k) + grid.R(t, k);
            const double a = policy.alpha(t, k);
            if (mass >= kBinMassFloor && (a <= 0.0 || a >= 1.0)) {
                std::ostringstream os;
                os << "alpha on the {0,1} boundary at t=" << t << ", k=" << k;
                throw StateError(os.str());
            }
            distancing += (1.0 - a) * (1.0 - a) * mass;
            logs += std::log(a) + std::log1p(-a);
        }
        const double hatS = hat_sum(grid.S, policy.alpha, t);
        const double hatI = hat_sum(grid.I, policy.alpha, t);
        const double lam = policy.lambda(t);
        const double infections = params.beta_w * lam * lam * grid.S_tot(t) * grid.I_tot(t) +
                                  params.beta_s * hatS * hatI;

        parts.cost += (1.0 - da) * disc * (c / 2.0) *
                          ((grid.IT(t) + grid.H(t) + grid.D(t)) * q + distancing * q) +
                      disc * da * (c / 2.0) * d_next * p +
                      (1.0 - da) * disc * (params.phi_plus + params.phi_minus) *
                          infections * q;
        log_sum += disc * logs * q;
        disc *= da;
    }
    parts.penalty = (1.0 - da) * c * params.kappa * log_sum;
    return parts;
}

double solve_social_distancing_foc(double rhs, double bin_mass, double kappa) {
    if (!std::isfinite(rhs)) {
        throw StateError("social-distancing FOC: non-finite right side");
    }
    if (!(bin_mass > 0.0) || !(kappa > 0.0)) {
        throw ParameterError("social-distancing FOC needs bin_mass > 0 and kappa > 0");
    }
    const double K = kappa / bin_mass;

    // Pole-free cubic with the same root:
    //   g(a) = (1 - a - rhs) a (1 - a) + K (1 - 2a),  g(0) = K > 0 > -K = g(1).
    const auto g = [&](double a) {
        return (1.0 - a - rhs) * a * (1.0 - a) + K * (1.0 - 2.0 * a);
    };
    const auto dg = [&](double a) {
        return -a * (1.0 - a) + (1.0 - a - rhs) * (1.0 - 2.0 * a) - 2.0 * K;
    };

    double lo = 0.0, hi = 1.0;
    double a = std::clamp(1.0 - rhs, 1e-3, 1.0 - 1e-3);
    for (int it = 0; it < 100; ++it) {
        const double val = g(a);
        if (val == 0.0) {
            break;
        }
        (val > 0.0 ? lo : hi) = a;
        const double slope = dg(a);
        double next = (slope != 0.0) ? a - val / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        if (std::abs(next - a) <= 1e-17 * std::max(1.0, std::abs(a))) {
            a = next;
            break;
        }
        a = next;
    }
    // polish on the original residual to drive the measured error to the
    // floating-point floor
    for (int it = 0; it < 3; ++it) {
        const double f = 1.0 - a + K * (1.0 / a - 1.0 / (1.0 - a)) - rhs;
        if (f == 0.0) {
            break;
        }
        const double df = -1.0 - K * (1.0 / (a * a) + 1.0 / ((1.0 - a) * (1.0 - a)));
        const double next = a - f / df;
        if (!(next > 0.0 && next < 1.0)) {
            break;
        }
        a = next;
    }
    return a;
}

double agent_delta(const AdjointFamily& adj, const PolicyPath& policy,
                   const ModelParams& params, int t, int k) {
    const double tau = policy.tau(t);
    const double tg = tau * params.gamma;
    return (1.0 - tg) * adj.S(t, k) + tg * adj.S(t, t + 1) -
           (1.0 - tau) * adj.I(t, k) - tau * adj.IT(t);
}

double foc_rhs(const CompartmentGrid& grid, const AdjointFamily& adj,
               const PolicyPath& policy, const ModelParams& params,
               const VaccineSchedule& sched, int t, int k) {
    const double mass = grid.S(t, k) + grid.I(t, k) + grid.R(t, k);
    const double f = grid.S(t, k) / mass;
    const double g = grid.I(t, k) / mass;
    const double hatS = hat_sum(grid.S, policy.alpha, t);
    const double hatI = hat_sum(grid.I, policy.alpha, t);

    double rhs = params.phi_plus / params.c * f * params.beta_s * hatI +
                 params.phi_minus / params.c * g * params.beta_s * hatS;
    if (params.delta_a > 0.0) {
        const double weight =
            params.c * (1.0 - params.delta_a) *
            std::pow(params.delta_a, t - 1) * sched.q(t);
        rhs += agent_delta(adj, policy, params, t, k) * f * params.beta_s * hatI / weight;
    }
    return rhs;
}

AdjointFamily backward_agent_adjoints(const CompartmentGrid& grid,
                                      const PolicyPath& policy,
                                      const ModelParams& params,
                                      const VaccineSchedule& sched) {
    const int T = grid.horizon();
    const double da = params.delta_a;
    const double c = params.c;
    const double bw = params.beta_w;
    const double bs = params.beta_s;
    const double ti_stay = 1.0 - 1.0 / params.t_i;
    const double rec_share = (1.0 - params.m_i) / params.t_i;

    AdjointFamily adj(T);
    const double terminal = sched.p(T) * std::pow(da, T) * (1.0 + c / 2.0);
    adj.S.row(T).setConstant(terminal);
    adj.I.row(T).setConstant(terminal);
    adj.R.row(T).setConstant(terminal);
    adj.IT(T) = adj.RT(T) = adj.H(T) = terminal;

    for (int t = T - 1; t >= 1; --t) {
        const int s = t + 1;
        const double tau = policy.tau(s);
        const double tg = tau * params.gamma;
        const double lam = policy.lambda(s);
        const double q = sched.q(s);
        const double p = sched.p(t);
        const double disc = std::pow(da, t); // delta_A^t
        const double arrival = disc * (1.0 + c / 2.0) * p;
        const double flow_scale = (1.0 - da) * disc * q;

        const double I_s = grid.I_tot(s);
        const double S_s = grid.S_tot(s);
        const double hatI = hat_sum(grid.I, policy.alpha, s);
        const double hatS = hat_sum(grid.S, policy.alpha, s);
        const double work = bw * lam * lam;

        // S family carries bins k = 1..t+1 at date t, referencing date-s
        // bins k <= s and the fresh bin s+1.
        for (int k = 1; k <= t + 1; ++k) {
            const double a = policy.alpha(s, k);
            const double hazard = work * I_s + bs * a * hatI;
            const double delta = agent_delta(adj, policy, params, s, k);
            adj.S(t, k) =
                (1.0 - tg) * adj.S(s, k) + tg * adj.S(s, s + 1) - delta * hazard +
                arrival +
                flow_scale * (lam + c / 2.0 * (1.0 - (1.0 - a) * (1.0 - a)) -
                              params.phi_plus * hazard);
        }
        for (int k = 1; k <= t; ++k) {
            const double a = policy.alpha(s, k);
            adj.I(t, k) =
                ti_stay * ((1.0 - tau) * adj.I(s, k) + tau * adj.IT(s)) +
                rec_share * ((1.0 - tg) * adj.R(s, k) + tg * adj.RT(s)) +
                params.m_i / params.t_i * adj.H(s) + arrival +
                flow_scale * (lam + c / 2.0 * (1.0 - (1.0 - a) * (1.0 - a)) -
                              params.phi_minus * (work * S_s + bs * a * hatS));
            adj.R(t, k) =
                (1.0 - tg) * adj.R(s, k) + tg * adj.RT(s) + arrival +
                flow_scale * (lam + c / 2.0 * (1.0 - (1.0 - a) * (1.0 - a)));
        }
        adj.IT(t) = ti_stay * adj.IT(s) + rec_share * adj.RT(s) +
                    params.m_i / params.t_i * adj.H(s) + arrival;
        adj.RT(t) = adj.RT(s) + flow_scale * (lam + c / 2.0) + arrival;
        adj.H(t) = (1.0 - 1.0 / params.t_h) * adj.H(s) +
                   (1.0 - params.m_h) / params.t_h * adj.RT(s) + arrival;
        if (s == T) {
            // the share dying right at the truncation date still counts as
            // alive at T; without this the last step leaks its claim on the
            // final arrival value (every other transition row sums to one)
            adj.H(t) += params.m_h / params.t_h * terminal;
        }
    }
    return adj;
}

InnerResult inner_sweep(const DateSeries& lambda, const DateSeries& x_bar,
                        const ModelParams& params, const VaccineSchedule& sched,
                        const InnerOptions& options) {
    const int T = lambda.horizon();
    if (x_bar.horizon() != T || sched.horizon() != T) {
        throw ShapeError("inner_sweep: horizon mismatch between inputs");
    }

    InnerResult res;
    res.policy = PolicyPath(T);
    res.policy.lambda = lambda;
    res.policy.x_bar = x_bar;
    if (options.warm_alpha != nullptr) {
        if (options.warm_alpha->horizon() != T || options.warm_alpha->extra() != 0) {
            throw ShapeError("inner_sweep: warm-start alpha has the wrong shape");
        }
        res.policy.alpha = *options.warm_alpha;
    }

    double eps = options.eps;
    double prev_distance = std::numeric_limits<double>::infinity();
    TriSeries alpha_new(T, 0, 1.0);

    for (int it = 1; it <= options.max_iterations; ++it) {
        res.grid = simulate_forward(params, res.policy);
        res.adjoints = backward_agent_adjoints(res.grid, res.policy, params, sched);

        double distance = 0.0;
        for (int t = 1; t <= T; ++t) {
            for (int k = 1; k <= t; ++k) {
                const double mass =
                    res.grid.S(t, k) + res.grid.I(t, k) + res.grid.R(t, k);
                if (mass < kBinMassFloor) {
                    alpha_new(t, k) = 0.5; // pure-penalty optimum, carries no mass
                    continue;
                }
                const double rhs =
                    foc_rhs(res.grid, res.adjoints, res.policy, params, sched, t, k);
                alpha_new(t, k) =
                    solve_social_distancing_foc(rhs, mass, params.kappa);
                distance =
                    std::max(distance, std::abs(alpha_new(t, k) - res.policy.alpha(t, k)));
            }
        }

        res.iterations = it;
        res.distance = distance;
        if (options.diagnostics != nullptr) {
            double objective = std::numeric_limits<double>::quiet_NaN();
            try {
                objective = agent_objective(res.grid, res.policy, params, sched).total();
            } catch (const StateError&) {
                // boundary initial profile; leave the objective blank
            }
            (*options.diagnostics) << it << ',' << distance << ',' << objective << '\n';
        }
        if (distance < options.tol) {
            return res;
        }
        if (options.adaptive_eps) {
            if (distance > prev_distance) {
                eps = std::max(0.1 * options.eps, 0.5 * eps);
            } else {
                eps = std::min(0.9, 1.05 * eps);
            }
            prev_distance = distance;
        }
        res.policy.alpha.raw() =
            (1.0 - eps) * res.policy.alpha.raw() + eps * alpha_new.raw();
    }
    std::ostringstream os;
    os << "inner sweep did not converge in " << options.max_iterations
       << " iterations; last distance " << res.distance;
    throw ConvergenceError(os.str(), options.max_iterations, res.distance);
}

} // namespace epictrl
