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
#ifndef EPICTRL_TESTS_AGENT_ORACLE_HPP
#define EPICTRL_TESTS_AGENT_ORACLE_HPP

#include "epictrl/grid.hpp"
#include "epictrl/params.hpp"

#include <cmath>

namespace epictrl::testing {

/// The representative agent's own state probabilities; aggregates stay
/// fixed at the baseline when these are perturbed.
struct IndivState {
    TriSeries s, i, r;
    DateSeries it, rt, h;

    explicit IndivState(int horizon)
        : s(horizon, 0), i(horizon, 0), r(horizon, 0),
          it(horizon), rt(horizon), h(horizon) {}
};

struct Injection {
    int date = 0; ///< 0 disables
    char family = 'S';
    int bin = 1;
    double eps = 0.0;
};

/// Propagates the individual system under the aggregate hazards of the
/// baseline grid, optionally injecting mass into one state equation. The
/// atomistic agent controls ind_alpha while the aggregate profile inside
/// policy pins the hats; pass nullptr to identify the two (equilibrium).
inline IndivState simulate_individual(const CompartmentGrid& aggregates,
                                      const PolicyPath& policy,
                                      const ModelParams& prm,
                                      const Injection& inj = {},
                                      const TriSeries* ind_alpha = nullptr) {
    const TriSeries& own = ind_alpha != nullptr ? *ind_alpha : policy.alpha;
    const int T = aggregates.horizon();
    const double ti_stay = 1.0 - 1.0 / prm.t_i;
    const double rec = (1.0 - prm.m_i) / prm.t_i;

    IndivState ind(T);
    ind.s(1, 1) = 1.0 - prm.e0;
    ind.i(1, 1) = prm.e0;

    const auto inject = [&](int t) {
        if (inj.date != t) {
            return;
        }
        switch (inj.family) {
            case 'S': ind.s(t, inj.bin) += inj.eps; break;
            case 'I': ind.i(t, inj.bin) += inj.eps; break;
            case 'R': ind.r(t, inj.bin) += inj.eps; break;
            case 'T': ind.it(t) += inj.eps; break;
            case 'U': ind.rt(t) += inj.eps; break;
            case 'H': ind.h(t) += inj.eps; break;
        }
    };
    inject(1);

    for (int t = 1; t < T; ++t) {
        const double tau = policy.tau(t);
        const double tg = tau * prm.gamma;
        const double lam = policy.lambda(t);
        const double I_agg = aggregates.I_tot(t);
        const double hatI_agg = hat_sum(aggregates.I, policy.alpha, t);
        const double work = prm.beta_w * lam * lam;

        double s_tot = 0.0, i_tot = 0.0, r_tot = 0.0, inf_tot = 0.0;
        for (int k = 1; k <= t; ++k) {
            const double a = own(t, k);
            const double hazard = work * I_agg + prm.beta_s * a * hatI_agg;
            const double inf = ind.s(t, k) * hazard;
            s_tot += ind.s(t, k);
            i_tot += ind.i(t, k);
            r_tot += ind.r(t, k);
            inf_tot += inf;
            ind.s(t + 1, k) = (1.0 - tg) * (ind.s(t, k) - inf);
            ind.i(t + 1, k) = (1.0 - tau) * (ti_stay * ind.i(t, k) + inf);
            ind.r(t + 1, k) = (1.0 - tg) * (ind.r(t, k) + rec * ind.i(t, k));
        }
        ind.s(t + 1, t + 1) = tg * (s_tot - inf_tot);
        ind.it(t + 1) = ti_stay * ind.it(t) + tau * (ti_stay * i_tot + inf_tot);
        ind.rt(t + 1) = ind.rt(t) + rec * ind.it(t) +
                        (1.0 - prm.m_h) / prm.t_h * ind.h(t) +
                        tg * (r_tot + rec * i_tot);
        ind.h(t + 1) = (1.0 - 1.0 / prm.t_h) * ind.h(t) +
                       prm.m_i / prm.t_i * (i_tot + ind.it(t));
        inject(t + 1);
    }
    return ind;
}

/// Direct summation of Y_A - C + penalty on the individual trajectory,
/// keeping individual and aggregate quantities distinct. The date-T
/// arrival term weighs survivors at T (the truncated-problem convention).
inline double agent_value(const IndivState& ind, const CompartmentGrid& aggregates,
                          const PolicyPath& policy, const ModelParams& prm,
                          const VaccineSchedule& sched,
                          const TriSeries* ind_alpha = nullptr) {
    const TriSeries& own = ind_alpha != nullptr ? *ind_alpha : policy.alpha;
    const int T = aggregates.horizon();
    double value = 0.0;
    for (int t = 1; t <= T; ++t) {
        const double disc = std::pow(prm.delta_a, t - 1);
        const double q = sched.q(t);
        const double p = sched.p(t);
        const double lam = policy.lambda(t);

        double s_tot = 0.0, i_tot = 0.0, r_tot = 0.0;
        double hs = 0.0, hi = 0.0, distancing = 0.0, logs = 0.0;
        for (int k = 1; k <= t; ++k) {
            const double a = own(t, k);
            s_tot += ind.s(t, k);
            i_tot += ind.i(t, k);
            r_tot += ind.r(t, k);
            hs += a * ind.s(t, k);
            hi += a * ind.i(t, k);
            distancing += (1.0 - a) * (1.0 - a) *
                          (ind.s(t, k) + ind.i(t, k) + ind.r(t, k));
            logs += std::log(a) + std::log1p(-a);
        }
        const double d_t =
            1.0 - (s_tot + i_tot + r_tot + ind.it(t) + ind.rt(t) + ind.h(t));
        const double y_t = lam * (s_tot + i_tot + r_tot + ind.rt(t));

        double d_next = d_t;
        if (t < T) {
            double alive_next = ind.it(t + 1) + ind.rt(t + 1) + ind.h(t + 1);
            for (int k = 1; k <= t + 1; ++k) {
                alive_next += ind.s(t + 1, k) + ind.i(t + 1, k) + ind.r(t + 1, k);
            }
            d_next = 1.0 - alive_next;
        }

        const double S_agg = aggregates.S_tot(t);
        const double I_agg = aggregates.I_tot(t);
        const double hatS_agg = hat_sum(aggregates.S, policy.alpha, t);
        const double hatI_agg = hat_sum(aggregates.I, policy.alpha, t);
        const double work = prm.beta_w * lam * lam;

        value += (1.0 - prm.delta_a) * disc * y_t * q +
                 disc * prm.delta_a * (1.0 - d_next) * p;
        value -= (1.0 - prm.delta_a) * disc * (prm.c / 2.0) *
                     ((ind.it(t) + ind.h(t) + d_t) * q + distancing * q) +
                 disc * prm.delta_a * (prm.c / 2.0) * d_next * p;
        value -= (1.0 - prm.delta_a) * disc * q *
                 (prm.phi_plus * (work * s_tot * I_agg + prm.beta_s * hs * hatI_agg) +
                  prm.phi_minus * (work * S_agg * i_tot + prm.beta_s * hatS_agg * hi));
        value += (1.0 - prm.delta_a) * prm.c * prm.kappa * disc * logs * q;
    }
    return value;
}

} // namespace epictrl::testing

#endif
