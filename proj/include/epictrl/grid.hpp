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
#ifndef EPICTRL_GRID_HPP
#define EPICTRL_GRID_HPP

#include "epictrl/params.hpp"
#include "epictrl/series.hpp"

namespace epictrl {

/// Aggregate state Pi_t: test-time-binned shares for S, I, R plus the
/// scalar compartments. All entries are population shares (population 1).
struct CompartmentGrid {
    TriSeries S, I, R;
    DateSeries IT, RT, H, D;

    CompartmentGrid() = default;
    explicit CompartmentGrid(int horizon)
        : S(horizon, 0), I(horizon, 0), R(horizon, 0),
          IT(horizon), RT(horizon), H(horizon), D(horizon) {}

    int horizon() const { return S.horizon(); }

    double S_tot(int t) const { return S.row_sum(t); }
    double I_tot(int t) const { return I.row_sum(t); }
    double R_tot(int t) const { return R.row_sum(t); }
};

/// Government instruments and the agents' behavior profile.
struct PolicyPath {
    DateSeries lambda; ///< permitted fraction of economic activity
    DateSeries x_bar;  ///< tests per capita per day
    DateSeries tau;    ///< implied testing rate of the eligible pool
    TriSeries alpha;   ///< social participation probability per bin

    PolicyPath() = default;
    explicit PolicyPath(int horizon)
        : lambda(horizon, 1.0), x_bar(horizon, 0.0), tau(horizon, 0.0),
          alpha(horizon, 0, 1.0) {}

    int horizon() const { return lambda.horizon(); }
};

/// One backward adjoint family: shadow values on the S/I/R bins plus the
/// scalar compartments. The S family carries the extra freshly-tested bin.
struct AdjointFamily {
    TriSeries S, I, R;
    DateSeries IT, RT, H;

    AdjointFamily() = default;
    explicit AdjointFamily(int horizon)
        : S(horizon, 1, 0.0), I(horizon, 0, 0.0), R(horizon, 0, 0.0),
          IT(horizon), RT(horizon), H(horizon) {}

    int horizon() const { return I.horizon(); }
};

/// Adjoints and multipliers of the nested control problems: agent adjoints,
/// government backward adjoints, government forward duals on the agent
/// adjoint system (shaped like the state grid), and the multipliers on the
/// agent FOC (eta) and the testing constraint (chi).
struct AdjointSet {
    AdjointFamily agent;
    AdjointFamily gov_backward;
    CompartmentGrid gov_forward; ///< D slot unused, kept for shape parity
    TriSeries eta;
    DateSeries chi;

    AdjointSet() = default;
    explicit AdjointSet(int horizon)
        : agent(horizon), gov_backward(horizon), gov_forward(horizon),
          eta(horizon, 0, 0.0), chi(horizon) {}

    int horizon() const { return agent.horizon(); }
};

/// Quantities recomputable from (grid, policy, adjoints) with no extra
/// state: expected value drops from infection, participating masses,
/// output, and the lockdown objective coefficients.
struct DerivedFlows {
    TriSeries delta_agent; ///< Delta_t^k
    TriSeries delta_gov;   ///< Delta-bar_t^k
    DateSeries hatS, hatI, hatR;
    DateSeries Y;
    DateSeries a_coeff, b_coeff;

    DerivedFlows() = default;
    explicit DerivedFlows(int horizon)
        : delta_agent(horizon, 0, 0.0), delta_gov(horizon, 0, 0.0),
          hatS(horizon), hatI(horizon), hatR(horizon), Y(horizon),
          a_coeff(horizon), b_coeff(horizon) {}
};

/// Participating masses at date t under the behavior profile alpha.
inline double hat_sum(const TriSeries& x, const TriSeries& alpha, int t) {
    return x.weighted_row_sum(t, alpha);
}

/// Total output Y_t = lambda_t (S_t + I_t + R_t + RT_t).
inline double output_at(const CompartmentGrid& grid, const PolicyPath& policy, int t) {
    return policy.lambda(t) *
           (grid.S_tot(t) + grid.I_tot(t) + grid.R_tot(t) + grid.RT(t));
}

/// Death share implied by the accounting identity at date t. Throws
/// ConsistencyError outside [-1e-10, 1].
double accounting_death(const CompartmentGrid& grid, int t);

/// Expected secondary cases per unknown-infected agent at date t.
/// Requires I_t > 0; throws StateError otherwise.
double effective_R(const CompartmentGrid& grid, const PolicyPath& policy,
                   const ModelParams& params, int t);

} // namespace epictrl

#endif
