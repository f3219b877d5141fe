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
#ifndef EPICTRL_AGENT_HPP
#define EPICTRL_AGENT_HPP

#include "epictrl/dynamics.hpp"
#include "epictrl/grid.hpp"
#include "epictrl/params.hpp"

#include <iosfwd>

namespace epictrl {

/// Bins lighter than this are excluded from behavior solves; their alpha is
/// pinned at the pure-penalty optimum 1/2 and they carry no mass anywhere.
constexpr double kBinMassFloor = 1e-14;

/// The three components of the agent's payoff Y_A - C + (1-delta_A)*c*kappa*P.
struct AgentObjectiveParts {
    double y_a = 0.0;     ///< expected discounted output
    double cost = 0.0;    ///< flow distancing cost plus lump-sum disutilities
    double penalty = 0.0; ///< interior penalty, already scaled; always <= 0

    double total() const { return y_a - cost + penalty; }
};

/// Evaluates the agent objective on an equilibrium trajectory (individual
/// states identified with aggregates). Throws StateError if any mass-bearing
/// bin sits exactly on the {0,1} boundary while kappa > 0.
AgentObjectiveParts agent_objective(const CompartmentGrid& grid,
                                    const PolicyPath& policy,
                                    const ModelParams& params,
                                    const VaccineSchedule& sched);

/// Unique root in (0,1) of
///   1 - alpha + (kappa/bin_mass)(1/alpha - 1/(1-alpha)) = rhs.
/// Solved on the pole-free cubic form to |residual| well below 1e-12.
double solve_social_distancing_foc(double rhs, double bin_mass, double kappa);

/// Expected drop in the agent's continuation value from an infection at
/// (t,k): Delta_t^k built from the agent adjoints.
double agent_delta(const AdjointFamily& adj, const PolicyPath& policy,
                   const ModelParams& params, int t, int k);

/// Right side of the social-distancing FOC at (t,k): the static infection
/// and altruism costs plus the dynamic continuation cost.
double foc_rhs(const CompartmentGrid& grid, const AdjointFamily& adj,
               const PolicyPath& policy, const ModelParams& params,
               const VaccineSchedule& sched, int t, int k);

/// Backward sweep of the agent adjoint system from the truncation date;
/// terminal value p_T * delta_A^T * (1 + c/2) in every component.
AdjointFamily backward_agent_adjoints(const CompartmentGrid& grid,
                                      const PolicyPath& policy,
                                      const ModelParams& params,
                                      const VaccineSchedule& sched);

struct InnerOptions {
    double tol = 1e-8;          ///< sup-norm distance between alpha iterates
    double eps = 0.3;           ///< damping weight on the new profile
    int max_iterations = 10000;
    bool adaptive_eps = true;   ///< grow eps while converging, halve on overshoot
    const TriSeries* warm_alpha = nullptr;
    std::ostream* diagnostics = nullptr; ///< per-iteration CSV sink
};

struct InnerResult {
    CompartmentGrid grid;
    PolicyPath policy; ///< carries the converged alpha and implied tau
    AdjointFamily adjoints;
    int iterations = 0;
    double distance = 0.0;
};

/// Fixed point of the agent best-response map under a given lockdown and
/// testing-capacity path. Throws ConvergenceError past the iteration cap.
InnerResult inner_sweep(const DateSeries& lambda, const DateSeries& x_bar,
                        const ModelParams& params, const VaccineSchedule& sched,
                        const InnerOptions& options = {});

} // namespace epictrl

#endif
