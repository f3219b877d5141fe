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
#ifndef EPICTRL_GOVERNMENT_HPP
#define EPICTRL_GOVERNMENT_HPP

#include "epictrl/agent.hpp"
#include "epictrl/grid.hpp"
#include "epictrl/params.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace epictrl {

/// Whose behavior the sweep assumes on the agent side.
enum class BehaviorMode {
    forward_looking, ///< full nested problem with agent adjoints and duals
    myopic,          ///< delta_A = 0: static best response, no dual systems
    alpha_pinned,    ///< alpha fixed at 1, mechanical dynamics
};

/// Government payoff Y_G + xi*(1-D) on a complete trajectory.
double government_objective(const CompartmentGrid& grid, const PolicyPath& policy,
                            const ModelParams& params, const VaccineSchedule& sched);

/// Y_G alone (the xi = 0 weighting); the NPV-output axis of the frontier.
double government_output_value(const CompartmentGrid& grid, const PolicyPath& policy,
                               const ModelParams& params, const VaccineSchedule& sched);

/// Expected survivors sum_t (1 - D_{t+1}) p_t.
double expected_survivors(const CompartmentGrid& grid, const ModelParams& params,
                          const VaccineSchedule& sched);

/// Forward recursion of the government duals on the agent adjoint system,
/// from Pi-bar_1 = 0. Returns a grid-shaped object (the D slot is unused).
CompartmentGrid dual_forward(const CompartmentGrid& grid, const PolicyPath& policy,
                             const TriSeries& eta, const ModelParams& params);

/// Backward recursion of the government adjoints from the terminal value
/// p_T (xi + delta_G^T).
AdjointFamily dual_backward(const CompartmentGrid& grid, const PolicyPath& policy,
                            const AdjointFamily& agent_adj,
                            const CompartmentGrid& duals, const TriSeries& eta,
                            const DateSeries& chi, const ModelParams& params,
                            const VaccineSchedule& sched);

/// Coefficients of the date-t lockdown objective a_t*lambda - b_t*lambda^2.
std::pair<double, double> lambda_coefficients(
    int t, const CompartmentGrid& grid, const PolicyPath& policy,
    const AdjointFamily& agent_adj, const AdjointFamily& gov_adj,
    const CompartmentGrid& duals, const DateSeries& chi, const ModelParams& params,
    const VaccineSchedule& sched);

/// Closed-form maximizer of a*lambda - b*lambda^2 on [lambda_bar, 1].
double optimal_lambda(double a, double b, double lambda_bar);

/// Multipliers on the agent FOC at date t, solved from the t x t linear
/// system. Bins below the mass floor are dropped and get eta = 0. Throws
/// ConditioningError when the condition estimate exceeds 1e12.
Eigen::VectorXd solve_eta(int t, const CompartmentGrid& grid,
                          const PolicyPath& policy, const AdjointFamily& agent_adj,
                          const AdjointFamily& gov_adj, const CompartmentGrid& duals,
                          double chi_t, const ModelParams& params,
                          const VaccineSchedule& sched);

/// Multiplier on the testing constraint at date t.
double solve_chi(int t, const CompartmentGrid& grid, const PolicyPath& policy,
                 const AdjointFamily& agent_adj, const AdjointFamily& gov_adj,
                 const CompartmentGrid& duals, const TriSeries& eta,
                 const ModelParams& params, const VaccineSchedule& sched);

struct OuterOptions {
    double tol = 1e-6;   ///< max of sup-norms over (lambda, mass-weighted eta, chi)
    double eps = 0.01;   ///< damping weight on the new iterate
    int max_iterations = 2000;
    bool adaptive_eps = true;
    BehaviorMode mode = BehaviorMode::forward_looking;
    InnerOptions inner = {};
    const DateSeries* init_lambda = nullptr; ///< defaults to lambda = 1
    std::ostream* diagnostics = nullptr;     ///< iteration, distance, objective
};

struct OptimalPolicyResult {
    PolicyPath policy;
    CompartmentGrid grid;
    AdjointSet adjoints;
    DateSeries r_eff;
    double objective = 0.0;
    double npv_output = 0.0;
    double survivors = 0.0;
    int outer_iterations = 0;
    int start_index = 0; ///< which multi-start produced this solution
};

/// Forward-backward sweep for the government's Stackelberg problem with the
/// agent best response re-solved each iteration.
OptimalPolicyResult outer_sweep(const ModelParams& params, const DateSeries& x_bar,
                                const VaccineSchedule& sched,
                                const OuterOptions& options = {});

/// Runs outer_sweep from several initial lockdown paths (the default path,
/// the floor, and seeded random constants) and keeps the best objective.
OptimalPolicyResult outer_sweep_multistart(const ModelParams& params,
                                           const DateSeries& x_bar,
                                           const VaccineSchedule& sched,
                                           const OuterOptions& options,
                                           int starts, std::uint64_t seed);

} // namespace epictrl

#endif
