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
#ifndef EPICTRL_EXPERIMENTS_HPP
#define EPICTRL_EXPERIMENTS_HPP

#include "epictrl/government.hpp"
#include "epictrl/grid.hpp"
#include "epictrl/params.hpp"

#include <optional>
#include <string>
#include <vector>

namespace epictrl {

enum class ScenarioKind {
    baseline,
    no_lockdown,
    no_social_distancing,
    high_testing,
    efficient_testing,
    high_and_efficient,
    eta_split,
    myopic,
};

struct Scenario {
    ScenarioKind kind = ScenarioKind::baseline;
    double eta = 0.9;                 ///< only read by eta_split
    double high_testing_count = 1e6;  ///< daily tests in head count

    std::string label() const;
};

/// Parses a scenario label such as "no_lockdown" or "eta_split:0.9".
Scenario parse_scenario(const std::string& label);

struct ScenarioResult {
    Scenario scenario;
    OptimalPolicyResult run;
    double cumulative_deaths = 0.0; ///< head count at the horizon
};

/// Applies the scenario patches to (params, x_bar) and runs the matching
/// sweep: the full outer sweep for optimal-policy scenarios, the inner
/// sweep alone when the lockdown is pinned at 1.
ScenarioResult run_scenario(const Scenario& scenario, const ModelParams& params,
                            const DateSeries& x_bar, const VaccineSchedule& sched,
                            const OuterOptions& options = {});

struct ParetoPoint {
    double xi = 0.0;
    double npv_output = 0.0;
    double survivors = 0.0;
    bool converged = false;
};

/// One outer sweep per Pareto weight, in parallel; non-convergent points
/// are recorded with converged = false and skipped by consumers.
std::vector<ParetoPoint> pareto_frontier(const std::vector<double>& xi_grid,
                                         const ModelParams& params,
                                         const DateSeries& x_bar,
                                         const VaccineSchedule& sched,
                                         const OuterOptions& options = {});

struct OraclePolicy {
    DateSeries lambda;
    double value = 0.0;
};

/// Exhaustive enumeration over lockdown paths on a lambda grid with the
/// agent best response solved per path. Only feasible for horizon <= 3.
OraclePolicy small_horizon_oracle(const ModelParams& params, const DateSeries& x_bar,
                                  const VaccineSchedule& sched, double lambda_step);

/// Writes <label>_trajectory.csv and <label>_summary.csv under out_dir.
void write_scenario_bundle(const std::string& out_dir, const ScenarioResult& result,
                           const ModelParams& params);

/// Writes frontier.csv: xi,npv_output,survivors,converged.
void write_frontier_csv(const std::string& out_dir,
                        const std::vector<ParetoPoint>& points);

} // namespace epictrl

#endif
