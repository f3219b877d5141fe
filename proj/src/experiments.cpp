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
#include "epictrl/experiments.hpp"

#include "epictrl/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace epictrl {

std::string Scenario::label() const {
    switch (kind) {
        case ScenarioKind::baseline: return "baseline";
        case ScenarioKind::no_lockdown: return "no_lockdown";
        case ScenarioKind::no_social_distancing: return "no_social_distancing";
        case ScenarioKind::high_testing: return "high_testing";
        case ScenarioKind::efficient_testing: return "efficient_testing";
        case ScenarioKind::high_and_efficient: return "high_and_efficient";
        case ScenarioKind::eta_split: {
            std::ostringstream os;
            os << "eta_split_" << eta;
            return os.str();
        }
        case ScenarioKind::myopic: return "myopic";
    }
    return "unknown";
}

Scenario parse_scenario(const std::string& label) {
    Scenario s;
    const auto colon = label.find(':');
    const std::string name = label.substr(0, colon);
    if (name == "baseline") {
        s.kind = ScenarioKind::baseline;
    } else if (name == "no_lockdown") {
        s.kind = ScenarioKind::no_lockdown;
    } else if (name == "no_social_distancing") {
        s.kind = ScenarioKind::no_social_distancing;
    } else if (name == "high_testing") {
        s.kind = ScenarioKind::high_testing;
    } else if (name == "efficient_testing") {
        s.kind = ScenarioKind::efficient_testing;
    } else if (name == "high_and_efficient") {
        s.kind = ScenarioKind::high_and_efficient;
    } else if (name == "eta_split") {
        s.kind = ScenarioKind::eta_split;
    } else if (name == "myopic") {
        s.kind = ScenarioKind::myopic;
    } else {
        throw ParameterError("unknown scenario: " + label);
    }
    if (colon != std::string::npos) {
        if (s.kind != ScenarioKind::eta_split) {
            throw ParameterError("scenario " + name + " takes no argument");
        }
        s.eta = std::stod(label.substr(colon + 1));
    }
    return s;
}

namespace {

double final_deaths(const CompartmentGrid& grid, const ModelParams& params) {
    const int T = grid.horizon();
    return (grid.D(T) + params.m_h / params.t_h * grid.H(T)) * params.population;
}

/// Wraps an inner-sweep trajectory in the result type used by the outer
/// sweep so every scenario emits the same bundle.
OptimalPolicyResult wrap_inner(InnerResult&& inner, const ModelParams& params,
                               const VaccineSchedule& sched) {
    OptimalPolicyResult res;
    res.objective = government_objective(inner.grid, inner.policy, params, sched);
    res.npv_output = government_output_value(inner.grid, inner.policy, params, sched);
    res.survivors = expected_survivors(inner.grid, params, sched);
    res.outer_iterations = 0;
    res.adjoints = AdjointSet(inner.grid.horizon());
    res.adjoints.agent = std::move(inner.adjoints);
    res.r_eff = DateSeries(inner.grid.horizon(),
                           std::numeric_limits<double>::quiet_NaN());
    for (int t = 1; t <= inner.grid.horizon(); ++t) {
        if (inner.grid.I_tot(t) > 0.0) {
            res.r_eff(t) = effective_R(inner.grid, inner.policy, params, t);
        }
    }
    res.policy = std::move(inner.policy);
    res.grid = std::move(inner.grid);
    return res;
}

} // namespace

ScenarioResult run_scenario(const Scenario& scenario, const ModelParams& params,
                            const DateSeries& x_bar, const VaccineSchedule& sched,
                            const OuterOptions& options) {
    ModelParams p = params;
    DateSeries tests = x_bar;
    OuterOptions opts = options;

    switch (scenario.kind) {
        case ScenarioKind::baseline:
            break;
        case ScenarioKind::no_lockdown:
            break; // handled below: lambda pinned at 1, agents best-respond
        case ScenarioKind::no_social_distancing:
            opts.mode = BehaviorMode::alpha_pinned;
            break;
        case ScenarioKind::high_testing:
            tests.values().setConstant(scenario.high_testing_count / p.population);
            break;
        case ScenarioKind::efficient_testing:
            p.gamma = params.gamma / 2.0;
            break;
        case ScenarioKind::high_and_efficient:
            tests.values().setConstant(scenario.high_testing_count / p.population);
            p.gamma = params.gamma / 2.0;
            break;
        case ScenarioKind::eta_split:
            p.apply_eta_split(scenario.eta);
            break;
        case ScenarioKind::myopic:
            p.delta_a = 0.0;
            opts.mode = BehaviorMode::myopic;
            break;
    }

    ScenarioResult result;
    result.scenario = scenario;
    if (scenario.kind == ScenarioKind::no_lockdown) {
        DateSeries lambda(p.horizon, 1.0);
        result.run = [&] {
            InnerResult inner = inner_sweep(lambda, tests, p, sched, opts.inner);
            return wrap_inner(std::move(inner), p, sched);
        }();
    } else {
        result.run = outer_sweep(p, tests, sched, opts);
    }
    result.cumulative_deaths = final_deaths(result.run.grid, p);
    return result;
}

std::vector<ParetoPoint> pareto_frontier(const std::vector<double>& xi_grid,
                                         const ModelParams& params,
                                         const DateSeries& x_bar,
                                         const VaccineSchedule& sched,
                                         const OuterOptions& options) {
    if (xi_grid.empty()) {
        throw ParameterError("pareto_frontier: empty xi grid");
    }
    std::vector<ParetoPoint> points(xi_grid.size());
    parallel_for(static_cast<int>(xi_grid.size()), [&](int i) {
        ParetoPoint& pt = points[i];
        pt.xi = xi_grid[i];
        ModelParams p = params;
        p.xi = xi_grid[i];
        try {
            const OptimalPolicyResult res = outer_sweep(p, x_bar, sched, options);
            pt.npv_output = res.npv_output;
            pt.survivors = res.survivors;
            pt.converged = true;
        } catch (const ConvergenceError&) {
            pt.converged = false; // recorded and skipped downstream
        }
    });
    return points;
}

OraclePolicy small_horizon_oracle(const ModelParams& params, const DateSeries& x_bar,
                                  const VaccineSchedule& sched, double lambda_step) {
    const int T = params.horizon;
    if (T > 3) {
        throw ParameterError("small_horizon_oracle: horizon must be <= 3");
    }
    if (!(lambda_step > 0.0)) {
        throw ParameterError("small_horizon_oracle: lambda_step must be positive");
    }
    std::vector<double> levels;
    for (double v = params.lambda_bar; v < 1.0 - 1e-12; v += lambda_step) {
        levels.push_back(v);
    }
    levels.push_back(1.0);
    const auto count = static_cast<long>(levels.size());
    long total = 1;
    for (int t = 0; t < T; ++t) {
        total *= count;
        if (total > 2'000'000L) {
            throw ParameterError("small_horizon_oracle: grid too fine for the budget");
        }
    }

    OraclePolicy best;
    best.value = -std::numeric_limits<double>::infinity();
    DateSeries lambda(T, 1.0);
    for (long code = 0; code < total; ++code) {
        long rest = code;
        for (int t = 1; t <= T; ++t) {
            lambda(t) = levels[rest % count];
            rest /= count;
        }
        InnerResult inner = inner_sweep(lambda, x_bar, params, sched);
        const double value =
            government_objective(inner.grid, inner.policy, params, sched);
        if (value > best.value) {
            best.value = value;
            best.lambda = lambda;
        }
    }
    return best;
}

void write_scenario_bundle(const std::string& out_dir, const ScenarioResult& result,
                           const ModelParams& params) {
    std::filesystem::create_directories(out_dir);
    const std::string stem = out_dir + "/" + result.scenario.label();
    {
        std::ofstream os(stem + "_trajectory.csv");
        if (!os) {
            throw IoError("cannot write " + stem + "_trajectory.csv");
        }
        write_result_csv(os, result.run, params);
    }
    std::ofstream os(stem + "_summary.csv");
    if (!os) {
        throw IoError("cannot write " + stem + "_summary.csv");
    }
    write_summary_csv(os, result.run, params);
}

void write_frontier_csv(const std::string& out_dir,
                        const std::vector<ParetoPoint>& points) {
    std::filesystem::create_directories(out_dir);
    std::ofstream os(out_dir + "/frontier.csv");
    if (!os) {
        throw IoError("cannot write frontier.csv");
    }
    os << "xi,npv_output,survivors,converged\n";
    for (const auto& pt : points) {
        os << format_number(pt.xi) << ',' << format_number(pt.npv_output) << ','
           << format_number(pt.survivors) << ',' << (pt.converged ? 1 : 0) << '\n';
    }
}

} // namespace epictrl
