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
#ifndef EPICTRL_IO_HPP
#define EPICTRL_IO_HPP

#include "epictrl/government.hpp"
#include "epictrl/grid.hpp"
#include "epictrl/params.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace epictrl {

/// ISO calendar date of model day t, anchored at 2020-02-29 = t1.
std::string date_of_day(int t);

/// Fixed-format float rendering used by every CSV writer (12 significant
/// digits, deterministic across runs).
std::string format_number(double x);

/// Population-weighted mean alpha over the mass-bearing bins of date t.
double mean_alpha(const CompartmentGrid& grid, const PolicyPath& policy, int t);

/// Trajectory export: date,S,I,IT,R,RT,H,D,lambda,tau,alpha_mean,Y,R_eff.
void write_trajectory_csv(std::ostream& os, const CompartmentGrid& grid,
                          const PolicyPath& policy, const ModelParams& params);

/// Optimal-policy export: date,lambda,tau,alpha_mean,S,I,IT,R,RT,H,D,Y,R_eff.
void write_result_csv(std::ostream& os, const OptimalPolicyResult& result,
                      const ModelParams& params);

/// Scalar summary: objective, cumulative deaths (head count), NPV output.
void write_summary_csv(std::ostream& os, const OptimalPolicyResult& result,
                       const ModelParams& params);

/// One named series for the SVG chart writer.
struct ChartSeries {
    std::string name;
    std::vector<double> values; ///< NaN entries break the polyline
};

/// Self-contained SVG line chart (inline styling, no external assets).
void write_svg_chart(std::ostream& os, const std::string& title,
                     const std::vector<ChartSeries>& series);

/// Flat key=value configuration with [section] prefixes; keys are stored
/// as "section.key" ("" section for the preamble). '#' starts a comment.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config(std::istream& is);
ConfigMap load_config(const std::string& path);

/// Applies all recognized model keys of a config to the parameter set.
/// Unknown keys under [model]/[vaccine] throw ParameterError.
void apply_config(ModelParams& params, const ConfigMap& config);

/// Worker cap: EPICTRL_THREADS when set, hardware concurrency otherwise.
int worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. Exceptions
/// are rethrown on the calling thread after all workers join.
void parallel_for(int n, const std::function<void(int)>& fn);

} // namespace epictrl

#endif
