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
#ifndef EPICTRL_PARAMS_HPP
#define EPICTRL_PARAMS_HPP

#include "epictrl/series.hpp"

namespace epictrl {

/// All fixed and calibrated scalars of the model. Defaults are the values
/// used for the headline United States runs.
struct ModelParams {
    double beta_w = 0.2046;    ///< matching rate in economic activities
    double beta_s = 0.2046;    ///< matching rate in social activities
    double gamma = 0.0976;     ///< tracing efficacy (0 perfect, 1 blind)
    double c = 0.4403;         ///< flow cost of full social distancing
    double phi_plus = 523.932; ///< lump-sum disutility of getting infected
    double phi_minus = 52.393; ///< lump-sum disutility of infecting others
    int t_i = 10;              ///< average infectious period, days
    int t_h = 7;               ///< average hospitalization period, days
    double m_i = 0.0176;       ///< hospitalization share of infected
    double m_h = 0.1705;       ///< death share of hospitalized
    double lambda_bar = 0.3;   ///< essential-services floor on lambda
    double delta_a = 0.9999;   ///< agent discount factor
    double delta_g = 0.9999;   ///< government discount factor
    double xi = 20.0;          ///< Pareto weight on survivors
    double e0 = 7.0e-5;        ///< initial infected share
    double kappa = 1.0e-12;    ///< interior-penalty weight
    double epsilon = 0.01;     ///< sweep damping weight on the new iterate
    int horizon = 600;         ///< truncation date
    double eta_split = 0.5;    ///< beta_w = eta*beta, beta_s = (1-eta)*beta
    double population = 328.2e6; ///< head-count conversion constant
    double ifr = 0.0;          ///< optional; when > 0 requires m_i*m_h == ifr

    double vaccine_mean = 540.0;     ///< expected day the pandemic ends
    double vaccine_variance = 180.0; ///< variance of that day

    /// Throws ParameterError if any field is outside its admissible range.
    void validate() const;

    /// Applies the eta_split rule to a total prevalence beta = beta_w+beta_s.
    void apply_eta_split(double eta);
};

/// Arrival distribution of the pandemic-ending event, truncated at the
/// model horizon. p[t] is the arrival mass at t, q[t] the probability that
/// no vaccine has arrived through t; the truncated tail stays in q[horizon].
struct VaccineSchedule {
    DateSeries p;
    DateSeries q;
    int r = 0;            ///< required success count (minimal support point)
    double succ_prob = 0; ///< per-period success probability

    int horizon() const { return p.horizon(); }
};

/// Negative binomial (trials until the r-th success) schedule with
/// r = round(mean^2/(mean+variance)) and succ_prob = mean/(mean+variance).
VaccineSchedule build_vaccine_schedule(double mean, double variance, int horizon);

} // namespace epictrl

#endif
