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
#ifndef EPICTRL_TESTS_TOYS_HPP
#define EPICTRL_TESTS_TOYS_HPP

#include "epictrl/agent.hpp"
#include "epictrl/params.hpp"

#include <random>

namespace epictrl::testing {

/// Small instance with wide vaccine support (r = 1) so every toy date
/// carries arrival mass.
inline ModelParams toy_params(int horizon) {
    ModelParams p;
    p.beta_w = 0.3;
    p.beta_s = 0.35;
    p.gamma = 0.2;
    p.c = 0.5;
    p.phi_plus = 1.0;
    p.phi_minus = 0.1;
    p.t_i = 10;
    p.t_h = 7;
    p.m_i = 0.0176;
    p.m_h = 0.1705;
    p.lambda_bar = 0.3;
    p.delta_a = 0.5;
    p.delta_g = 0.6;
    p.xi = 2.0;
    p.e0 = 0.1;
    p.kappa = 1e-8;
    p.horizon = horizon;
    p.vaccine_mean = 2.0;
    p.vaccine_variance = 1.0;
    return p;
}

inline VaccineSchedule toy_schedule(const ModelParams& p) {
    return build_vaccine_schedule(p.vaccine_mean, p.vaccine_variance, p.horizon);
}

inline DateSeries constant_series(int horizon, double value) {
    return DateSeries(horizon, value);
}

/// Randomized toy parameters for property suites; bounded so that the
/// dynamics stay well inside [0,1] on short horizons.
inline ModelParams random_toy_params(std::mt19937_64& rng, int horizon) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ModelParams p = toy_params(horizon);
    p.beta_w = 0.1 + 0.5 * u(rng);
    p.beta_s = 0.1 + 0.5 * u(rng);
    p.gamma = 0.05 + 0.6 * u(rng);
    p.c = 0.2 + 1.0 * u(rng);
    p.phi_plus = 0.5 + 4.0 * u(rng);
    p.phi_minus = p.phi_plus / 10.0;
    p.delta_a = 0.3 + 0.5 * u(rng);
    p.delta_g = 0.3 + 0.5 * u(rng);
    p.xi = 0.5 + 4.0 * u(rng);
    p.e0 = 0.02 + 0.2 * u(rng);
    return p;
}

} // namespace epictrl::testing

#endif
