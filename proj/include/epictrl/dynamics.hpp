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
#ifndef EPICTRL_DYNAMICS_HPP
#define EPICTRL_DYNAMICS_HPP

#include "epictrl/grid.hpp"
#include "epictrl/params.hpp"

namespace epictrl {

/// Aggregate state of the mechanical system (no test-time bins).
struct AggState {
    double S = 0, I = 0, IT = 0, R = 0, RT = 0, H = 0, D = 0;

    double sum() const { return S + I + IT + R + RT + H + D; }
};

/// Testing rate tau_t that conducts exactly x_bar tests on the eligible
/// pool of the aggregate state (everyone participates socially).
double compute_testing_rate(const AggState& state, double lambda, double x_bar,
                            const ModelParams& params);

/// Testing rate tau_t for the binned state at date t under the behavior
/// profile policy.alpha. Uses the pre-update state entering period t.
/// Throws CapacityError if the implied rate reaches 1, StateError if the
/// eligible pool is empty.
double compute_testing_rate(const CompartmentGrid& grid, const PolicyPath& policy,
                            const ModelParams& params, int t);

/// One step of the mechanical system (everyone participates socially).
AggState step_mechanical(const AggState& state, double lambda, double tau,
                         const ModelParams& params);

/// One step of the behavioral system: fills the date t+1 bins of the grid
/// from the date t bins under (lambda_t, tau_t, alpha_t) in the policy.
void step_behavioral(CompartmentGrid& grid, const PolicyPath& policy,
                     const ModelParams& params, int t);

/// Full forward trajectory over 1..horizon: seeds S_1^1 = 1-e0 and
/// I_1^1 = e0, computes tau_t from the testing constraint each date, and
/// validates mass balance to 1e-10. Writes tau into the policy.
CompartmentGrid simulate_forward(const ModelParams& params, PolicyPath& policy);

} // namespace epictrl

#endif
