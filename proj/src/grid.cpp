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
#include "epictrl/grid.hpp"

#include <cmath>
#include <sstream>

namespace epictrl {

double accounting_death(const CompartmentGrid& grid, int t) {
    const double alive = grid.S_tot(t) + grid.I_tot(t) + grid.R_tot(t) +
                         grid.IT(t) + grid.RT(t) + grid.H(t);
    const double d = 1.0 - alive;
    if (d < -1e-10 || d > 1.0) {
        std::ostringstream os;
        os << "mass balance violated at t=" << t << ": implied D_t = " << d;
        throw ConsistencyError(os.str());
    }
    return d;
}

double effective_R(const CompartmentGrid& grid, const PolicyPath& policy,
                   const ModelParams& params, int t) {
    const double I = grid.I_tot(t);
    if (!(I > 0.0)) {
        std::ostringstream os;
        os << "effective_R undefined at t=" << t << ": I_t = 0";
        throw StateError(os.str());
    }
    const double tau = policy.tau(t);
    const double lam = policy.lambda(t);
    const double S = grid.S_tot(t);
    const double hatS = hat_sum(grid.S, policy.alpha, t);
    const double hatI = hat_sum(grid.I, policy.alpha, t);
    const double stay = (1.0 - tau) * (1.0 - 1.0 / params.t_i);
    const double duration = 1.0 / (1.0 - stay);
    const double new_cases =
        (1.0 - tau) * (params.beta_w * lam * lam * S + params.beta_s * hatS * hatI / I);
    return duration * new_cases;
}

} // namespace epictrl
