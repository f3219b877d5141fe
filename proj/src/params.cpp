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
#include "epictrl/params.hpp"

#include <cmath>
#include <sstream>

namespace epictrl {

namespace {

void require(bool ok, const char* what) {
    if (!ok) {
        throw ParameterError(std::string("invalid parameter: ") + what);
    }
}

} // namespace

void ModelParams::validate() const {
    require(beta_w >= 0.0, "beta_w >= 0");
    require(beta_s >= 0.0, "beta_s >= 0");
    require(gamma >= 0.0 && gamma <= 1.0, "gamma in [0,1]");
    require(c >= 0.0, "c >= 0");
    require(phi_plus >= 0.0, "phi_plus >= 0");
    require(phi_minus >= 0.0, "phi_minus >= 0");
    require(t_i >= 1, "t_i >= 1");
    require(t_h >= 1, "t_h >= 1");
    require(m_i >= 0.0 && m_i <= 1.0, "m_i in [0,1]");
    require(m_h >= 0.0 && m_h <= 1.0, "m_h in [0,1]");
    require(lambda_bar > 0.0 && lambda_bar <= 1.0, "lambda_bar in (0,1]");
    require(delta_a >= 0.0 && delta_a < 1.0, "delta_a in [0,1)");
    require(delta_g >= 0.0 && delta_g < 1.0, "delta_g in [0,1)");
    require(xi >= 0.0, "xi >= 0");
    require(e0 >= 0.0 && e0 < 1.0, "e0 in [0,1)");
    require(kappa > 0.0, "kappa > 0");
    require(epsilon > 0.0 && epsilon <= 1.0, "epsilon in (0,1]");
    require(horizon >= 2, "horizon >= 2");
    require(eta_split >= 0.0 && eta_split <= 1.0, "eta_split in [0,1]");
    require(population > 0.0, "population > 0");
    if (ifr > 0.0 && std::abs(m_i * m_h - ifr) > 1e-12) {
        std::ostringstream os;
        os << "m_i*m_h = " << m_i * m_h << " does not match the configured IFR " << ifr;
        throw ParameterError(os.str());
    }
}

void ModelParams::apply_eta_split(double eta) {
    require(eta >= 0.0 && eta <= 1.0, "eta_split in [0,1]");
    const double beta = beta_w + beta_s;
    eta_split = eta;
    beta_w = eta * beta;
    beta_s = (1.0 - eta) * beta;
}

VaccineSchedule build_vaccine_schedule(double mean, double variance, int horizon) {
    if (!(mean > 0.0)) {
        throw ParameterError("vaccine schedule: mean must be positive");
    }
    if (!(variance > 0.0)) {
        throw ParameterError("vaccine schedule: variance must be positive");
    }
    const double succ = mean / (mean + variance);
    const int r = static_cast<int>(std::llround(mean * mean / (mean + variance)));
    if (r < 1) {
        throw ParameterError("vaccine schedule: implied success count is below 1");
    }
    if (horizon < r) {
        std::ostringstream os;
        os << "vaccine schedule: horizon " << horizon
           << " is below the minimal support point " << r;
        throw HorizonError(os.str());
    }

    VaccineSchedule sched;
    sched.p = DateSeries(horizon, 0.0);
    sched.q = DateSeries(horizon, 0.0);
    sched.r = r;
    sched.succ_prob = succ;

    // mass of trials-until-r-th-success at t >= r, computed in log space
    const double log_s = std::log(succ);
    const double log_f = std::log1p(-succ);
    for (int t = 1; t <= horizon; ++t) {
        double pt = 0.0;
        if (t >= r) {
            const double log_binom =
                std::lgamma(t) - std::lgamma(r) - std::lgamma(t - r + 1);
            pt = std::exp(log_binom + r * log_s + (t - r) * log_f);
        }
        sched.p(t) = pt;
    }

    // compensated total; if rounding pushed it past 1, take the excess out
    // of the modal mass so the truncated tail q stays nonnegative
    const auto total_mass = [&] {
        double sum = 0.0, comp = 0.0;
        for (int t = 1; t <= horizon; ++t) {
            const double y = sched.p(t) - comp;
            const double s = sum + y;
            comp = (s - sum) - y;
            sum = s;
        }
        return sum;
    };
    double total = total_mass();
    if (total > 1.0) {
        int mode = r;
        for (int t = r; t <= horizon; ++t) {
            if (sched.p(t) > sched.p(mode)) {
                mode = t;
            }
        }
        sched.p(mode) -= total - 1.0;
        total = total_mass();
    }

    // build q backward from the truncated tail: exact monotonicity and
    // strict positivity before the horizon
    sched.q(horizon) = std::max(0.0, 1.0 - total);
    for (int t = horizon - 1; t >= 1; --t) {
        sched.q(t) = sched.q(t + 1) + sched.p(t + 1);
    }
    return sched;
}

} // namespace epictrl
