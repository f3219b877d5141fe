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

// Regenerates the bundled observation file: a model-consistent national
// series (deaths, positives, hospitalizations, tests) over the Feb 2020 -
// Feb 2021 window, with a deterministic weekday reporting pattern layered
// on the flows. Swap in real aggregated feeds with the same header to run
// against actual data.

#include "epictrl/agent.hpp"
#include "epictrl/calibration.hpp"
#include "epictrl/io.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace epictrl;

namespace {

constexpr int kSampleDays = 352;
constexpr int kTestOnset = 45;       // day testing ramps up from zero
constexpr double kPeakTests = 1.0e6; // highest daily test count in sample

double test_count(int t) {
    if (t < kTestOnset) {
        return 0.0;
    }
    const double frac = static_cast<double>(t - kTestOnset) / (kSampleDays - kTestOnset);
    return kPeakTests * frac * frac;
}

// weekday reporting pattern, zero-mean over the week
constexpr double kWeekday[7] = {0.30, 0.15, 0.05, -0.05, -0.10, -0.45, 0.10};

double saw(int t, double amplitude) {
    return 1.0 + amplitude * kWeekday[t % 7];
}

} // namespace

int main(int argc, char** argv) {
    const std::string out = argc > 1 ? argv[1] : "data/us_covid_daily.csv";

    ModelParams params; // headline parameter set
    const VaccineSchedule sched =
        build_vaccine_schedule(params.vaccine_mean, params.vaccine_variance,
                               params.horizon);
    DateSeries lambda(params.horizon);
    DateSeries x_bar(params.horizon);
    for (int t = 1; t <= params.horizon; ++t) {
        lambda(t) = lockdown_path(t, params.lambda_bar);
        x_bar(t) = test_count(t) / params.population;
    }

    InnerResult inner;
    try {
        inner = inner_sweep(lambda, x_bar, params, sched);
    } catch (const Error& e) {
        std::cerr << "dataset generation failed: " << e.what() << "\n";
        return 1;
    }
    const Eigen::VectorXd positives = positive_flow(inner.grid, inner.policy, params);

    std::ofstream os(out);
    if (!os) {
        std::cerr << "cannot write " << out << "\n";
        return 1;
    }
    os << "date,deaths,positives,hospitalized,tests\n";
    for (int t = 1; t <= kSampleDays; ++t) {
        const double deaths_flow =
            (inner.grid.D(t + 1) - inner.grid.D(t)) * params.population;
        const double hospitalized = inner.grid.H(t) * params.population;
        char row[256];
        std::snprintf(row, sizeof row, "%s,%.4f,%.4f,%.4f,%.4f\n",
                      date_of_day(t).c_str(), deaths_flow * saw(t, 0.85),
                      positives[t - 1] * saw(t, 0.60), hospitalized,
                      test_count(t) * saw(t, 0.35));
        os << row;
    }
    std::cout << "wrote " << out << " (" << kSampleDays << " days)\n";
    return 0;
}
