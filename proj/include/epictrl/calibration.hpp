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
#ifndef EPICTRL_CALIBRATION_HPP
#define EPICTRL_CALIBRATION_HPP

#include "epictrl/agent.hpp"
#include "epictrl/grid.hpp"
#include "epictrl/params.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace epictrl {

/// Dated empirical series in head counts; t = 1 is 2020-02-29.
struct ObservedSeries {
    std::vector<std::string> dates;
    Eigen::VectorXd deaths_flow;
    Eigen::VectorXd positives_flow;
    Eigen::VectorXd hospitalized;
    Eigen::VectorXd tests;
    bool smoothed = false;

    int size() const { return static_cast<int>(dates.size()); }
};

/// Loads a CSV with header date,deaths,positives,hospitalized,tests.
ObservedSeries load_observed_csv(const std::string& path);

/// Applies the 7-day centered moving average to every series.
ObservedSeries smooth_series(const ObservedSeries& raw);

/// Centered 7-day moving average with shrinking windows at the edges.
/// Throws HorizonError below length 7.
Eigen::VectorXd smooth_7day(const Eigen::VectorXd& series);

/// The parametric approximation of the historical lockdown.
struct LockdownShape {
    double sigma1 = 2.0;      ///< phase-2 curvature
    double sigma2 = 0.9995;   ///< phase-4 recovery rate
    std::array<int, 3> breaks = {16, 32, 103};
};

/// Lockdown level at day t: full activity through the first break, a
/// smooth decline to lambda_bar, a flat floor, then a slow recovery.
double lockdown_path(int t, double lambda_bar, const LockdownShape& shape = {});

/// Per-capita test path: in-sample data, then the least-squares quadratic
/// in time evaluated out of sample and floored at zero.
DateSeries extrapolate_tests(const Eigen::VectorXd& per_capita_tests, int horizon);

/// Predicted positive-test flow in head counts: mass newly entering IT
/// plus mass newly entering H each day.
Eigen::VectorXd positive_flow(const CompartmentGrid& grid, const PolicyPath& policy,
                              const ModelParams& params);

/// Through-origin OLS slope of deaths on hospitalized, scaled by t_h.
double estimate_mh(const Eigen::VectorXd& hospitalized,
                   const Eigen::VectorXd& deaths_flow, int t_h);

/// Free calibration coordinates (beta applies to both beta_w and beta_s;
/// phi_minus follows phi_plus/10).
struct Theta {
    double beta = 0.2046;
    double gamma = 0.0976;
    double c = 0.4403;
    double phi_plus = 523.932;

    ModelParams apply(const ModelParams& base) const;
};

struct CalibrationConfig {
    double omega = -1.0; ///< negative means "auto" equal-importance weighting
    bool restrict_betas = true;
    bool restrict_phi = true;
    std::array<std::pair<double, double>, 4> bounds = {{
        {0.02, 1.5},    // beta
        {0.002, 1.0},   // gamma
        {0.02, 5.0},    // c
        {5.0, 5000.0},  // phi_plus
    }};
    int starts = 20;
    std::uint64_t seed = 1;
    int fit_days = 352;       ///< loss window t = 1..fit_days
    int max_evaluations = 400; ///< per simplex start
    double simplex_tol = 1e-6; ///< relative spread stopping rule
};

struct LossValue {
    double value = 0.0;
    bool converged = true; ///< false when the inner sweep failed at theta
};

/// Equal-importance weight implied by the observed series.
double auto_omega(const ObservedSeries& data, int fit_days);

/// Weighted squared-error loss of theta against the observed flows, using
/// the supplied lockdown and test paths over the full model horizon.
LossValue loss(const Theta& theta, const ObservedSeries& data, double omega,
               const ModelParams& base, const DateSeries& lambda,
               const DateSeries& x_bar, const VaccineSchedule& sched);

struct StartDiagnostic {
    Theta theta;
    double loss = 0.0;
    int evaluations = 0;
    bool converged = true;
};

struct CalibrationResult {
    Theta theta;
    double loss = 0.0;
    double omega = 0.0;
    std::vector<StartDiagnostic> starts;
};

/// Multi-start Nelder-Mead search over the four free parameters. The
/// lockdown path follows the historical shape; the test path is the
/// observed series extrapolated over the horizon.
CalibrationResult calibrate(const ObservedSeries& data,
                            const CalibrationConfig& config,
                            const ModelParams& base);

} // namespace epictrl

#endif
