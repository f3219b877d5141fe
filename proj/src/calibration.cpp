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
#include "epictrl/calibration.hpp"

#include "epictrl/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>

namespace epictrl {

ObservedSeries load_observed_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open data file: " + path);
    }
    std::string line;
    if (!std::getline(is, line)) {
        throw IoError("empty data file: " + path);
    }
    if (line.rfind("date,deaths,positives,hospitalized,tests", 0) != 0) {
        throw IoError("unexpected header in " + path + ": " + line);
    }
    std::vector<std::string> dates;
    std::vector<double> deaths, positives, hospitalized, tests;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::istringstream row(line);
        std::string field;
        std::array<std::string, 5> fields;
        int i = 0;
        while (std::getline(row, field, ',') && i < 5) {
            fields[i++] = field;
        }
        if (i != 5) {
            std::ostringstream os;
            os << path << ":" << lineno << ": expected 5 fields";
            throw IoError(os.str());
        }
        try {
            dates.push_back(fields[0]);
            deaths.push_back(std::stod(fields[1]));
            positives.push_back(std::stod(fields[2]));
            hospitalized.push_back(std::stod(fields[3]));
            tests.push_back(std::stod(fields[4]));
        } catch (const std::exception&) {
            std::ostringstream os;
            os << path << ":" << lineno << ": cannot parse numeric field";
            throw IoError(os.str());
        }
        if (deaths.back() < 0 || positives.back() < 0 || hospitalized.back() < 0 ||
            tests.back() < 0) {
            std::ostringstream os;
            os << path << ":" << lineno << ": negative entry";
            throw IoError(os.str());
        }
    }
    ObservedSeries out;
    out.dates = std::move(dates);
    const auto to_vec = [](const std::vector<double>& v) {
        return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()).eval();
    };
    out.deaths_flow = to_vec(deaths);
    out.positives_flow = to_vec(positives);
    out.hospitalized = to_vec(hospitalized);
    out.tests = to_vec(tests);
    return out;
}

Eigen::VectorXd smooth_7day(const Eigen::VectorXd& series) {
    const int n = static_cast<int>(series.size());
    if (n < 7) {
        throw HorizonError("smooth_7day needs at least 7 observations");
    }
    Eigen::VectorXd out(n);
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - 3);
        const int hi = std::min(n - 1, i + 3);
        out[i] = series.segment(lo, hi - lo + 1).mean();
    }
    return out;
}

ObservedSeries smooth_series(const ObservedSeries& raw) {
    ObservedSeries out = raw;
    out.deaths_flow = smooth_7day(raw.deaths_flow);
    out.positives_flow = smooth_7day(raw.positives_flow);
    out.hospitalized = smooth_7day(raw.hospitalized);
    out.tests = smooth_7day(raw.tests);
    out.smoothed = true;
    return out;
}

double lockdown_path(int t, double lambda_bar, const LockdownShape& shape) {
    if (t < 1) {
        throw ParameterError("lockdown_path: t must be >= 1");
    }
    const auto [b1, b2, b3] = shape.breaks;
    if (!(b1 < b2 && b2 < b3)) {
        throw ParameterError("lockdown_path: breaks must be increasing");
    }
    if (t <= b1) {
        return 1.0;
    }
    if (t <= b2) {
        const double frac = static_cast<double>(t - b1) / (b2 - b1 + 1);
        return std::sqrt(1.0 - (1.0 - lambda_bar * lambda_bar) *
                                   std::pow(frac, shape.sigma1));
    }
    if (t <= b3) {
        return lambda_bar;
    }
    const double decay = std::pow(shape.sigma2, t - (b3 + 1));
    return std::sqrt(lambda_bar * lambda_bar * decay + (1.0 - decay));
}

DateSeries extrapolate_tests(const Eigen::VectorXd& per_capita_tests, int horizon) {
    const int n = static_cast<int>(per_capita_tests.size());
    if (n < 3) {
        throw HorizonError("extrapolate_tests needs at least 3 observations");
    }
    // quadratic least squares on centered/scaled time for conditioning
    const double mid = (n + 1) / 2.0;
    const double scale = std::max(1.0, n / 2.0);
    Eigen::MatrixXd X(n, 3);
    for (int i = 0; i < n; ++i) {
        const double z = (i + 1 - mid) / scale;
        X(i, 0) = 1.0;
        X(i, 1) = z;
        X(i, 2) = z * z;
    }
    const Eigen::Vector3d coef =
        X.colPivHouseholderQr().solve(per_capita_tests);

    DateSeries path(horizon, 0.0);
    for (int t = 1; t <= horizon; ++t) {
        if (t <= n) {
            path(t) = per_capita_tests[t - 1];
        } else {
            const double z = (t - mid) / scale;
            path(t) = std::max(0.0, coef[0] + coef[1] * z + coef[2] * z * z);
        }
    }
    return path;
}

Eigen::VectorXd positive_flow(const CompartmentGrid& grid, const PolicyPath& policy,
                              const ModelParams& params) {
    const int T = grid.horizon();
    Eigen::VectorXd flow(T);
    const double ti_stay = 1.0 - 1.0 / params.t_i;
    for (int t = 1; t <= T; ++t) {
        const double I = grid.I_tot(t);
        const double hatS = hat_sum(grid.S, policy.alpha, t);
        const double hatI = hat_sum(grid.I, policy.alpha, t);
        const double lam = policy.lambda(t);
        const double new_inf = params.beta_w * lam * lam * grid.S_tot(t) * I +
                               params.beta_s * hatS * hatI;
        const double into_it = policy.tau(t) * (ti_stay * I + new_inf);
        const double into_h = params.m_i / params.t_i * (I + grid.IT(t));
        flow[t - 1] = (into_it + into_h) * params.population;
    }
    return flow;
}

double estimate_mh(const Eigen::VectorXd& hospitalized,
                   const Eigen::VectorXd& deaths_flow, int t_h) {
    if (hospitalized.size() != deaths_flow.size()) {
        throw ShapeError("estimate_mh: series lengths differ");
    }
    const double hh = hospitalized.squaredNorm();
    if (!(hh > 0.0)) {
        throw StateError("estimate_mh: hospitalization series is identically zero");
    }
    return hospitalized.dot(deaths_flow) / hh * t_h;
}

ModelParams Theta::apply(const ModelParams& base) const {
    ModelParams p = base;
    p.beta_w = beta;
    p.beta_s = beta;
    p.gamma = gamma;
    p.c = c;
    p.phi_plus = phi_plus;
    p.phi_minus = phi_plus / 10.0;
    return p;
}

double auto_omega(const ObservedSeries& data, int fit_days) {
    const int n = std::min<int>(fit_days, data.size());
    const double d2 = data.deaths_flow.head(n).squaredNorm();
    const double x2 = data.positives_flow.head(n).squaredNorm();
    if (!(d2 + x2 > 0.0)) {
        throw StateError("auto_omega: observed flows are identically zero");
    }
    return x2 / (d2 + x2);
}

namespace {

LossValue loss_with_options(const Theta& theta, const ObservedSeries& data,
                            double omega, const ModelParams& base,
                            const DateSeries& lambda, const DateSeries& x_bar,
                            const VaccineSchedule& sched, const InnerOptions& opts,
                            TriSeries* alpha_out) {
    const int n = std::min<int>(data.size(), base.horizon);
    const ModelParams p = theta.apply(base);

    InnerResult inner;
    try {
        inner = inner_sweep(lambda, x_bar, p, sched, opts);
    } catch (const Error&) {
        // non-convergent or infeasible theta: large finite penalty
        return {1e30, false};
    }
    if (alpha_out != nullptr) {
        *alpha_out = inner.policy.alpha;
    }

    const Eigen::VectorXd predicted_pos = positive_flow(inner.grid, inner.policy, p);
    double deaths_term = 0.0, pos_term = 0.0;
    for (int t = 1; t <= n; ++t) {
        const double d_next = (t < inner.grid.horizon())
                                  ? inner.grid.D(t + 1)
                                  : inner.grid.D(t) + p.m_h / p.t_h * inner.grid.H(t);
        const double model_deaths = (d_next - inner.grid.D(t)) * p.population;
        const double rd = model_deaths - data.deaths_flow[t - 1];
        const double rx = predicted_pos[t - 1] - data.positives_flow[t - 1];
        deaths_term += rd * rd;
        pos_term += rx * rx;
    }
    return {omega * deaths_term + (1.0 - omega) * pos_term, true};
}

} // namespace

LossValue loss(const Theta& theta, const ObservedSeries& data, double omega,
               const ModelParams& base, const DateSeries& lambda,
               const DateSeries& x_bar, const VaccineSchedule& sched) {
    return loss_with_options(theta, data, omega, base, lambda, x_bar, sched,
                             InnerOptions{}, nullptr);
}

namespace {

using Coords = Eigen::Vector4d;

Coords clamp_to_bounds(Coords x, const CalibrationConfig& config) {
    for (int i = 0; i < 4; ++i) {
        x[i] = std::clamp(x[i], config.bounds[i].first, config.bounds[i].second);
    }
    return x;
}

Theta theta_from(const Coords& x) {
    Theta th;
    th.beta = x[0];
    th.gamma = x[1];
    th.c = x[2];
    th.phi_plus = x[3];
    return th;
}

/// Nelder-Mead with standard coefficients on the box-clamped coordinates.
StartDiagnostic simplex_search(const Coords& start, const CalibrationConfig& config,
                               const std::function<double(const Coords&)>& f) {
    constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;
    const int dim = 4;
    int evals = 0;
    const auto eval = [&](const Coords& x) {
        ++evals;
        return f(clamp_to_bounds(x, config));
    };

    std::vector<std::pair<double, Coords>> simplex;
    simplex.reserve(dim + 1);
    simplex.emplace_back(eval(start), clamp_to_bounds(start, config));
    for (int i = 0; i < dim; ++i) {
        Coords v = simplex[0].second;
        const double span = config.bounds[i].second - config.bounds[i].first;
        v[i] = std::clamp(v[i] + 0.1 * span, config.bounds[i].first,
                          config.bounds[i].second);
        if (v[i] == simplex[0].second[i]) {
            v[i] -= 0.1 * span;
        }
        simplex.emplace_back(eval(v), clamp_to_bounds(v, config));
    }

    const auto by_loss = [](const auto& a, const auto& b) { return a.first < b.first; };
    while (evals < config.max_evaluations) {
        std::sort(simplex.begin(), simplex.end(), by_loss);
        const double best = simplex.front().first;
        const double worst = simplex.back().first;
        if (worst - best <= config.simplex_tol * (std::abs(best) + 1e-30)) {
            break;
        }
        Coords centroid = Coords::Zero();
        for (int i = 0; i < dim; ++i) {
            centroid += simplex[i].second;
        }
        centroid /= dim;

        const Coords reflected = centroid + kReflect * (centroid - simplex.back().second);
        const double fr = eval(reflected);
        if (fr < simplex.front().first) {
            const Coords expanded = centroid + kExpand * (reflected - centroid);
            const double fe = eval(expanded);
            simplex.back() = (fe < fr) ? std::make_pair(fe, clamp_to_bounds(expanded, config))
                                       : std::make_pair(fr, clamp_to_bounds(reflected, config));
        } else if (fr < simplex[dim - 1].first) {
            simplex.back() = {fr, clamp_to_bounds(reflected, config)};
        } else {
            const Coords contracted =
                centroid + kContract * (simplex.back().second - centroid);
            const double fc = eval(contracted);
            if (fc < simplex.back().first) {
                simplex.back() = {fc, clamp_to_bounds(contracted, config)};
            } else {
                for (int i = 1; i <= dim; ++i) {
                    simplex[i].second =
                        simplex[0].second +
                        kShrink * (simplex[i].second - simplex[0].second);
                    simplex[i].first = eval(simplex[i].second);
                }
            }
        }
    }
    std::sort(simplex.begin(), simplex.end(), by_loss);

    StartDiagnostic diag;
    diag.theta = theta_from(simplex.front().second);
    diag.loss = simplex.front().first;
    diag.evaluations = evals;
    diag.converged = simplex.front().first < 1e30;
    return diag;
}

} // namespace

CalibrationResult calibrate(const ObservedSeries& data,
                            const CalibrationConfig& config,
                            const ModelParams& base) {
    if (config.starts < 1) {
        throw ParameterError("calibrate: starts must be >= 1");
    }
    if (data.size() < 7) {
        throw HorizonError("calibrate: observed series too short");
    }
    const ObservedSeries fit_data = data.smoothed ? data : smooth_series(data);
    const double omega =
        config.omega < 0.0 ? auto_omega(fit_data, config.fit_days) : config.omega;

    DateSeries lambda(base.horizon);
    for (int t = 1; t <= base.horizon; ++t) {
        lambda(t) = lockdown_path(t, base.lambda_bar);
    }
    const DateSeries x_bar =
        extrapolate_tests(fit_data.tests / base.population, base.horizon);
    const VaccineSchedule sched =
        build_vaccine_schedule(base.vaccine_mean, base.vaccine_variance, base.horizon);

    // start 0 from the bound centers, the rest from seeded uniforms
    std::vector<Coords> starts(config.starts);
    std::mt19937_64 rng(config.seed);
    for (int s = 0; s < config.starts; ++s) {
        for (int i = 0; i < 4; ++i) {
            const auto [lo, hi] = config.bounds[i];
            if (s == 0) {
                starts[s][i] = 0.5 * (lo + hi);
            } else {
                std::uniform_real_distribution<double> u(lo, hi);
                starts[s][i] = u(rng);
            }
        }
    }

    CalibrationResult result;
    result.omega = omega;
    result.starts.resize(config.starts);
    parallel_for(config.starts, [&](int s) {
        // warm-start the inner sweep from the previous evaluation's profile
        TriSeries warm_alpha;
        bool have_warm = false;
        const auto objective = [&](const Coords& x) {
            InnerOptions opts;
            opts.warm_alpha = have_warm ? &warm_alpha : nullptr;
            const LossValue v = loss_with_options(theta_from(x), fit_data, omega,
                                                  base, lambda, x_bar, sched, opts,
                                                  &warm_alpha);
            have_warm = v.converged;
            return v.value;
        };
        result.starts[s] = simplex_search(starts[s], config, objective);
    });

    int best = 0;
    for (int s = 1; s < config.starts; ++s) {
        if (result.starts[s].loss < result.starts[best].loss) {
            best = s;
        }
    }
    if (!result.starts[best].converged) {
        throw ConvergenceError("calibration failed on every start", config.starts, 0.0);
    }
    result.theta = result.starts[best].theta;
    result.loss = result.starts[best].loss;
    return result;
}

} // namespace epictrl
