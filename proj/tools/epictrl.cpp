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
#include "epictrl/experiments.hpp"
#include "epictrl/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace epictrl;

constexpr int kExitNonConvergence = 2;
constexpr int kExitUsage = 64;
constexpr int kExitIo = 74;

ModelParams params_from_config(const std::string& config_path) {
    ModelParams params;
    if (!config_path.empty()) {
        apply_config(params, load_config(config_path));
    }
    params.validate();
    return params;
}

VaccineSchedule schedule_for(const ModelParams& params) {
    return build_vaccine_schedule(params.vaccine_mean, params.vaccine_variance,
                                  params.horizon);
}

/// Lockdown and test paths for a run: from the observed data when given,
/// otherwise the historical approximation and a flat zero test path.
struct RunInputs {
    DateSeries lambda;
    DateSeries x_bar;
};

RunInputs default_inputs(const ModelParams& params, const std::string& data_path) {
    RunInputs in;
    in.lambda = DateSeries(params.horizon, 1.0);
    for (int t = 1; t <= params.horizon; ++t) {
        in.lambda(t) = lockdown_path(t, params.lambda_bar);
    }
    if (!data_path.empty()) {
        const ObservedSeries data = smooth_series(load_observed_csv(data_path));
        in.x_bar = extrapolate_tests(data.tests / params.population, params.horizon);
    } else {
        in.x_bar = DateSeries(params.horizon, 0.0);
    }
    return in;
}

DateSeries lambda_from_policy_file(const std::string& path, int horizon) {
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open policy file: " + path);
    }
    DateSeries lambda(horizon, 1.0);
    std::string line;
    std::getline(is, line); // header: t,lambda
    int rows = 0;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw IoError("policy file row is not t,lambda: " + line);
        }
        const int t = std::stoi(line.substr(0, comma));
        if (t >= 1 && t <= horizon) {
            lambda(t) = std::stod(line.substr(comma + 1));
            ++rows;
        }
    }
    if (rows == 0) {
        throw IoError("policy file has no usable rows: " + path);
    }
    return lambda;
}

void write_file(const std::string& path, const std::function<void(std::ostream&)>& fn) {
    std::ofstream os(path);
    if (!os) {
        throw IoError("cannot write " + path);
    }
    fn(os);
}

std::vector<double> series_of(const DateSeries& s) {
    return {s.raw().data() + 1, s.raw().data() + s.raw().size()};
}

void emit_charts(const std::string& out_dir, const CompartmentGrid& grid,
                 const PolicyPath& policy, const ModelParams& params,
                 const DateSeries& r_eff) {
    const int T = grid.horizon();
    DateSeries death_flow(T), infections(T), distancing(T);
    for (int t = 1; t <= T; ++t) {
        death_flow(t) = params.m_h / params.t_h * grid.H(t) * params.population;
        infections(t) = grid.I_tot(t) + grid.IT(t);
        distancing(t) = 1.0 - mean_alpha(grid, policy, t);
    }
    write_file(out_dir + "/deaths.svg", [&](std::ostream& os) {
        write_svg_chart(os, "Daily deaths", {{"deaths", series_of(death_flow)}});
    });
    write_file(out_dir + "/infections.svg", [&](std::ostream& os) {
        write_svg_chart(os, "Active infections (I + IT)",
                        {{"infections", series_of(infections)}});
    });
    write_file(out_dir + "/distancing.svg", [&](std::ostream& os) {
        write_svg_chart(os, "Social distancing and lockdown",
                        {{"distancing", series_of(distancing)},
                         {"lambda", series_of(policy.lambda)}});
    });
    write_file(out_dir + "/r_eff.svg", [&](std::ostream& os) {
        write_svg_chart(os, "Effective reproductive number",
                        {{"R_eff", series_of(r_eff)}});
    });
}

int cmd_simulate(const std::string& config, const std::string& data,
                 const std::string& policy_file, const std::string& out_dir) {
    const ModelParams params = params_from_config(config);
    const VaccineSchedule sched = schedule_for(params);
    RunInputs in = default_inputs(params, data);
    if (!policy_file.empty()) {
        in.lambda = lambda_from_policy_file(policy_file, params.horizon);
    }
    std::filesystem::create_directories(out_dir);

    InnerOptions opts;
    std::ofstream diag(out_dir + "/inner_diagnostics.csv");
    diag << "iteration,sup_distance,objective\n";
    opts.diagnostics = &diag;
    InnerResult inner;
    try {
        inner = inner_sweep(in.lambda, in.x_bar, params, sched, opts);
    } catch (const ConvergenceError& e) {
        std::cerr << "simulate: " << e.what() << "\n"
                  << "diagnostics: " << out_dir << "/inner_diagnostics.csv\n";
        return kExitNonConvergence;
    }

    write_file(out_dir + "/trajectory.csv", [&](std::ostream& os) {
        write_trajectory_csv(os, inner.grid, inner.policy, params);
    });
    DateSeries r_eff(params.horizon, std::numeric_limits<double>::quiet_NaN());
    for (int t = 1; t <= params.horizon; ++t) {
        if (inner.grid.I_tot(t) > 0.0) {
            r_eff(t) = effective_R(inner.grid, inner.policy, params, t);
        }
    }
    emit_charts(out_dir, inner.grid, inner.policy, params, r_eff);
    const double deaths = (inner.grid.D(params.horizon) +
                           params.m_h / params.t_h * inner.grid.H(params.horizon)) *
                          params.population;
    std::cout << "simulate: converged in " << inner.iterations
              << " iterations; cumulative deaths " << format_number(deaths) << "\n";
    return 0;
}

int cmd_optimize(const std::string& config, const std::string& data, double xi,
                 const std::string& out_dir, int starts, std::uint64_t seed) {
    ModelParams params = params_from_config(config);
    params.xi = xi;
    const VaccineSchedule sched = schedule_for(params);
    const RunInputs in = default_inputs(params, data);
    std::filesystem::create_directories(out_dir);

    OuterOptions opts;
    opts.eps = params.epsilon;
    OptimalPolicyResult res;
    try {
        res = (starts > 1)
                  ? outer_sweep_multistart(params, in.x_bar, sched, opts, starts, seed)
                  : outer_sweep(params, in.x_bar, sched, opts);
    } catch (const ConvergenceError& e) {
        write_file(out_dir + "/diagnostics.txt", [&](std::ostream& os) {
            os << e.what() << "\niterations=" << e.iterations
               << "\nlast_distance=" << e.last_distance << "\n";
        });
        std::cerr << "optimize: " << e.what() << "\n";
        return kExitNonConvergence;
    }
    write_file(out_dir + "/result.csv", [&](std::ostream& os) {
        write_result_csv(os, res, params);
    });
    write_file(out_dir + "/summary.csv", [&](std::ostream& os) {
        write_summary_csv(os, res, params);
    });
    emit_charts(out_dir, res.grid, res.policy, params, res.r_eff);
    const double deaths = (res.grid.D(params.horizon) +
                           params.m_h / params.t_h * res.grid.H(params.horizon)) *
                          params.population;
    std::cout << "optimize: xi=" << xi << " objective="
              << format_number(res.objective) << " cumulative_deaths="
              << format_number(deaths) << " npv_output="
              << format_number(res.npv_output) << "\n";
    return 0;
}

std::vector<double> parse_grid(const std::string& spec) {
    // "start:stop:step" inclusive grid
    const auto c1 = spec.find(':');
    const auto c2 = spec.find(':', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
        throw ParameterError("grid must be start:stop:step");
    }
    const double start = std::stod(spec.substr(0, c1));
    const double stop = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
    const double step = std::stod(spec.substr(c2 + 1));
    if (!(step > 0.0) || stop < start) {
        throw ParameterError("grid must satisfy start <= stop, step > 0");
    }
    std::vector<double> grid;
    for (double v = start; v <= stop + 1e-9; v += step) {
        grid.push_back(v);
    }
    return grid;
}

int cmd_pareto(const std::string& config, const std::string& data,
               const std::string& grid_spec, const std::string& out_dir) {
    const ModelParams params = params_from_config(config);
    const VaccineSchedule sched = schedule_for(params);
    const RunInputs in = default_inputs(params, data);
    const std::vector<double> grid = parse_grid(grid_spec);

    OuterOptions opts;
    opts.eps = params.epsilon;
    const auto points = pareto_frontier(grid, params, in.x_bar, sched, opts);
    write_frontier_csv(out_dir, points);
    int converged = 0;
    for (const auto& pt : points) {
        converged += pt.converged ? 1 : 0;
    }
    std::cout << "pareto: " << converged << "/" << points.size()
              << " points converged; frontier at " << out_dir << "/frontier.csv\n";
    return converged == static_cast<int>(points.size()) ? 0 : kExitNonConvergence;
}

int cmd_experiment(const std::string& config, const std::string& data,
                   const std::string& scenario_label, const std::string& out_dir) {
    const ModelParams params = params_from_config(config);
    const VaccineSchedule sched = schedule_for(params);
    const RunInputs in = default_inputs(params, data);
    const Scenario scenario = parse_scenario(scenario_label);

    OuterOptions opts;
    opts.eps = params.epsilon;
    ScenarioResult result;
    try {
        result = run_scenario(scenario, params, in.x_bar, sched, opts);
    } catch (const ConvergenceError& e) {
        std::cerr << "experiment: " << e.what() << "\n";
        return kExitNonConvergence;
    }
    write_scenario_bundle(out_dir, result, params);
    std::cout << "experiment " << scenario.label() << ": cumulative_deaths="
              << format_number(result.cumulative_deaths) << " npv_output="
              << format_number(result.run.npv_output) << "\n";
    return 0;
}

int cmd_calibrate(const std::string& config, const std::string& data,
                  const std::string& omega_spec, int starts, std::uint64_t seed,
                  int max_evals, const std::string& out_dir) {
    const ModelParams params = params_from_config(config);
    const ObservedSeries raw = load_observed_csv(data);
    CalibrationConfig cfg;
    cfg.starts = starts;
    cfg.seed = seed;
    if (max_evals > 0) {
        cfg.max_evaluations = max_evals;
    }
    if (omega_spec != "auto") {
        cfg.omega = std::stod(omega_spec);
    }
    CalibrationResult res;
    try {
        res = calibrate(raw, cfg, params);
    } catch (const ConvergenceError& e) {
        std::cerr << "calibrate: " << e.what() << "\n";
        return kExitNonConvergence;
    }

    std::filesystem::create_directories(out_dir);
    write_file(out_dir + "/theta.csv", [&](std::ostream& os) {
        os << "beta_w,beta_s,gamma,c,phi_plus,phi_minus,loss,omega\n"
           << format_number(res.theta.beta) << ',' << format_number(res.theta.beta)
           << ',' << format_number(res.theta.gamma) << ','
           << format_number(res.theta.c) << ',' << format_number(res.theta.phi_plus)
           << ',' << format_number(res.theta.phi_plus / 10.0) << ','
           << format_number(res.loss) << ',' << format_number(res.omega) << '\n';
    });
    write_file(out_dir + "/starts.csv", [&](std::ostream& os) {
        os << "start,beta,gamma,c,phi_plus,loss,evaluations,converged\n";
        for (size_t s = 0; s < res.starts.size(); ++s) {
            const auto& d = res.starts[s];
            os << s << ',' << format_number(d.theta.beta) << ','
               << format_number(d.theta.gamma) << ',' << format_number(d.theta.c)
               << ',' << format_number(d.theta.phi_plus) << ','
               << format_number(d.loss) << ',' << d.evaluations << ','
               << (d.converged ? 1 : 0) << '\n';
        }
    });

    // fit trajectory at the calibrated point
    const ModelParams fitted = res.theta.apply(params);
    const VaccineSchedule sched = schedule_for(fitted);
    const RunInputs in = default_inputs(fitted, data);
    const InnerResult inner = inner_sweep(in.lambda, in.x_bar, fitted, sched);
    write_file(out_dir + "/fit_trajectory.csv", [&](std::ostream& os) {
        write_trajectory_csv(os, inner.grid, inner.policy, fitted);
    });
    std::cout << "calibrate: beta=" << format_number(res.theta.beta)
              << " gamma=" << format_number(res.theta.gamma)
              << " c=" << format_number(res.theta.c)
              << " phi_plus=" << format_number(res.theta.phi_plus)
              << " loss=" << format_number(res.loss) << "\n";
    return 0;
}

int cmd_fit_tests(const std::string& config, const std::string& data,
                  const std::string& out_path) {
    const ModelParams params = params_from_config(config);
    const ObservedSeries smoothed = smooth_series(load_observed_csv(data));
    const DateSeries path =
        extrapolate_tests(smoothed.tests / params.population, params.horizon);
    write_file(out_path, [&](std::ostream& os) {
        os << "date,tests_per_capita,tests\n";
        for (int t = 1; t <= params.horizon; ++t) {
            os << date_of_day(t) << ',' << format_number(path(t)) << ','
               << format_number(path(t) * params.population) << '\n';
        }
    });
    std::cout << "fit-tests: wrote " << out_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"testing-augmented SIR economy: simulation, optimal policy, "
                 "calibration and experiments"};
    app.require_subcommand(1);

    std::string config, data, policy_file, out_dir = "out", scenario = "baseline";
    std::string grid_spec = "0:30:1", omega = "auto", out_path = "tests_fit.csv";
    double xi = 20.0;
    int starts = 1, max_evals = 0;
    std::uint64_t seed = 1;

    auto* sim = app.add_subcommand("simulate", "agent equilibrium under given policies");
    sim->add_option("--config", config, "key=value config file");
    sim->add_option("--data", data, "observed series CSV (tests feed the capacity)");
    sim->add_option("--policy", policy_file, "lockdown override CSV: t,lambda");
    sim->add_option("--out", out_dir, "output directory");

    auto* opt = app.add_subcommand("optimize", "solve the optimal-policy problem");
    opt->add_option("--config", config);
    opt->add_option("--data", data);
    opt->add_option("--xi", xi, "Pareto weight on survivors");
    opt->add_option("--starts", starts, "multi-start count");
    opt->add_option("--seed", seed);
    opt->add_option("--out", out_dir);

    auto* par = app.add_subcommand("pareto", "frontier over a xi grid");
    par->add_option("--config", config);
    par->add_option("--data", data);
    par->add_option("--grid", grid_spec, "xi grid start:stop:step");
    par->add_option("--out", out_dir);

    auto* exp = app.add_subcommand("experiment", "counterfactual scenario");
    exp->add_option("--config", config);
    exp->add_option("--data", data);
    exp->add_option("--scenario", scenario,
                    "baseline|no_lockdown|no_social_distancing|high_testing|"
                    "efficient_testing|high_and_efficient|eta_split:<eta>|myopic");
    exp->add_option("--out", out_dir);

    auto* cal = app.add_subcommand("calibrate", "fit the behavioral parameters");
    cal->add_option("--config", config);
    cal->add_option("--data", data)->required();
    cal->add_option("--omega", omega, "loss weight or 'auto'");
    cal->add_option("--starts", starts);
    cal->add_option("--seed", seed);
    cal->add_option("--max-evals", max_evals, "evaluation cap per start");
    cal->add_option("--out", out_dir);

    auto* fit = app.add_subcommand("fit-tests", "extrapolate the test capacity path");
    fit->add_option("--config", config);
    fit->add_option("--data", data)->required();
    fit->add_option("--out", out_path, "output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (sim->parsed()) {
            return cmd_simulate(config, data, policy_file, out_dir);
        }
        if (opt->parsed()) {
            return cmd_optimize(config, data, xi, out_dir, starts, seed);
        }
        if (par->parsed()) {
            return cmd_pareto(config, data, grid_spec, out_dir);
        }
        if (exp->parsed()) {
            return cmd_experiment(config, data, scenario, out_dir);
        }
        if (cal->parsed()) {
            return cmd_calibrate(config, data, omega, starts, seed, max_evals, out_dir);
        }
        if (fit->parsed()) {
            return cmd_fit_tests(config, data, out_path);
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitUsage;
}
