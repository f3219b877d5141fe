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
#include "epictrl/io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace epictrl {

namespace {

// proleptic Gregorian day arithmetic; the anchor is 2020-02-29 = t1
long days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe);
}

void civil_from_days(long z, int& y, unsigned& m, unsigned& d) {
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const long yr = static_cast<long>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = static_cast<int>(yr + (m <= 2));
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const double x = std::stod(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument(value);
        }
        return x;
    } catch (const std::exception&) {
        throw ParameterError("config key " + key + ": cannot parse '" + value + "'");
    }
}

} // namespace

std::string date_of_day(int t) {
    static const long anchor = days_from_civil(2020, 2, 29);
    int y;
    unsigned m, d;
    civil_from_days(anchor + t - 1, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y, m, d);
    return buf;
}

std::string format_number(double x) {
    if (std::isnan(x)) {
        return "";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

double mean_alpha(const CompartmentGrid& grid, const PolicyPath& policy, int t) {
    double mass = 0.0, weighted = 0.0;
    for (int k = 1; k <= t; ++k) {
        const double n = grid.S(t, k) + grid.I(t, k) + grid.R(t, k);
        mass += n;
        weighted += n * policy.alpha(t, k);
    }
    return mass > 0.0 ? weighted / mass : 1.0;
}

namespace {

void write_rows(std::ostream& os, const CompartmentGrid& grid,
                const PolicyPath& policy, const ModelParams& params,
                bool policy_first) {
    const int T = grid.horizon();
    for (int t = 1; t <= T; ++t) {
        double r_eff = std::numeric_limits<double>::quiet_NaN();
        if (grid.I_tot(t) > 0.0) {
            r_eff = effective_R(grid, policy, params, t);
        }
        const std::string state =
            format_number(grid.S_tot(t)) + ',' + format_number(grid.I_tot(t)) + ',' +
            format_number(grid.IT(t)) + ',' + format_number(grid.R_tot(t)) + ',' +
            format_number(grid.RT(t)) + ',' + format_number(grid.H(t)) + ',' +
            format_number(grid.D(t));
        const std::string pol = format_number(policy.lambda(t)) + ',' +
                                format_number(policy.tau(t)) + ',' +
                                format_number(mean_alpha(grid, policy, t));
        os << date_of_day(t) << ',';
        if (policy_first) {
            os << pol << ',' << state;
        } else {
            os << state << ',' << pol;
        }
        os << ',' << format_number(output_at(grid, policy, t)) << ','
           << format_number(r_eff) << '\n';
    }
}

} // namespace

void write_trajectory_csv(std::ostream& os, const CompartmentGrid& grid,
                          const PolicyPath& policy, const ModelParams& params) {
    os << "date,S,I,IT,R,RT,H,D,lambda,tau,alpha_mean,Y,R_eff\n";
    write_rows(os, grid, policy, params, false);
}

void write_result_csv(std::ostream& os, const OptimalPolicyResult& result,
                      const ModelParams& params) {
    os << "date,lambda,tau,alpha_mean,S,I,IT,R,RT,H,D,Y,R_eff\n";
    write_rows(os, result.grid, result.policy, params, true);
}

void write_summary_csv(std::ostream& os, const OptimalPolicyResult& result,
                       const ModelParams& params) {
    const int T = result.grid.horizon();
    const double deaths = result.grid.D(T) +
                          params.m_h / params.t_h * result.grid.H(T);
    os << "objective,cumulative_deaths,npv_output,survivors,outer_iterations\n";
    os << format_number(result.objective) << ','
       << format_number(deaths * params.population) << ','
       << format_number(result.npv_output) << ','
       << format_number(result.survivors) << ',' << result.outer_iterations << '\n';
}

void write_svg_chart(std::ostream& os, const std::string& title,
                     const std::vector<ChartSeries>& series) {
    constexpr int W = 880, H = 460, L = 70, R = 30, Tm = 40, B = 40;
    static const char* kColors[] = {"#1f2d7a", "#c0392b", "#1e8449", "#b7950b",
                                    "#6c3483", "#117864"};

    double lo = 0.0, hi = 1e-12;
    size_t n = 1;
    for (const auto& s : series) {
        n = std::max(n, s.values.size());
        for (double v : s.values) {
            if (std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }
    const double span = hi - lo > 0 ? hi - lo : 1.0;
    const auto px = [&](size_t i) {
        return L + (W - L - R) * static_cast<double>(i) /
                   static_cast<double>(std::max<size_t>(n - 1, 1));
    };
    const auto py = [&](double v) { return H - B - (H - Tm - B) * (v - lo) / span; };

    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
       << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" "
          "font-family=\"sans-serif\" font-size=\"16\">"
       << title << "</text>\n";
    // axes and horizontal grid lines with labels
    for (int g = 0; g <= 4; ++g) {
        const double v = lo + span * g / 4.0;
        const double y = py(v);
        os << "<line x1=\"" << L << "\" y1=\"" << y << "\" x2=\"" << W - R
           << "\" y2=\"" << y << "\" stroke=\"#dddddd\"/>\n"
           << "<text x=\"" << L - 6 << "\" y=\"" << y + 4
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
              "font-size=\"11\">"
           << format_number(v) << "</text>\n";
    }
    int ci = 0;
    for (const auto& s : series) {
        const char* color = kColors[ci % 6];
        os << "<polyline fill=\"none\" stroke=\"" << color
           << "\" stroke-width=\"1.5\" points=\"";
        bool open = false;
        for (size_t i = 0; i < s.values.size(); ++i) {
            if (std::isfinite(s.values[i])) {
                os << px(i) << ',' << py(s.values[i]) << ' ';
                open = true;
            } else if (open) {
                os << "\"/>\n<polyline fill=\"none\" stroke=\"" << color
                   << "\" stroke-width=\"1.5\" points=\"";
                open = false;
            }
        }
        os << "\"/>\n";
        os << "<text x=\"" << L + 10 << "\" y=\"" << Tm + 16 * (ci + 1)
           << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color
           << "\">" << s.name << "</text>\n";
        ++ci;
    }
    os << "</svg>\n";
}

ConfigMap parse_config(std::istream& is) {
    ConfigMap cfg;
    std::string line, section;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParameterError("config line is not key=value: '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        cfg[section.empty() ? key : section + "." + key] = value;
    }
    return cfg;
}

ConfigMap load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open config file: " + path);
    }
    return parse_config(is);
}

void apply_config(ModelParams& params, const ConfigMap& config) {
    const std::map<std::string, double ModelParams::*> real_keys = {
        {"model.beta_w", &ModelParams::beta_w},
        {"model.beta_s", &ModelParams::beta_s},
        {"model.gamma", &ModelParams::gamma},
        {"model.c", &ModelParams::c},
        {"model.phi_plus", &ModelParams::phi_plus},
        {"model.phi_minus", &ModelParams::phi_minus},
        {"model.m_i", &ModelParams::m_i},
        {"model.m_h", &ModelParams::m_h},
        {"model.lambda_bar", &ModelParams::lambda_bar},
        {"model.delta_a", &ModelParams::delta_a},
        {"model.delta_g", &ModelParams::delta_g},
        {"model.xi", &ModelParams::xi},
        {"model.e0", &ModelParams::e0},
        {"model.kappa", &ModelParams::kappa},
        {"model.epsilon", &ModelParams::epsilon},
        {"model.eta_split", &ModelParams::eta_split},
        {"model.population", &ModelParams::population},
        {"model.ifr", &ModelParams::ifr},
        {"vaccine.mean", &ModelParams::vaccine_mean},
        {"vaccine.variance", &ModelParams::vaccine_variance},
    };
    for (const auto& [key, value] : config) {
        if (key.rfind("model.", 0) != 0 && key.rfind("vaccine.", 0) != 0) {
            continue; // other sections belong to the caller
        }
        if (key == "model.t_i" || key == "model.t_h" || key == "model.horizon") {
            const double x = parse_double(key, value);
            if (x != std::floor(x)) {
                throw ParameterError("config key " + key + " must be an integer");
            }
            if (key == "model.t_i") {
                params.t_i = static_cast<int>(x);
            } else if (key == "model.t_h") {
                params.t_h = static_cast<int>(x);
            } else {
                params.horizon = static_cast<int>(x);
            }
            continue;
        }
        const auto it = real_keys.find(key);
        if (it == real_keys.end()) {
            throw ParameterError("unknown config key: " + key);
        }
        params.*(it->second) = parse_double(key, value);
    }
}

int worker_count() {
    if (const char* env = std::getenv("EPICTRL_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) {
            return n;
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
    const int workers = std::min(worker_count(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) {
                    return;
                }
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

} // namespace epictrl
