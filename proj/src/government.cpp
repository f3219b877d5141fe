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
#include "epictrl/government.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace epictrl {

namespace {

/// Eligible testing pool at date t (the left-side bracket of the tau FOC
/// divided by tau, i.e. tested mass per unit rate).
double testing_pool(const CompartmentGrid& grid, const PolicyPath& policy,
                    const ModelParams& params, int t) {
    const double S = grid.S_tot(t);
    const double I = grid.I_tot(t);
    const double R = grid.R_tot(t);
    const double hatS = hat_sum(grid.S, policy.alpha, t);
    const double hatI = hat_sum(grid.I, policy.alpha, t);
    const double lam = policy.lambda(t);
    const double new_inf = params.beta_w * lam * lam * S * I + params.beta_s * hatS * hatI;
    return params.gamma * (S - new_inf) +
           params.gamma * (R + (1.0 - params.m_i) / params.t_i * I) +
           (1.0 - 1.0 / params.t_i) * I + new_inf;
}

double gov_delta(const AdjointFamily& adj, const PolicyPath& policy,
                 const ModelParams& params, int t, int k) {
    const double tau = policy.tau(t);
    const double tg = tau * params.gamma;
    return (1.0 - tg) * adj.S(t, k) + tg * adj.S(t, t + 1) -
           (1.0 - tau) * adj.I(t, k) - tau * adj.IT(t);
}

} // namespace

double government_objective(const CompartmentGrid& grid, const PolicyPath& policy,
                            const ModelParams& params, const VaccineSchedule& sched) {
    const int T = grid.horizon();
    const double dg = params.delta_g;
    double value = 0.0;
    double disc = 1.0; // delta_G^{t-1}
    for (int t = 1; t <= T; ++t) {
        const double d_next = (t < T) ? grid.D(t + 1) : grid.D(T);
        value += (1.0 - dg) * disc * output_at(grid, policy, t) * sched.q(t) +
                 (disc * dg + params.xi) * (1.0 - d_next) * sched.p(t);
        disc *= dg;
    }
    return value;
}

double government_output_value(const CompartmentGrid& grid, const PolicyPath& policy,
                               const ModelParams& params, const VaccineSchedule& sched) {
    const int T = grid.horizon();
    const double dg = params.delta_g;
    double value = 0.0;
    double disc = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double d_next = (t < T) ? grid.D(t + 1) : grid.D(T);
        value += (1.0 - dg) * disc * output_at(grid, policy, t) * sched.q(t) +
                 disc * dg * (1.0 - d_next) * sched.p(t);
        disc *= dg;
    }
    return value;
}

double expected_survivors(const CompartmentGrid& grid, const ModelParams& params,
                          const VaccineSchedule& sched) {
    (void)params;
    const int T = grid.horizon();
    double value = 0.0;
    for (int t = 1; t <= T; ++t) {
        const double d_next = (t < T) ? grid.D(t + 1) : grid.D(T);
        value += (1.0 - d_next) * sched.p(t);
    }
    return value;
}

CompartmentGrid dual_forward(const CompartmentGrid& grid, const PolicyPath& policy,
                             const TriSeries& eta, const ModelParams& params) {
    const int T = grid.horizon();
    if (eta.horizon() != T) {
        throw ShapeError("dual_forward: eta horizon mismatch");
    }
    const double bw = params.beta_w;
    const double bs = params.beta_s;
    const double ti_stay = 1.0 - 1.0 / params.t_i;
    const double rec_share = (1.0 - params.m_i) / params.t_i;

    CompartmentGrid dual(T); // Pi-bar_1 = 0 from value initialization
    for (int t = 1; t < T; ++t) {
        const double tau = policy.tau(t);
        const double tg = tau * params.gamma;
        const double lam = policy.lambda(t);
        const double work = bw * lam * lam;
        const double I_t = grid.I_tot(t);
        const double hatI = hat_sum(grid.I, policy.alpha, t);

        double dS_sum = 0.0, dS_hat = 0.0, dS_inf = 0.0, eta_S = 0.0;
        for (int k = 1; k <= t; ++k) {
            const double a = policy.alpha(t, k);
            const double hazard = work * I_t + bs * a * hatI;
            const double source = bs * eta(t, k) * grid.S(t, k) * hatI;
            const double infected = dual.S(t, k) * hazard - source;
            dS_sum += dual.S(t, k);
            dS_hat += a * dual.S(t, k);
            dS_inf += infected;
            eta_S += eta(t, k) * grid.S(t, k);

            dual.S(t + 1, k) = (1.0 - tg) * (dual.S(t, k) - infected);
            dual.I(t + 1, k) = (1.0 - tau) * (ti_stay * dual.I(t, k) + infected);
            dual.R(t + 1, k) = (1.0 - tg) * (dual.R(t, k) + rec_share * dual.I(t, k));
        }
        const double dI_sum = dual.I.row(t).sum();
        dual.S(t + 1, t + 1) =
            tg * (dS_sum - work * dS_sum * I_t - bs * (dS_hat - eta_S) * hatI);
        dual.I(t + 1, t + 1) = 0.0;
        dual.R(t + 1, t + 1) = 0.0;
        dual.IT(t + 1) = ti_stay * dual.IT(t) + tau * (ti_stay * dI_sum + dS_inf);
        dual.RT(t + 1) = dual.RT(t) + rec_share * dual.IT(t) +
                         (1.0 - params.m_h) / params.t_h * dual.H(t) +
                         tg * (dual.R.row(t).sum() + rec_share * dI_sum);
        dual.H(t + 1) = (1.0 - 1.0 / params.t_h) * dual.H(t) +
                        params.m_i / params.t_i * (dI_sum + dual.IT(t));
    }
    return dual;
}

AdjointFamily dual_backward(const CompartmentGrid& grid, const PolicyPath& policy,
                            const AdjointFamily& agent_adj,
                            const CompartmentGrid& duals, const TriSeries& eta,
                            const DateSeries& chi, const ModelParams& params,
                            const VaccineSchedule& sched) {
    const int T = grid.horizon();
    const double da = params.delta_a;
    const double dg = params.delta_g;
    const double c = params.c;
    const double bw = params.beta_w;
    const double bs = params.beta_s;
    const double ti_stay = 1.0 - 1.0 / params.t_i;
    const double rec_share = (1.0 - params.m_i) / params.t_i;

    AdjointFamily adj(T);
    const double terminal = sched.p(T) * (params.xi + std::pow(dg, T));
    adj.S.row(T).setConstant(terminal);
    adj.I.row(T).setConstant(terminal);
    adj.R.row(T).setConstant(terminal);
    adj.IT(T) = adj.RT(T) = adj.H(T) = terminal;

    for (int t = T - 1; t >= 1; --t) {
        const int s = t + 1;
        const double tau = policy.tau(s);
        const double tg = tau * params.gamma;
        const double lam = policy.lambda(s);
        const double q = sched.q(s);
        const double p = sched.p(t);
        const double work = bw * lam * lam;
        const double disc_g = std::pow(dg, t);
        const double disc_a = std::pow(da, t);
        const double flow_g = (1.0 - dg) * disc_g * lam * q;
        const double arrival = (disc_g + params.xi) * p;
        const double fa = (1.0 - da) * disc_a * q; // behavioral flow scale

        const double S_s = grid.S_tot(s);
        const double I_s = grid.I_tot(s);
        const double hatS = hat_sum(grid.S, policy.alpha, s);
        const double hatI = hat_sum(grid.I, policy.alpha, s);
        const double hatS_dual = hat_sum(duals.S, policy.alpha, s);

        // date-s aggregates shared across bins
        double eta_I = 0.0, eta_S = 0.0, eta_S_delta = 0.0;
        double dualI_sum = 0.0, dualI_hat = 0.0;
        double gde_S = 0.0, gde_S_hat = 0.0;   // gov delta times state S
        double ade_dS = 0.0, ade_dS_hat = 0.0; // agent delta times dual S
        double dualS_sum = 0.0;
        for (int m = 1; m <= s; ++m) {
            const double a = policy.alpha(s, m);
            const double agent_d = agent_delta(agent_adj, policy, params, s, m);
            const double gov_d = gov_delta(adj, policy, params, s, m);
            eta_I += eta(s, m) * grid.I(s, m);
            eta_S += eta(s, m) * grid.S(s, m);
            eta_S_delta += eta(s, m) * grid.S(s, m) * agent_d;
            dualI_sum += duals.I(s, m);
            dualI_hat += a * duals.I(s, m);
            gde_S += gov_d * grid.S(s, m);
            gde_S_hat += gov_d * grid.S(s, m) * a;
            ade_dS += agent_d * duals.S(s, m);
            ade_dS_hat += agent_d * duals.S(s, m) * a;
            dualS_sum += duals.S(s, m);
        }
        const double phi_plus_fa = fa * params.phi_plus;
        const double phi_minus_fa = fa * params.phi_minus;

        for (int k = 1; k <= t + 1; ++k) {
            const double a = policy.alpha(s, k);
            const double hazard = work * I_s + bs * a * hatI;
            const double agent_d = agent_delta(agent_adj, policy, params, s, k);
            const double gov_d = gov_delta(adj, policy, params, s, k);
            adj.S(t, k) =
                (1.0 - tg) * adj.S(s, k) + tg * adj.S(s, s + 1) - gov_d * hazard +
                flow_g + arrival -
                chi(s) * tau * (params.gamma + (1.0 - params.gamma) * hazard) -
                eta(s, k) * (fa * c * (1.0 - a) - phi_plus_fa * bs * hatI -
                             agent_d * bs * hatI) +
                phi_minus_fa * bs * a * eta_I -
                phi_minus_fa * (work * dualI_sum + bs * a * dualI_hat);
        }
        for (int k = 1; k <= t; ++k) {
            const double a = policy.alpha(s, k);
            const double social = bs * a;
            adj.I(t, k) =
                ti_stay * ((1.0 - tau) * adj.I(s, k) + tau * adj.IT(s)) +
                rec_share * ((1.0 - tg) * adj.R(s, k) + tg * adj.RT(s)) +
                params.m_i / params.t_i * adj.H(s) + flow_g + arrival -
                chi(s) * tau *
                    (params.gamma * rec_share + ti_stay +
                     (1.0 - params.gamma) * (work * S_s + social * hatS)) -
                eta(s, k) * fa * (c * (1.0 - a) - bs * params.phi_minus * hatS) +
                social * (phi_plus_fa * eta_S + eta_S_delta) -
                (work * gde_S + social * gde_S_hat) -
                (work * (ade_dS + phi_plus_fa * dualS_sum) +
                 social * (ade_dS_hat + phi_plus_fa * hatS_dual));
            adj.R(t, k) = (1.0 - tg) * adj.R(s, k) + tg * adj.RT(s) + flow_g +
                          arrival - chi(s) * tau * params.gamma -
                          eta(s, k) * fa * c * (1.0 - a);
        }
        adj.IT(t) = ti_stay * adj.IT(s) + rec_share * adj.RT(s) +
                    params.m_i / params.t_i * adj.H(s) + arrival;
        adj.RT(t) = adj.RT(s) + flow_g + arrival;
        adj.H(t) = (1.0 - 1.0 / params.t_h) * adj.H(s) +
                   (1.0 - params.m_h) / params.t_h * adj.RT(s) + arrival;
        if (s == T) {
            // mass dying at the truncation date keeps its claim on the final
            // arrival value; see the matching step in the agent sweep
            adj.H(t) += params.m_h / params.t_h * terminal;
        }
    }
    return adj;
}

std::pair<double, double> lambda_coefficients(
    int t, const CompartmentGrid& grid, const PolicyPath& policy,
    const AdjointFamily& agent_adj, const AdjointFamily& gov_adj,
    const CompartmentGrid& duals, const DateSeries& chi, const ModelParams& params,
    const VaccineSchedule& sched) {
    const double q = sched.q(t);
    const double disc_g = std::pow(params.delta_g, t - 1);
    const double disc_a = std::pow(params.delta_a, t - 1);
    const double unit_output =
        grid.S_tot(t) + grid.I_tot(t) + grid.R_tot(t) + grid.RT(t);
    const double dual_output = duals.S.row(t).sum() + duals.I.row(t).sum() +
                               duals.R.row(t).sum() + duals.RT(t);
    const double a_t = (1.0 - params.delta_g) * disc_g * unit_output * q +
                       (1.0 - params.delta_a) * disc_a * dual_output * q;

    const double I_t = grid.I_tot(t);
    double cross = 0.0;
    for (int k = 1; k <= t; ++k) {
        cross += gov_delta(gov_adj, policy, params, t, k) * grid.S(t, k) +
                 agent_delta(agent_adj, policy, params, t, k) * duals.S(t, k);
    }
    const double b_t =
        params.beta_w * cross * I_t +
        params.beta_w * chi(t) * policy.tau(t) * (1.0 - params.gamma) *
            grid.S_tot(t) * I_t +
        params.beta_w * (1.0 - params.delta_a) * disc_a *
            (params.phi_plus * duals.S.row(t).sum() * I_t +
             params.phi_minus * grid.S_tot(t) * duals.I.row(t).sum()) *
            q;
    return {a_t, b_t};
}

double optimal_lambda(double a, double b, double lambda_bar) {
    if (b <= 0.0) {
        return 1.0;
    }
    return std::min(1.0, std::max({0.0, lambda_bar, a / (2.0 * b)}));
}

Eigen::VectorXd solve_eta(int t, const CompartmentGrid& grid,
                          const PolicyPath& policy, const AdjointFamily& agent_adj,
                          const AdjointFamily& gov_adj, const CompartmentGrid& duals,
                          double chi_t, const ModelParams& params,
                          const VaccineSchedule& sched) {
    const double q = sched.q(t);
    const double disc_a = std::pow(params.delta_a, t - 1);
    const double fa = (1.0 - params.delta_a) * disc_a * q;
    const double bs = params.beta_s;
    const double c = params.c;
    const double tau = policy.tau(t);
    const double hatS = hat_sum(grid.S, policy.alpha, t);
    const double hatI = hat_sum(grid.I, policy.alpha, t);
    const double hatS_dual = hat_sum(duals.S, policy.alpha, t);
    const double hatI_dual = hat_sum(duals.I, policy.alpha, t);

    std::vector<int> keep;
    keep.reserve(t);
    for (int k = 1; k <= t; ++k) {
        if (grid.S(t, k) + grid.I(t, k) + grid.R(t, k) >= kBinMassFloor) {
            keep.push_back(k);
        }
    }
    Eigen::VectorXd eta_full = Eigen::VectorXd::Zero(t);
    const int n = static_cast<int>(keep.size());
    if (n == 0) {
        return eta_full;
    }

    double gde_S_hat = 0.0;  // sum_m alpha Delta-bar_m S_m
    double ade_dS_hat = 0.0; // sum_m alpha Delta_m dualS_m
    for (int m = 1; m <= t; ++m) {
        const double a = policy.alpha(t, m);
        gde_S_hat += a * gov_delta(gov_adj, policy, params, t, m) * grid.S(t, m);
        ade_dS_hat += a * agent_delta(agent_adj, policy, params, t, m) * duals.S(t, m);
    }

    // The system is diagonal plus rank two:
    //   A = diag(d) + uI*wS^T + uS*wI^T
    // with uI_j = I_t^j, uS_j = S_t^j, wS_m = bs*(fa*phi+ + Delta_m) S_t^m,
    // wI_m = fa*bs*phi- * I_t^m.
    Eigen::VectorXd d(n), uI(n), uS(n), wS(n), wI(n), B(n);
    for (int row = 0; row < n; ++row) {
        const int j = keep[row];
        const double Sj = grid.S(t, j);
        const double Ij = grid.I(t, j);
        const double Rj = grid.R(t, j);
        const double aj = policy.alpha(t, j);
        const double mass = Sj + Ij + Rj;
        const double barrier =
            params.kappa * (1.0 / (aj * aj) + 1.0 / ((1.0 - aj) * (1.0 - aj)));
        const double agent_dj = agent_delta(agent_adj, policy, params, t, j);
        const double gov_dj = gov_delta(gov_adj, policy, params, t, j);

        d(row) = fa * c * (mass + barrier);
        uI(row) = Ij;
        uS(row) = Sj;
        wS(row) = bs * (fa * params.phi_plus + agent_dj) * Sj;
        wI(row) = fa * bs * params.phi_minus * Ij;
        B(row) =
            chi_t * tau * (1.0 - params.gamma) * bs * (Sj * hatI + hatS * Ij) +
            bs * Sj * hatI * gov_dj + bs * Ij * gde_S_hat +
            bs * hatI * duals.S(t, j) * (agent_dj + fa * params.phi_plus) +
            bs * Ij * (ade_dS_hat + fa * params.phi_plus * hatS_dual) -
            fa * c * (1.0 - aj) * (duals.S(t, j) + duals.I(t, j) + duals.R(t, j)) +
            fa * params.phi_minus * bs * (duals.I(t, j) * hatS + Sj * hatI_dual);
    }

    const auto structured_residual = [&](const Eigen::VectorXd& x) {
        const Eigen::VectorXd r = d.cwiseProduct(x) + uI * wS.dot(x) + uS * wI.dot(x) - B;
        return r.lpNorm<Eigen::Infinity>();
    };
    const double scale = std::max(1.0, B.lpNorm<Eigen::Infinity>());

    Eigen::VectorXd sol;
    bool solved = false;
    if (n > 64 && d.minCoeff() > 0.0) {
        // Woodbury on the rank-2 correction; falls back to dense on failure.
        const Eigen::VectorXd DiB = B.cwiseQuotient(d);
        const Eigen::VectorXd DiuI = uI.cwiseQuotient(d);
        const Eigen::VectorXd DiuS = uS.cwiseQuotient(d);
        Eigen::Matrix2d cap;
        cap << 1.0 + wS.dot(DiuI), wS.dot(DiuS), wI.dot(DiuI), 1.0 + wI.dot(DiuS);
        const double det = cap.determinant();
        if (std::abs(det) > 1e-13 * std::max(1.0, cap.cwiseAbs().maxCoeff())) {
            const Eigen::Vector2d rhs2(wS.dot(DiB), wI.dot(DiB));
            const Eigen::Vector2d z = cap.inverse() * rhs2;
            sol = DiB - DiuI * z(0) - DiuS * z(1);
            solved = structured_residual(sol) <= 1e-10 * scale;
        }
    }
    if (!solved) {
        Eigen::MatrixXd A = Eigen::MatrixXd(d.asDiagonal());
        A.noalias() += uI * wS.transpose();
        A.noalias() += uS * wI.transpose();
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
        const double rcond = lu.rcond();
        if (!(rcond > 1e-12)) {
            std::ostringstream os;
            os << "eta system ill-conditioned at t=" << t << ": condition estimate "
               << (rcond > 0 ? 1.0 / rcond : std::numeric_limits<double>::infinity());
            throw ConditioningError(os.str());
        }
        sol = lu.solve(B);
        sol += lu.solve(B - A * sol); // one refinement step tightens the residual
        if (structured_residual(sol) > 1e-10 * scale) {
            std::ostringstream os;
            os << "eta solve residual " << structured_residual(sol) << " at t=" << t;
            throw ConditioningError(os.str());
        }
    }
    for (int row = 0; row < n; ++row) {
        eta_full[keep[row] - 1] = sol[row];
    }
    return eta_full;
}

double solve_chi(int t, const CompartmentGrid& grid, const PolicyPath& policy,
                 const AdjointFamily& agent_adj, const AdjointFamily& gov_adj,
                 const CompartmentGrid& duals, const TriSeries& eta,
                 const ModelParams& params, const VaccineSchedule& sched) {
    (void)sched;
    const double pool = testing_pool(grid, policy, params, t);
    if (!(pool > 0.0)) {
        throw StateError("chi solve: nonpositive testing pool bracket");
    }
    const double bs = params.beta_s;
    const double bw = params.beta_w;
    const double lam = policy.lambda(t);
    const double work = bw * lam * lam;
    const double ti_stay = 1.0 - 1.0 / params.t_i;
    const double rec_share = (1.0 - params.m_i) / params.t_i;
    const double hatI = hat_sum(grid.I, policy.alpha, t);
    const double I_t = grid.I_tot(t);

    double rhs = 0.0;
    for (int k = 1; k <= t; ++k) {
        const double a = policy.alpha(t, k);
        const double Sk = grid.S(t, k);
        const double Ik = grid.I(t, k);
        const double Rk = grid.R(t, k);
        const double hazard = work * I_t + bs * a * hatI;
        const double infections = Sk * hazard;
        // derivative of the agent Delta w.r.t. tau
        const double dtau_agent = -params.gamma * agent_adj.S(t, k) +
                                  params.gamma * agent_adj.S(t, t + 1) +
                                  agent_adj.I(t, k) - agent_adj.IT(t);

        rhs += eta(t, k) * dtau_agent * bs * Sk * hatI;
        rhs -= params.gamma * (gov_adj.S(t, k) - gov_adj.S(t, t + 1)) *
               (Sk - infections);
        rhs -= (gov_adj.I(t, k) - gov_adj.IT(t)) * (ti_stay * Ik + infections);
        rhs -= params.gamma * (gov_adj.R(t, k) - gov_adj.RT(t)) *
               (Rk + rec_share * Ik);
        rhs += duals.S(t, k) * (params.gamma * (agent_adj.S(t, t + 1) - agent_adj.S(t, k)) -
                                dtau_agent * hazard);
        rhs += duals.I(t, k) * (ti_stay * (agent_adj.IT(t) - agent_adj.I(t, k)) +
                                params.gamma * rec_share *
                                    (agent_adj.RT(t) - agent_adj.R(t, k)));
        rhs += duals.R(t, k) * params.gamma * (agent_adj.RT(t) - agent_adj.R(t, k));
    }
    return rhs / pool;
}

OptimalPolicyResult outer_sweep(const ModelParams& params, const DateSeries& x_bar,
                                const VaccineSchedule& sched,
                                const OuterOptions& options) {
    params.validate();
    const int T = params.horizon;
    if (x_bar.horizon() != T || sched.horizon() != T) {
        throw ShapeError("outer_sweep: horizon mismatch between inputs");
    }
    ModelParams p = params;
    if (options.mode == BehaviorMode::myopic) {
        p.delta_a = 0.0;
    }
    const bool full = options.mode == BehaviorMode::forward_looking;

    DateSeries lambda(T, 1.0);
    if (options.init_lambda != nullptr) {
        lambda = *options.init_lambda;
    }
    for (int t = 1; t <= T; ++t) {
        lambda(t) = std::clamp(lambda(t), p.lambda_bar, 1.0);
    }
    TriSeries eta(T, 0, 0.0);
    DateSeries chi(T, 0.0);

    InnerOptions inner_opts = options.inner;
    TriSeries warm_alpha;
    InnerResult inner;
    CompartmentGrid duals(T);
    AdjointFamily gov_adj(T);

    double eps = options.eps;
    double prev_distance = std::numeric_limits<double>::infinity();
    int iterations = 0;
    double distance = std::numeric_limits<double>::infinity();

    for (int it = 1; it <= options.max_iterations; ++it) {
        iterations = it;
        if (options.mode == BehaviorMode::alpha_pinned) {
            inner.policy = PolicyPath(T);
            inner.policy.lambda = lambda;
            inner.policy.x_bar = x_bar;
            inner.grid = simulate_forward(p, inner.policy);
            inner.adjoints = AdjointFamily(T); // no behavioral margin
        } else {
            inner_opts.warm_alpha = (it > 1) ? &warm_alpha : options.inner.warm_alpha;
            inner = inner_sweep(lambda, x_bar, p, sched, inner_opts);
            warm_alpha = inner.policy.alpha;
        }

        if (full) {
            duals = dual_forward(inner.grid, inner.policy, eta, p);
        }
        gov_adj = dual_backward(inner.grid, inner.policy, inner.adjoints, duals,
                                eta, chi, p, sched);

        distance = 0.0;
        DateSeries lambda_new(T, 1.0);
        DateSeries chi_new(T, 0.0);
        TriSeries eta_new(T, 0, 0.0);
        for (int t = 1; t <= T; ++t) {
            const auto [a_t, b_t] = lambda_coefficients(
                t, inner.grid, inner.policy, inner.adjoints, gov_adj, duals, chi,
                p, sched);
            lambda_new(t) = optimal_lambda(a_t, b_t, p.lambda_bar);
            if (full) {
                const Eigen::VectorXd eta_t =
                    solve_eta(t, inner.grid, inner.policy, inner.adjoints, gov_adj,
                              duals, chi(t), p, sched);
                eta_new.row(t) = eta_t;
            }
            chi_new(t) = solve_chi(t, inner.grid, inner.policy, inner.adjoints,
                                   gov_adj, duals, eta, p, sched);

            distance = std::max(distance, std::abs(lambda_new(t) - lambda(t)));
            distance = std::max(distance, std::abs(chi_new(t) - chi(t)));
            if (full) {
                for (int k = 1; k <= t; ++k) {
                    const double mass = inner.grid.S(t, k) + inner.grid.I(t, k) +
                                        inner.grid.R(t, k);
                    // eta acts through eta*mass sources; weight accordingly
                    distance = std::max(
                        distance, std::abs(eta_new(t, k) - eta(t, k)) * mass);
                }
            }
        }

        if (options.diagnostics != nullptr) {
            (*options.diagnostics)
                << it << ',' << distance << ','
                << government_objective(inner.grid, inner.policy, p, sched) << '\n';
        }
        if (distance < options.tol) {
            break;
        }
        if (it == options.max_iterations) {
            std::ostringstream os;
            os << "outer sweep did not converge in " << options.max_iterations
               << " iterations; last distance " << distance;
            throw ConvergenceError(os.str(), it, distance);
        }
        if (options.adaptive_eps) {
            if (distance > prev_distance) {
                eps = std::max(0.1 * options.eps, 0.5 * eps);
            } else {
                eps = std::min(0.2, 1.05 * eps);
            }
            prev_distance = distance;
        }
        lambda.raw() = (1.0 - eps) * lambda.raw() + eps * lambda_new.raw();
        chi.raw() = (1.0 - eps) * chi.raw() + eps * chi_new.raw();
        if (full) {
            eta.raw() = (1.0 - eps) * eta.raw() + eps * eta_new.raw();
        }
        for (int t = 1; t <= T; ++t) {
            lambda(t) = std::clamp(lambda(t), p.lambda_bar, 1.0);
        }
    }

    OptimalPolicyResult res;
    res.policy = inner.policy;
    res.grid = inner.grid;
    res.adjoints = AdjointSet(T);
    res.adjoints.agent = inner.adjoints;
    res.adjoints.gov_backward = gov_adj;
    res.adjoints.gov_forward = duals;
    res.adjoints.eta = eta;
    res.adjoints.chi = chi;
    res.outer_iterations = iterations;
    res.objective = government_objective(inner.grid, inner.policy, p, sched);
    res.npv_output = government_output_value(inner.grid, inner.policy, p, sched);
    res.survivors = expected_survivors(inner.grid, p, sched);
    res.r_eff = DateSeries(T, std::numeric_limits<double>::quiet_NaN());
    for (int t = 1; t <= T; ++t) {
        if (inner.grid.I_tot(t) > 0.0) {
            res.r_eff(t) = effective_R(inner.grid, inner.policy, p, t);
        }
    }
    return res;
}

OptimalPolicyResult outer_sweep_multistart(const ModelParams& params,
                                           const DateSeries& x_bar,
                                           const VaccineSchedule& sched,
                                           const OuterOptions& options,
                                           int starts, std::uint64_t seed) {
    if (starts < 1) {
        throw ParameterError("multi-start count must be >= 1");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> level(params.lambda_bar, 1.0);

    OptimalPolicyResult best;
    bool have_best = false;
    for (int s = 0; s < starts; ++s) {
        DateSeries init(params.horizon, 1.0);
        if (s == 1) {
            init.values().setConstant(params.lambda_bar);
        } else if (s >= 2) {
            init.values().setConstant(level(rng));
        }
        OuterOptions opts = options;
        opts.init_lambda = &init;
        try {
            OptimalPolicyResult res = outer_sweep(params, x_bar, sched, opts);
            res.start_index = s;
            if (!have_best || res.objective > best.objective) {
                best = std::move(res);
                have_best = true;
            }
        } catch (const ConvergenceError&) {
            if (starts == 1) {
                throw;
            }
            // skip the non-convergent start; another one may land
        }
    }
    if (!have_best) {
        throw ConvergenceError("no multi-start run converged", 0, 0.0);
    }
    return best;
}

} // namespace epictrl
