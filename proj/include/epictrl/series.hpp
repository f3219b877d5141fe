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
#ifndef EPICTRL_SERIES_HPP
#define EPICTRL_SERIES_HPP

#include "epictrl/errors.hpp"

#include <Eigen/Dense>

namespace epictrl {

/// Per-date series over t = 1..horizon. Index 0 of the backing vector is
/// unused so that code reads like the model equations (1-based dates).
class DateSeries {
public:
    DateSeries() = default;
    explicit DateSeries(int horizon, double init = 0.0)
        : v_(Eigen::VectorXd::Constant(horizon + 1, init)) {
        v_[0] = 0.0;
    }

    int horizon() const { return static_cast<int>(v_.size()) - 1; }

    double& at(int t) { return v_[t]; }
    double at(int t) const { return v_[t]; }

    double& operator()(int t) { return v_[t]; }
    double operator()(int t) const { return v_[t]; }

    /// View of entries t = 1..horizon as an Eigen vector segment.
    auto values() { return v_.segment(1, horizon()); }
    auto values() const { return v_.segment(1, horizon()); }

    Eigen::VectorXd& raw() { return v_; }
    const Eigen::VectorXd& raw() const { return v_; }

private:
    Eigen::VectorXd v_;
};

/// Triangular series x_t^k with dates t = 1..horizon and test-time bins
/// k = 1..t+extra (extra is 1 for the susceptible adjoint families that carry
/// the freshly-tested bin). Storage is flattened row-major in (t, then k)
/// order with an offset index; this layout is a stability contract for
/// golden files and must not change.
class TriSeries {
public:
    TriSeries() = default;
    TriSeries(int horizon, int extra, double init = 0.0)
        : horizon_(horizon), extra_(extra),
          v_(Eigen::VectorXd::Constant(offset(horizon + 1), init)) {}

    int horizon() const { return horizon_; }
    int extra() const { return extra_; }

    /// Number of bins at date t.
    int bins(int t) const { return t + extra_; }

    /// Flat offset of the first bin of date t (t may be horizon+1 to obtain
    /// the total size).
    Eigen::Index offset(int t) const {
        const Eigen::Index n = t - 1;
        return n * (n + 1) / 2 + static_cast<Eigen::Index>(extra_) * n;
    }

    double& at(int t, int k) { return v_[offset(t) + k - 1]; }
    double at(int t, int k) const { return v_[offset(t) + k - 1]; }

    double& operator()(int t, int k) { return v_[offset(t) + k - 1]; }
    double operator()(int t, int k) const { return v_[offset(t) + k - 1]; }

    /// All bins of date t as an Eigen vector segment (length t+extra).
    auto row(int t) { return v_.segment(offset(t), bins(t)); }
    auto row(int t) const { return v_.segment(offset(t), bins(t)); }

    /// Sum over bins at date t.
    double row_sum(int t) const { return row(t).sum(); }

    /// Sum of weights(k)*x_t^k over k = 1..t (ignores the extra bin so it can
    /// be weighted by alpha, which has no extra bin).
    double weighted_row_sum(int t, const TriSeries& weights) const {
        return row(t).head(t).dot(weights.row(t).head(t));
    }

    Eigen::VectorXd& raw() { return v_; }
    const Eigen::VectorXd& raw() const { return v_; }

private:
    int horizon_ = 0;
    int extra_ = 0;
    Eigen::VectorXd v_;
};

} // namespace epictrl

#endif
