/*
   Copyright 2026 The kmix Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/


#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace kmix {

// Slowly varying part L of a regularly varying tail.
struct SlowPart {
    enum class Kind { Constant, LogPower };
    Kind kind = Kind::Constant;
    double c = 1.0;
    double beta = 0.0;  // LogPower only: L(t) = c (1 + log t)^beta

    double operator()(double t) const;
};

// Law of a positive return time with P(tau > t) = L(t) / t^alpha for large t.
//
// Below the effective edge t0 = max(t_min, root of L(t)/t^alpha = 1) the tail
// is 1, so the law is proper and has no atom.
class TailModel {
public:
    static TailModel constant(double alpha, double c = 1.0, double t_min = 1.0);
    static TailModel log_power(double alpha, double c, double beta, double t_min = 1.0);

    double alpha() const noexcept { return alpha_; }
    const SlowPart& slow() const noexcept { return slow_; }
    double t_min() const noexcept { return t_min_; }
    double edge() const noexcept { return t0_; }

    double slow_value(double t) const { return slow_(t); }
    double tail(double t) const;
    double cdf(double t) const { return 1.0 - tail(t); }
    // Density of the law; zero below the edge.
    double density(double t) const;
    // Smallest t with tail(t) <= u, for u in (0, 1].
    double tail_quantile(double u) const;

    bool is_pareto() const noexcept { return slow_.kind == SlowPart::Kind::Constant; }

private:
    TailModel(double alpha, SlowPart slow, double t_min);
    double raw(double t) const { return slow_(t) * std::pow(t, -alpha_); }

    double alpha_;
    SlowPart slow_;
    double t_min_;
    double t0_;
};

double tail_prob(const TailModel& model, double t);

// R(k): the root of k L(x) / x^alpha = 1.
double rate_R(const TailModel& model, double k);

// N(t): smallest integer n with R(n) >= t.
long long counting_N(const TailModel& model, double t);

// E[tau; tau <= H].
double truncated_mean(const TailModel& model, double H);

// Cache of R on a geometric grid in k; exact at nodes, log-log monotone
// interpolation in between.
class RateFunction {
public:
    RateFunction(const TailModel& model, double k_max, std::size_t nodes_per_octave = 16);

    double operator()(double k) const;
    const std::vector<double>& nodes() const noexcept { return k_; }
    const std::vector<double>& values() const noexcept { return r_; }
    double max_residual() const;

private:
    TailModel model_;
    std::vector<double> k_;
    std::vector<double> r_;
};

}  // namespace kmix
