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


#include "kmix/regvar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kmix/error.hpp"

namespace kmix {
namespace {

constexpr int kMaxBisection = 200;

// Solves raw(x) = target for x >= lo, raw decreasing; bisection in log x.
template <class F>
double solve_decreasing(F raw, double target, double lo) {
    double a = std::log(lo);
    if (raw(lo) <= target) return lo;
    double b = a + 1.0;
    int guard = 0;
    while (raw(std::exp(b)) > target) {
        b = a + 2.0 * (b - a);
        if (++guard > 64 || !std::isfinite(b)) throw NumericError("rate bracket not found");
    }
    for (int it = 0; it < kMaxBisection; ++it) {
        double m = 0.5 * (a + b);
        if (m <= a || m >= b) return std::exp(b);
        if (raw(std::exp(m)) > target)
            a = m;
        else
            b = m;
    }
    throw NumericError("bisection did not converge in 200 iterations");
}

}  // namespace

double SlowPart::operator()(double t) const {
    if (kind == Kind::Constant) return c;
    return c * std::pow(1.0 + std::log(t), beta);
}

TailModel::TailModel(double alpha, SlowPart slow, double t_min)
    : alpha_(alpha), slow_(slow), t_min_(t_min), t0_(t_min) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
    if (!(slow.c > 0.0)) throw DomainError("slow part constant c must be positive");
    if (!(t_min >= 1.0)) throw DomainError("t_min must be >= 1");
    if (raw(t_min) < 1.0 - 1e-15)
        throw DomainError("L(t_min)/t_min^alpha < 1 would put an atom at t_min");
    if (slow.kind == SlowPart::Kind::Constant) {
        t0_ = std::max(t_min, std::pow(slow.c, 1.0 / alpha));
    } else {
        // L(t)/t^alpha decreases beyond 1 + log t = beta/alpha; the tail is the
        // clamped value, so only the last crossing of level 1 matters
        double peak = slow.beta > 0.0 ? std::exp(slow.beta / alpha - 1.0) : t_min;
        t0_ = solve_decreasing([this](double x) { return raw(x); }, 1.0, std::max(t_min, peak));
    }
}

TailModel TailModel::constant(double alpha, double c, double t_min) {
    return TailModel(alpha, SlowPart{SlowPart::Kind::Constant, c, 0.0}, t_min);
}

TailModel TailModel::log_power(double alpha, double c, double beta, double t_min) {
    return TailModel(alpha, SlowPart{SlowPart::Kind::LogPower, c, beta}, t_min);
}

double TailModel::tail(double t) const {
    if (t < t0_) return 1.0;
    return std::min(1.0, raw(t));
}

double TailModel::density(double t) const {
    if (t < t0_) return 0.0;
    double g = raw(t);
    double dlog = -alpha_ / t;
    if (slow_.kind == SlowPart::Kind::LogPower) dlog += slow_.beta / (t * (1.0 + std::log(t)));
    return -g * dlog;
}

double TailModel::tail_quantile(double u) const {
    if (!(u > 0.0 && u <= 1.0)) throw DomainError("tail_quantile needs u in (0,1]");
    if (u >= 1.0) return t0_;
    if (slow_.kind == SlowPart::Kind::Constant) return std::max(t0_, std::pow(slow_.c / u, 1.0 / alpha_));
    return solve_decreasing([this](double x) { return raw(x); }, u, t0_);
}

double tail_prob(const TailModel& model, double t) {
    if (t < 0.0) throw DomainError("tail_prob needs t >= 0");
    return model.tail(t);
}

double rate_R(const TailModel& model, double k) {
    if (!(k >= 1.0)) throw DomainError("rate_R needs k >= 1");
    const SlowPart& s = model.slow();
    double a = model.alpha();
    if (s.kind == SlowPart::Kind::Constant) return std::pow(s.c * k, 1.0 / a);
    return solve_decreasing([&](double x) { return s(x) * std::pow(x, -a); }, 1.0 / k, model.edge());
}

long long counting_N(const TailModel& model, double t) {
    double r1 = rate_R(model, 1.0);
    if (!(t >= r1)) throw DomainError("counting_N needs t >= R(1) = " + std::to_string(r1));
    double guess = std::ceil(std::pow(t, model.alpha()) / model.slow_value(t));
    if (!(guess < 9.0e18)) throw DomainError("counting_N overflows a 64-bit count");
    long long n = std::max(1LL, static_cast<long long>(guess));
    while (n > 1 && rate_R(model, static_cast<double>(n - 1)) >= t) --n;
    while (rate_R(model, static_cast<double>(n)) < t) ++n;
    return n;
}

double truncated_mean(const TailModel& model, double H) {
    if (!(H >= model.t_min())) throw DomainError("truncated_mean needs H >= t_min");
    double t0 = model.edge();
    if (H <= t0) return 0.0;
    double a = model.alpha();
    double integral;
    if (model.is_pareto()) {
        double c = model.slow().c;
        integral = c * (std::pow(H, 1.0 - a) - std::pow(t0, 1.0 - a)) / (1.0 - a);
    } else {
        // integrate tail(e^u) e^u over u in [log t0, log H]
        auto f = [&](double u) {
            double s = std::exp(u);
            return model.tail(s) * s;
        };
        double err = 0.0;
        integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            f, std::log(t0), std::log(H), 20, 1e-13, &err);
    }
    // E[tau; tau <= H] = int_0^H tail - H tail(H)
    return t0 + integral - H * model.tail(H);
}

RateFunction::RateFunction(const TailModel& model, double k_max, std::size_t nodes_per_octave)
    : model_(model) {
    if (!(k_max >= 1.0)) throw DomainError("RateFunction needs k_max >= 1");
    double octaves = std::log2(k_max);
    std::size_t n = static_cast<std::size_t>(std::ceil(octaves * nodes_per_octave)) + 1;
    k_.resize(n);
    r_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double k = (n == 1) ? 1.0 : std::exp2(octaves * static_cast<double>(i) / (n - 1));
        if (i + 1 == n) k = k_max;
        k_[i] = k;
        r_[i] = rate_R(model, k);
        if (i > 0 && r_[i] < r_[i - 1]) throw NumericError("rate function not monotone on cache grid");
    }
}

double RateFunction::operator()(double k) const {
    if (k < k_.front() || k > k_.back()) return rate_R(model_, k);
    auto it = std::lower_bound(k_.begin(), k_.end(), k);
    std::size_t j = static_cast<std::size_t>(it - k_.begin());
    if (k_[j] == k) return r_[j];
    std::size_t i = j - 1;
    double w = (std::log(k) - std::log(k_[i])) / (std::log(k_[j]) - std::log(k_[i]));
    return std::exp((1.0 - w) * std::log(r_[i]) + w * std::log(r_[j]));
}

double RateFunction::max_residual() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < k_.size(); ++i) {
        double res = k_[i] * model_.slow_value(r_[i]) * std::pow(r_[i], -model_.alpha());
        worst = std::max(worst, std::abs(res - 1.0));
    }
    return worst;
}

}  // namespace kmix
