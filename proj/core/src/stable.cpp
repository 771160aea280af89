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


#include "kmix/stable.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/minima.hpp>

#include "kmix/error.hpp"

namespace kmix {
namespace {

const double kPi = boost::math::constants::pi<double>();

boost::math::quadrature::tanh_sinh<double>& integrator() {
    static boost::math::quadrature::tanh_sinh<double> ts(15);
    return ts;
}

constexpr int kSeriesTerms = 80;

}  // namespace

StableDensity::StableDensity(double alpha, QuadratureOptions q) : alpha_(alpha), q_(q) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("stable index must lie in (0,1)");
    sigma_ = std::pow(std::tgamma(1.0 - alpha), 1.0 / alpha);
    // series terms decay like Gamma(alpha k)/k! x^(-alpha k); x^-alpha <= 0.4 keeps
    // cancellation negligible
    x_cut_ = std::pow(0.4, -1.0 / alpha);
    locate_mode();
}

double StableDensity::log_kanter(double u, double uc) const {
    const double a = alpha_;
    double ls = (u <= 0.5 * kPi) ? std::log(std::sin(u)) : std::log(std::sin(uc));
    double la = std::log(std::sin(a * u));
    double lb = std::log(std::sin((1.0 - a) * u));
    return (a * la + (1.0 - a) * lb - ls) / (1.0 - a);
}

double StableDensity::rho_series(double x) const {
    // (1/pi) sum (-1)^(k+1) Gamma(alpha k + 1)/k! sin(pi alpha k) x^(-alpha k - 1)
    const double a = alpha_;
    double lx = std::log(x);
    double sum = 0.0;
    for (int k = 1; k <= kSeriesTerms; ++k) {
        double lg = std::lgamma(a * k + 1.0) - std::lgamma(k + 1.0) - (a * k + 1.0) * lx;
        double term = std::exp(lg) * std::sin(kPi * a * k);
        sum += (k % 2 == 1) ? term : -term;
        if (std::exp(lg) < 1e-18 * std::abs(sum)) break;
    }
    return sum / kPi;
}

double StableDensity::ccdf_series(double x) const {
    const double a = alpha_;
    double lx = std::log(x);
    double sum = 0.0;
    for (int k = 1; k <= kSeriesTerms; ++k) {
        double lg = std::lgamma(a * k) - std::lgamma(k + 1.0) - a * k * lx;
        double term = std::exp(lg) * std::sin(kPi * a * k);
        sum += (k % 2 == 1) ? term : -term;
        if (std::exp(lg) < 1e-18 * std::abs(sum)) break;
    }
    return sum / kPi;
}

double StableDensity::rho_standard(double x) const {
    if (x >= x_cut_) return rho_series(x);
    const double a = alpha_;
    double s = std::pow(x, -a / (1.0 - a));
    auto f = [&](double u, double uc) {
        double la = log_kanter(u, uc > 0 ? uc : kPi - u);
        double v = std::exp(la - std::exp(la) * s);
        return std::isfinite(v) ? v : 0.0;
    };
    double err = 0.0;
    double I = integrator().integrate(f, 0.0, kPi, q_.tolerance, &err);
    return (a / (1.0 - a)) * std::pow(x, -1.0 / (1.0 - a)) * I / kPi;
}

double StableDensity::cdf_standard(double x) const {
    if (x >= x_cut_) return 1.0 - ccdf_series(x);
    const double a = alpha_;
    double s = std::pow(x, -a / (1.0 - a));
    auto f = [&](double u, double uc) {
        double v = std::exp(-std::exp(log_kanter(u, uc > 0 ? uc : kPi - u)) * s);
        return std::isfinite(v) ? v : 0.0;
    };
    double err = 0.0;
    return integrator().integrate(f, 0.0, kPi, q_.tolerance, &err) / kPi;
}

double StableDensity::rho(double z) const {
    if (!(z > 0.0)) throw DomainError("rho needs z > 0");
    return rho_standard(z / sigma_) / sigma_;
}

double StableDensity::cdf(double z) const {
    if (z <= 0.0) return 0.0;
    return cdf_standard(z / sigma_);
}

double StableDensity::ccdf(double z) const {
    if (z <= 0.0) return 1.0;
    double x = z / sigma_;
    if (x >= x_cut_) return ccdf_series(x);
    return 1.0 - cdf_standard(x);
}

double StableDensity::lower_cut() const {
    // below this x the density is exp(-A(0) s) with A(0) s > 745: zero in double
    const double a = alpha_;
    double a0 = std::pow(std::pow(a, a) * std::pow(1.0 - a, 1.0 - a), 1.0 / (1.0 - a));
    return std::pow(745.0 / a0, -(1.0 - a) / a);
}

double StableDensity::normalization() const {
    // in v = log x: int rho_S(e^v) e^v dv on [log lower_cut, log x_cut], series beyond
    auto f = [&](double v) {
        double x = std::exp(v);
        return rho_standard(x) * x;
    };
    double err = 0.0;
    double body = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, std::log(lower_cut()), std::log(x_cut_), 25, 1e-14, &err);
    return body + ccdf_series(x_cut_);
}

double StableDensity::c_hat() const {
    // alpha int rho(z) z^-alpha dz = alpha sigma^-alpha int rho_S(x) x^-alpha dx
    const double a = alpha_;
    auto f = [&](double v) {
        double x = std::exp(v);
        return rho_standard(x) * std::pow(x, 1.0 - a);
    };
    double err = 0.0;
    double body = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, std::log(lower_cut()), std::log(x_cut_), 25, 1e-14, &err);
    // tail: (1/pi) sum (-1)^(k+1) Gamma(ak+1)/k! sin(pi a k) x_c^(-a(k+1)) / (a(k+1))
    double lx = std::log(x_cut_);
    double tail = 0.0;
    for (int k = 1; k <= kSeriesTerms; ++k) {
        double lg = std::lgamma(a * k + 1.0) - std::lgamma(k + 1.0) - a * (k + 1.0) * lx;
        double term = std::exp(lg) * std::sin(kPi * a * k) / (a * (k + 1.0));
        tail += (k % 2 == 1) ? term : -term;
        if (std::exp(lg) < 1e-18) break;
    }
    tail /= kPi;
    return cbar() * a * std::pow(sigma_, -a) * (body + tail);
}

void StableDensity::locate_mode() {
    // coarse geometric scan, then Brent on log z
    double best_v = 0.0, best = -1.0;
    for (int i = 0; i <= 240; ++i) {
        double v = std::log(sigma_) + (-6.0 + 10.0 * i / 240.0);
        double r = rho(std::exp(v));
        if (r > best) {
            best = r;
            best_v = v;
        }
    }
    auto neg = [&](double v) { return -rho(std::exp(v)); };
    auto res = boost::math::tools::brent_find_minima(neg, best_v - 0.05, best_v + 0.05, 50);
    mode_ = std::exp(res.first);
    max_rho_ = -res.second;
}

double StableDensity::sample_from(double u1, double u2) const {
    const double a = alpha_;
    double u = kPi * u1;
    double la = log_kanter(u, kPi - u);
    double le = std::log(-std::log(u2));
    return sigma_ * std::exp((1.0 - a) / a * (la - le));
}

double StableDensity::sample(RandomStream& rng) const {
    double u1 = rng.uniform();
    double u2 = rng.uniform();
    return sample_from(u1, u2);
}

double rho(const StableDensity& d, double z) { return d.rho(z); }
double c_hat(const StableDensity& d) { return d.c_hat(); }
double sample_stable(const StableDensity& d, RandomStream& rng) { return d.sample(rng); }

}  // namespace kmix
