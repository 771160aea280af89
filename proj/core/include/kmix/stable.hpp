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

#include "kmix/random.hpp"

namespace kmix {

struct QuadratureOptions {
    double tolerance = 1e-13;
    int max_levels = 15;
};

// One-sided alpha-stable law Y with E exp(-lambda Y) = exp(-Gamma(1-alpha) lambda^alpha).
//
// Y = sigma S with sigma = Gamma(1-alpha)^(1/alpha) and S standard positive
// stable (Laplace transform exp(-lambda^alpha)). Density and CDF of S use
// Zolotarev's integral over (0, pi) in Kanter's form; beyond a right cutoff
// the convergent series in x^(-alpha) takes over.
class StableDensity {
public:
    explicit StableDensity(double alpha, QuadratureOptions q = {});

    double alpha() const noexcept { return alpha_; }
    double scale() const noexcept { return sigma_; }
    double cbar() const noexcept { return 1.0; }
    const QuadratureOptions& quadrature() const noexcept { return q_; }

    double rho(double z) const;
    double cdf(double z) const;
    double ccdf(double z) const;

    // alpha * int_0^inf rho(z) z^-alpha dz (times cbar).
    double c_hat() const;
    // int_0^inf rho(z) dz.
    double normalization() const;
    // Location and height of the mode.
    double mode() const noexcept { return mode_; }
    double max_rho() const noexcept { return max_rho_; }

    double sample(RandomStream& rng) const;
    // Same draw from explicit uniforms u1 (angle) and u2 (exponential), both in (0,1).
    double sample_from(double u1, double u2) const;

    // Kanter's function log A(u), u in (0, pi); uc is pi - u for accuracy near pi.
    double log_kanter(double u, double uc) const;

private:
    double rho_standard(double x) const;
    double cdf_standard(double x) const;
    double ccdf_series(double x) const;
    double rho_series(double x) const;
    double lower_cut() const;
    void locate_mode();

    double alpha_;
    double sigma_;
    double x_cut_;
    QuadratureOptions q_;
    double mode_ = 0.0;
    double max_rho_ = 0.0;
};

double rho(const StableDensity& d, double z);
double c_hat(const StableDensity& d);
double sample_stable(const StableDensity& d, RandomStream& rng);

}  // namespace kmix
