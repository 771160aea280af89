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

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kmix/dist.hpp"
#include "kmix/exact.hpp"
#include "kmix/flow.hpp"
#include "kmix/lsv.hpp"
#include "kmix/regvar.hpp"
#include "kmix/stable.hpp"

namespace kmix {

struct BudgetTerm {
    std::string label;
    double value = 0.0;
    // Terms that cannot move the statistic (mass outside the scanned window,
    // confidence widths of side checks) are listed with inflates = false.
    bool inflates = true;
};

struct CheckReport {
    std::string name;
    double statistic = 0.0;
    double threshold = 0.0;
    std::vector<BudgetTerm> budget_terms;
    bool pass = false;
    bool inconclusive = false;
    std::vector<std::string> notes;
    std::vector<std::pair<std::string, double>> fitted;
    std::vector<std::pair<std::string, std::string>> config_echo;

    double budget() const;
    double inflated() const { return statistic + budget(); }
    // pass <=> not inconclusive and statistic + budget <= threshold.
    void decide();
};

// 17 significant digits, the format used for every emitted real.
std::string format_real(double v);

struct ExponentTriple {
    Rational beta1, beta2, beta3;
};

struct GammaPair {
    Rational gamma1, gamma2;
};

// beta2 + beta3/alpha < 1 and beta1 + beta2 alpha + beta3 = 1, decided exactly.
bool admissible(const ExponentTriple& b, const Rational& alpha);
bool admissible(std::span<const ExponentTriple> bs, const Rational& alpha);
// gamma2 < 1 and gamma1 + gamma2 alpha = 1.
bool admissible(const GammaPair& g, const Rational& alpha);

// Evaluates the two exponent triples of the local large-deviation bound under
// both index conventions and records which are admissible. The report passes
// when admissible((alpha, -1, 1), alpha) agrees with alpha > 1/2 at every probe.
CheckReport admissibility_report(const Rational& alpha);

struct LltOptions {
    double eps = 0.1;
    std::size_t grid = 64;
    std::size_t cells = std::size_t{1} << 20;
    double rho_fraction = 0.05;
};

CheckReport llt_check(const TailModel& model, std::uint64_t k, double l, const StableDensity& rho,
                      const LltOptions& opt = {});

// sup over unit intervals of tau_k, scaled by R(k), for every k in ks.
// Successive doublings reuse the previous power. step of law must be <= 1.
CheckReport anticonc_check(const LatticeDist& law, const std::function<double(double)>& rate,
                           std::span<const std::uint64_t> ks, double window,
                           const StableDensity* sharp = nullptr);
CheckReport anticonc_check(const TailModel& model, std::span<const std::uint64_t> ks,
                           const StableDensity* sharp = nullptr);

struct LdOptions {
    std::size_t cells = std::size_t{1} << 20;
    double max_k_over_n = 0.02;
    double tolerance = 0.1;
    std::uint64_t mc_samples = 200'000;
    std::uint64_t seed = 1;
};

CheckReport ld_check(const TailModel& model, std::span<const std::pair<std::uint64_t, double>> pairs,
                     const LdOptions& opt = {});

struct LocalLdOptions {
    std::size_t cells = std::size_t{1} << 20;
    double slack = 0.2;
};

// Fits (C1, C2) in C1 L(t) k / t^(1+alpha) + C2 / t on the even-indexed points
// of t_grid and validates on the odd-indexed ones.
CheckReport local_ld_check(const TailModel& model, std::uint64_t k, std::span<const double> t_grid,
                           double interval, const LocalLdOptions& opt = {});

// Fitted C in P(tau_k in [t, t+interval]) <= C k L(t) / (t^alpha R(k)) over
// t = x R(k), x in x_grid, at k and 2k; passes when the two agree to +-25%.
CheckReport local_ld_variant_check(const TailModel& model, std::uint64_t k,
                                   std::span<const double> x_grid, double interval,
                                   const LocalLdOptions& opt = {});

// Mixing checks. nu(A) is P(roof in base range) times the fiber length.
double set_measure(const RoofLaw& law, const ProductSet& s);

CheckReport mixing_iid_check(const RoofLaw& law, const ProductSet& a, const ProductSet& b,
                             std::span<const MixingEstimate> estimates, double c_hat,
                             double tolerance = 0.15);
CheckReport semi_analytic_check(const RoofLaw& law, const ProductSet& a, const ProductSet& b, double t,
                                double c_hat, double tolerance = 0.02, const RenewalOptions& opt = {});
CheckReport mc_agreement_check(const MixingEstimate& mc, const RenewalResult& exact, double z = 3.0);
CheckReport decomposition_check(const RoofLaw& law, const ProductSet& a, const ProductSet& b, double t,
                                double eps, double min_share = 0.9, const RenewalOptions& opt = {});
// Scaled correlation at t and t + shift must separate by more than z combined
// standard errors at every t; statistic is max_t z / separation_t.
CheckReport oscillation_check(const RoofLaw& law, const ProductSet& a, const ProductSet& b,
                              std::span<const double> t_grid, double shift,
                              const CorrelationOptions& opt, double z = 5.0);
// Cauchy trend: successive scaled values within z combined standard errors and
// every value more than z standard errors above zero.
CheckReport trend_check(const std::string& name, std::span<const MixingEstimate> estimates, double z = 3.0);

struct MixingSuiteOptions {
    CorrelationOptions mc;
    RenewalOptions renewal;
    double decomposition_eps = 0.25;
};

// Dispatches on the support class of the roof: the rational case runs the
// non-mixing demo with shift hbar/2, the others run trend checks, and
// continuous roofs are also compared against c_hat nu(A) nu(B).
std::vector<CheckReport> mixing_suite(const RoofLaw& law, const SupportClass& support, const ProductSet& a,
                                      const ProductSet& b, std::span<const double> t_grid,
                                      const MixingSuiteOptions& opt = {});
std::vector<CheckReport> mixing_suite_lsv(const InducedEngine& engine, const RoofSpec& roof,
                                          const ProductSet& a, const ProductSet& b,
                                          std::span<const double> t_grid, const LsvCorrelationOptions& opt);

// One-sample Kolmogorov-Smirnov statistic of sorted samples against cdf, and its
// asymptotic p-value with Stephens' small-sample correction.
double ks_statistic(std::span<const double> sorted, const std::function<double(double)>& cdf);
double ks_pvalue(double d, std::size_t n);

}  // namespace kmix
