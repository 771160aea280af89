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


#include "kmix/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "kmix/error.hpp"
#include "kmix/parallel.hpp"
#include "kmix/random.hpp"

namespace kmix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void add_standard_terms(CheckReport& r, double overflow, bool overflow_inflates, double mc, bool mc_inflates) {
    r.budget_terms.push_back({"fft_truncation_overflow", overflow, overflow_inflates});
    r.budget_terms.push_back({"mc_confidence", mc, mc_inflates});
}

void echo(CheckReport& r, const std::string& key, double v) { r.config_echo.emplace_back(key, format_real(v)); }
void echo(CheckReport& r, const std::string& key, const std::string& v) { r.config_echo.emplace_back(key, v); }

void echo_model(CheckReport& r, const TailModel& m) {
    echo(r, "alpha", m.alpha());
    echo(r, "slow", m.is_pareto() ? "constant" : "log-power");
    echo(r, "c", m.slow().c);
    if (!m.is_pareto()) echo(r, "beta", m.slow().beta);
    echo(r, "t_min", m.t_min());
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
    return g;
}

// tau_k on a grid of `cells` cells covering [edge, hi].
LatticeDist power_law_sum(const TailModel& model, std::uint64_t k, double hi, std::size_t cells) {
    double h = (hi - model.edge()) / static_cast<double>(cells);
    LatticeDist d = discretize(model, h, hi + 2.0 * h, DiscretizeRule::MeanPreserving);
    return convolve_power(d, k, hi + 2.0 * h);
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string ratio_label(const char* what, std::uint64_t k, double t) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s[k=%llu,t=%.6g]", what, static_cast<unsigned long long>(k), t);
    return buf;
}

}  // namespace

double CheckReport::budget() const {
    double b = 0.0;
    for (const auto& t : budget_terms)
        if (t.inflates) b += t.value;
    return b;
}

void CheckReport::decide() {
    double s = inflated();
    pass = !inconclusive && std::isfinite(s) && s <= threshold;
}

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------- admissibility

namespace {
void check_alpha(const Rational& alpha) {
    if (!(alpha > 0 && alpha < 1)) throw DomainError("admissible: alpha must lie in (0, 1)");
}
}  // namespace

bool admissible(const ExponentTriple& b, const Rational& alpha) {
    check_alpha(alpha);
    return b.beta2 + b.beta3 / alpha < 1 && b.beta1 + b.beta2 * alpha + b.beta3 == 1;
}

bool admissible(std::span<const ExponentTriple> bs, const Rational& alpha) {
    check_alpha(alpha);
    return std::all_of(bs.begin(), bs.end(), [&](const ExponentTriple& b) { return admissible(b, alpha); });
}

bool admissible(const GammaPair& g, const Rational& alpha) {
    check_alpha(alpha);
    return g.gamma2 < 1 && g.gamma1 + g.gamma2 * alpha == 1;
}

CheckReport admissibility_report(const Rational& alpha) {
    check_alpha(alpha);
    CheckReport r;
    r.name = "admissibility";
    r.threshold = 0.0;
    echo(r, "alpha", alpha.str());

    const Rational probes[] = {Rational(1, 4), Rational(2, 5), Rational(1, 2), Rational(3, 5),
                               Rational(3, 4), Rational(499, 1000), Rational(501, 1000), alpha};
    int mismatches = 0;
    for (const Rational& a : probes) {
        bool got = admissible(ExponentTriple{a, -1, 1}, a);
        if (got != (a > Rational(1, 2))) ++mismatches;
    }
    r.statistic = mismatches;

    // Read as beta_{j,i}: term j has exponents (beta_{j,1}, beta_{j,2}, beta_{j,3}).
    const ExponentTriple by_term[] = {{1 + alpha, -1, 0}, {1, 0, 0}};
    // Read as beta_{i,j}: exponent i of term j; unlisted entries taken as 0.
    const ExponentTriple by_exponent[] = {{1 + alpha, 1, 0}, {-1, 0, 0}};
    auto record = [&](const char* tag, std::span<const ExponentTriple> ts) {
        for (std::size_t j = 0; j < ts.size(); ++j) {
            bool ok = admissible(ts[j], alpha);
            r.fitted.emplace_back(std::string(tag) + "_term" + std::to_string(j + 1), ok ? 1.0 : 0.0);
            const auto& t = ts[j];
            r.notes.push_back(std::string(tag) + " term " + std::to_string(j + 1) + " (" + t.beta1.str() + ", " +
                              t.beta2.str() + ", " + t.beta3.str() + "): " +
                              "beta2+beta3/alpha=" + Rational(t.beta2 + t.beta3 / alpha).str() +
                              ", beta1+beta2*alpha+beta3=" + Rational(t.beta1 + t.beta2 * alpha + t.beta3).str() +
                              (ok ? " admissible" : " NOT admissible"));
        }
        r.fitted.emplace_back(std::string(tag) + "_all", admissible(ts, alpha) ? 1.0 : 0.0);
    };
    record("by_term", by_term);
    record("by_exponent", by_exponent);
    add_standard_terms(r, 0.0, false, 0.0, false);
    r.decide();
    return r;
}

// ---------------------------------------------------------------- LLT

CheckReport llt_check(const TailModel& model, std::uint64_t k, double l, const StableDensity& rho,
                      const LltOptions& opt) {
    if (k == 0) throw DomainError("llt_check: k must be positive");
    if (!(l > 0)) throw DomainError("llt_check: l must be positive");
    if (!(opt.eps > 0 && opt.eps < 1)) throw DomainError("llt_check: eps must lie in (0, 1)");
    if (opt.cells < 16 || opt.grid < 2) throw DomainError("llt_check: cells and grid too small");
    CheckReport r;
    r.name = "llt";
    echo_model(r, model);
    echo(r, "k", static_cast<double>(k));
    echo(r, "l", l);
    echo(r, "eps", opt.eps);
    echo(r, "cells", static_cast<double>(opt.cells));

    const double R = rate_R(model, static_cast<double>(k));
    const double hi = R / opt.eps + l;
    const auto grid = geometric_grid(R * opt.eps, R / opt.eps, opt.grid);
    auto curve = [&](const LatticeDist& tk) {
        std::vector<double> c(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i)
            c[i] = R * interval_prob(tk, grid[i], grid[i] + l) / l - rho.cbar() * rho.rho(grid[i] / R);
        return c;
    };
    LatticeDist fine = power_law_sum(model, k, hi, opt.cells);
    LatticeDist coarse = power_law_sum(model, k, hi, opt.cells / 2);
    auto cf = curve(fine), cc = curve(coarse);
    double disc = 0.0, at = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        disc = std::max(disc, std::abs(cf[i] - cc[i]));
        if (std::abs(cf[i]) > r.statistic) {
            r.statistic = std::abs(cf[i]);
            at = grid[i] / R;
        }
    }
    r.threshold = opt.rho_fraction * rho.cbar() * rho.max_rho();
    r.budget_terms.push_back({"discretization", disc, true});
    add_standard_terms(r, fine.overflow_mass, false, 0.0, false);
    r.fitted.emplace_back("R(k)", R);
    r.fitted.emplace_back("max_rho", rho.max_rho());
    r.fitted.emplace_back("argmax_t_over_R", at);
    if (k < 16) r.notes.push_back("k too small: the local limit is asymptotic in k");
    r.notes.push_back("overflow is mass beyond R(k)/eps + l and does not enter any grid interval");
    r.decide();
    return r;
}

// ---------------------------------------------------------------- anticoncentration

CheckReport anticonc_check(const LatticeDist& law, const std::function<double(double)>& rate,
                           std::span<const std::uint64_t> ks, double window, const StableDensity* sharp) {
    if (ks.empty()) throw DomainError("anticonc_check: empty k range");
    if (law.step > 1.0) throw DomainError("anticonc_check: step must be <= 1");
    if (!std::is_sorted(ks.begin(), ks.end()) || ks.front() == 0)
        throw DomainError("anticonc_check: k range must be positive and increasing");
    CheckReport r;
    r.name = "anticonc";
    echo(r, "k_min", static_cast<double>(ks.front()));
    echo(r, "k_max", static_cast<double>(ks.back()));
    echo(r, "k_count", static_cast<double>(ks.size()));
    echo(r, "window", window);
    echo(r, "step", law.step);

    std::vector<double> vals;
    double overflow = 0.0;
    LatticeDist prev;
    std::uint64_t k_prev = 0;
    for (std::uint64_t k : ks) {
        LatticeDist cur;
        if (k == k_prev) {
            cur = prev;
        } else if (k_prev > 0 && k == 2 * k_prev) {
            cur = convolve(prev, prev, window);
        } else if (k_prev > 0) {
            cur = convolve(prev, convolve_power(law, k - k_prev, window), window);
        } else {
            cur = convolve_power(law, k, window);
        }
        double v = sup_unit_interval(cur) * rate(static_cast<double>(k));
        vals.push_back(v);
        overflow = std::max(overflow, cur.overflow_mass);
        r.fitted.emplace_back("supR[k=" + std::to_string(k) + "]", v);
        prev = std::move(cur);
        k_prev = k;
    }
    double med = median_of(vals);
    double mx = *std::max_element(vals.begin(), vals.end());
    r.statistic = med > 0 ? mx / med : kInf;
    r.threshold = 3.0;
    add_standard_terms(r, overflow, false, 0.0, false);
    r.notes.push_back("overflow is mass beyond the scanned window; unit intervals inside it are exact");
    r.fitted.emplace_back("median", med);
    r.fitted.emplace_back("max", mx);
    if (sharp) {
        double target = sharp->cbar() * sharp->max_rho();
        r.fitted.emplace_back("cbar_max_rho", target);
        r.fitted.emplace_back("sharp_relative_gap", vals.back() / target - 1.0);
    }
    r.decide();
    return r;
}

CheckReport anticonc_check(const TailModel& model, std::span<const std::uint64_t> ks, const StableDensity* sharp) {
    if (ks.empty()) throw DomainError("anticonc_check: empty k range");
    const double kmax = static_cast<double>(ks.back());
    const double shape = sharp ? std::max(0.25, 1.35 * sharp->mode()) : 1.0;
    const double window = kmax * model.edge() + shape * rate_R(model, kmax) + 2.0;
    LatticeDist law = discretize(model, 1.0, window, DiscretizeRule::MeanPreserving);
    CheckReport r = anticonc_check(law, [&](double k) { return rate_R(model, k); }, ks, window, sharp);
    echo_model(r, model);
    return r;
}

// ---------------------------------------------------------------- large deviations

CheckReport ld_check(const TailModel& model, std::span<const std::pair<std::uint64_t, double>> pairs,
                     const LdOptions& opt) {
    CheckReport r;
    r.name = "ld";
    echo_model(r, model);
    echo(r, "cells", static_cast<double>(opt.cells));
    echo(r, "max_k_over_n", opt.max_k_over_n);
    echo(r, "mc_samples", static_cast<double>(opt.mc_samples));
    echo(r, "seed", static_cast<double>(opt.seed));
    const double alpha = model.alpha();
    double disc = 0.0, overflow = 0.0, mc = 0.0, d_fit = 0.0;
    std::size_t used = 0, violations = 0;
    for (const auto& [k, t] : pairs) {
        if (k == 0 || !(t > model.edge())) throw DomainError("ld_check: need k >= 1 and t above the edge");
        const double n_t = static_cast<double>(counting_N(model, t));
        if (n_t <= 0 || static_cast<double>(k) / n_t > opt.max_k_over_n) {
            r.notes.push_back(ratio_label("skipped", k, t) + ": k/N(t) = " +
                              format_real(static_cast<double>(k) / n_t) + " exceeds the bound");
            continue;
        }
        ++used;
        const double norm = std::pow(t, alpha) / (static_cast<double>(k) * model.slow_value(t));
        double ratio, p_sum;
        if (k == 1) {
            p_sum = model.tail(t);
            ratio = norm * p_sum;
        } else {
            const double hi = 1.25 * t;
            LatticeDist fine = power_law_sum(model, k, hi, opt.cells);
            LatticeDist coarse = power_law_sum(model, k, hi, opt.cells / 2);
            p_sum = tail_prob_dist(fine, t);
            ratio = norm * p_sum;
            disc = std::max(disc, std::abs(ratio - norm * tail_prob_dist(coarse, t)));
            overflow = std::max(overflow, fine.overflow_mass);
        }
        r.statistic = std::max(r.statistic, std::abs(ratio - 1.0));
        d_fit = std::max(d_fit, ratio);
        r.fitted.emplace_back(ratio_label("ratio", k, t), ratio);

        // Lower side: P(max of k draws > t) <= P(tau_k > t).
        if (opt.mc_samples > 0) {
            const PhiloxKey key = make_key(opt.seed, "ld-max");
            const std::size_t chunks = 16;
            std::vector<std::uint64_t> hits(chunks, 0);
            parallel_for(chunks, [&](std::size_t c) {
                std::uint64_t b = opt.mc_samples * c / chunks, e = opt.mc_samples * (c + 1) / chunks;
                for (std::uint64_t i = b; i < e; ++i) {
                    RandomStream rng(key, i);
                    bool hit = false;
                    for (std::uint64_t j = 0; j < k; ++j) hit |= sample_tail(model, rng) > t;
                    hits[c] += hit;
                }
            });
            const double n = static_cast<double>(opt.mc_samples);
            const double p_max = static_cast<double>(std::accumulate(hits.begin(), hits.end(), std::uint64_t{0})) / n;
            const double se = std::sqrt(std::max(p_max * (1 - p_max), 1.0 / n) / n);
            mc = std::max(mc, 3.0 * se * norm);
            r.fitted.emplace_back(ratio_label("p_max", k, t), p_max);
            if (p_max > p_sum + 3.0 * se) {
                ++violations;
                r.notes.push_back(ratio_label("max-vs-sum violated", k, t));
            }
        }
    }
    r.threshold = opt.tolerance;
    r.budget_terms.push_back({"discretization", disc, true});
    add_standard_terms(r, overflow, false, mc, false);
    r.fitted.emplace_back("D", d_fit);
    r.notes.push_back("overflow mass is counted exactly in the tail; mc_confidence applies to the max-vs-sum side check");
    if (used == 0) {
        r.inconclusive = true;
        r.notes.push_back("no pair satisfies the k/N(t) bound");
    }
    r.decide();
    if (violations) r.pass = false;
    return r;
}

// ---------------------------------------------------------------- local large deviations

CheckReport local_ld_check(const TailModel& model, std::uint64_t k, std::span<const double> t_grid,
                           double interval, const LocalLdOptions& opt) {
    if (t_grid.size() < 4) throw DomainError("local_ld_check: t-grid needs at least 4 points");
    if (!(interval > 0)) throw DomainError("local_ld_check: interval must be positive");
    CheckReport r;
    r.name = "local-ld";
    echo_model(r, model);
    echo(r, "k", static_cast<double>(k));
    echo(r, "interval", interval);
    echo(r, "cells", static_cast<double>(opt.cells));
    echo(r, "slack", opt.slack);
    const double alpha = model.alpha();
    const double R = rate_R(model, static_cast<double>(k));

    // Tail density hypothesis first.
    double c_k = 0.0;
    for (double t : t_grid)
        c_k = std::max(c_k, (model.tail(t) - model.tail(t + interval)) * std::pow(t, 1 + alpha) / model.slow_value(t));
    r.fitted.emplace_back("C(K)", c_k);
    if (!std::isfinite(c_k)) {
        r.inconclusive = true;
        r.notes.push_back("tail density constant is not finite");
    }

    const double hi = *std::max_element(t_grid.begin(), t_grid.end()) + interval;
    LatticeDist fine = power_law_sum(model, k, hi, opt.cells);
    LatticeDist coarse = power_law_sum(model, k, hi, opt.cells / 2);
    const std::size_t n = t_grid.size();
    std::vector<double> v(n), vc(n), f1(n), f2(n);
    double vmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double t = t_grid[i];
        v[i] = interval_prob(fine, t, t + interval);
        vc[i] = interval_prob(coarse, t, t + interval);
        f1[i] = model.slow_value(t) * static_cast<double>(k) / std::pow(t, 1 + alpha);
        f2[i] = 1.0 / t;
        vmax = std::max(vmax, v[i]);
    }

    // Relative least squares on the training half, restricted to C1, C2 >= 0.
    double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < n; i += 2) {
        if (!(v[i] > 1e-12 * vmax)) continue;
        double x1 = f1[i] / v[i], x2 = f2[i] / v[i];
        s11 += x1 * x1, s12 += x1 * x2, s22 += x2 * x2, b1 += x1, b2 += x2;
        ++used;
    }
    double c1 = 0, c2 = 0;
    const double det = s11 * s22 - s12 * s12;
    if (used >= 2 && det > 1e-12 * s11 * s22) {
        c1 = (b1 * s22 - b2 * s12) / det;
        c2 = (b2 * s11 - b1 * s12) / det;
    }
    if (!(c1 > 0 && c2 > 0)) {
        // Best single-term fit.
        auto resid = [&](double a1, double a2) {
            double s = 0;
            for (std::size_t i = 0; i < n; i += 2)
                if (v[i] > 1e-12 * vmax) s += std::pow((a1 * f1[i] + a2 * f2[i]) / v[i] - 1.0, 2);
            return s;
        };
        double only1 = s11 > 0 ? b1 / s11 : 0.0, only2 = s22 > 0 ? b2 / s22 : 0.0;
        if (resid(only1, 0) <= resid(0, only2)) c1 = only1, c2 = 0;
        else c1 = 0, c2 = only2;
    }
    double scale = 0.0;
    for (std::size_t i = 0; i < n; i += 2) {
        double bnd = c1 * f1[i] + c2 * f2[i];
        if (bnd > 0) scale = std::max(scale, v[i] / bnd);
    }
    if (used < 2 || !(scale > 0) || !std::isfinite(scale)) {
        r.inconclusive = true;
        r.notes.push_back("fit degenerate: no usable training points");
        scale = 1.0;
    }
    c1 *= scale, c2 *= scale;
    r.fitted.emplace_back("C1", c1);
    r.fitted.emplace_back("C2", c2);

    double disc = 0.0;
    std::size_t below_r = 0;
    for (std::size_t i = 1; i < n; i += 2) {
        double bnd = c1 * f1[i] + c2 * f2[i];
        r.statistic = std::max(r.statistic, bnd > 0 ? v[i] / bnd : (v[i] > 0 ? kInf : 0.0));
        if (bnd > 0) disc = std::max(disc, std::abs(v[i] - vc[i]) / bnd);
    }
    for (double t : t_grid) below_r += t <= R;
    if (below_r)
        r.notes.push_back(std::to_string(below_r) + " grid points with t <= R(k): local-limit regime, bound loose there");
    r.threshold = 1.0 + opt.slack;
    r.budget_terms.push_back({"discretization", disc, true});
    add_standard_terms(r, fine.overflow_mass, false, 0.0, false);
    r.fitted.emplace_back("R(k)", R);
    r.decide();
    return r;
}

CheckReport local_ld_variant_check(const TailModel& model, std::uint64_t k, std::span<const double> x_grid,
                                   double interval, const LocalLdOptions& opt) {
    if (x_grid.size() < 4) throw DomainError("local_ld_variant_check: x-grid needs at least 4 points");
    CheckReport r;
    r.name = "local-ld-variant";
    echo_model(r, model);
    echo(r, "k", static_cast<double>(k));
    echo(r, "interval", interval);
    echo(r, "cells", static_cast<double>(opt.cells));
    const double alpha = model.alpha();
    if (!(alpha > 0.5)) r.notes.push_back("alpha <= 1/2: the variant bound is not claimed here");

    const double x_hi = *std::max_element(x_grid.begin(), x_grid.end());
    double cbar[2] = {0, 0}, disc = 0.0, overflow = 0.0, held_out = 0.0;
    for (int j = 0; j < 2; ++j) {
        std::uint64_t kk = k << j;
        double R = rate_R(model, static_cast<double>(kk));
        LatticeDist fine = power_law_sum(model, kk, x_hi * R + interval, opt.cells);
        LatticeDist coarse = power_law_sum(model, kk, x_hi * R + interval, opt.cells / 2);
        overflow = std::max(overflow, fine.overflow_mass);
        std::vector<double> ratio(x_grid.size());
        double cc = 0.0;
        for (std::size_t i = 0; i < x_grid.size(); ++i) {
            double t = x_grid[i] * R;
            double norm = std::pow(t, alpha) * R / (static_cast<double>(kk) * model.slow_value(t));
            ratio[i] = interval_prob(fine, t, t + interval) * norm;
            double rc = interval_prob(coarse, t, t + interval) * norm;
            if (i % 2 == 0) {
                cbar[j] = std::max(cbar[j], ratio[i]);
                cc = std::max(cc, rc);
            }
        }
        for (std::size_t i = 1; i < x_grid.size(); i += 2) held_out = std::max(held_out, ratio[i] / cbar[j]);
        disc = std::max(disc, std::abs(cc - cbar[j]) / cbar[j]);
        r.fitted.emplace_back("Cbar[k=" + std::to_string(kk) + "]", cbar[j]);
    }
    r.fitted.emplace_back("held_out_ratio", held_out);
    r.statistic = std::abs(cbar[1] / cbar[0] - 1.0);
    r.threshold = 0.25;
    r.budget_terms.push_back({"discretization", 2.0 * disc, true});
    add_standard_terms(r, overflow, false, 0.0, false);
    r.decide();
    if (held_out > 1.0 + opt.slack) {
        r.pass = false;
        r.notes.push_back("held-out points exceed the fitted bound beyond the slack");
    }
    return r;
}

// ---------------------------------------------------------------- mixing

double set_measure(const RoofLaw& law, const ProductSet& s) {
    return law.prob(s.base_lo, s.base_hi) * s.fiber_length();
}

namespace {
void echo_sets(CheckReport& r, const ProductSet& a, const ProductSet& b) {
    echo(r, "A", "[" + format_real(a.base_lo) + "," + format_real(a.base_hi) + "]x[" + format_real(a.a1) + "," +
                     format_real(a.a2) + "]");
    echo(r, "B", "[" + format_real(b.base_lo) + "," + format_real(b.base_hi) + "]x[" + format_real(b.a1) + "," +
                     format_real(b.a2) + "]");
}
}  // namespace

CheckReport mixing_iid_check(const RoofLaw& law, const ProductSet& a, const ProductSet& b,
                             std::span<const MixingEstimate> estimates, double c_hat, double tolerance) {
    if (estimates.empty()) throw ConfigError("t-grid", "mixing check needs at least one t");
    CheckReport r;
    r.name = "mixing-iid-limit";
    echo_sets(r, a, b);
    echo(r, "c_hat", c_hat);
    const double target = c_hat * set_measure(law, a) * set_measure(law, b);
    double mc = 0.0;
    for (const auto& e : estimates) {
        r.statistic = std::max(r.statistic, std::abs(e.scaled / target - 1.0));
        mc = std::max(mc, 3.0 * e.scaled_stderr / target);
        r.fitted.emplace_back("normalized[t=" + format_real(e.t) + "]", e.scaled / target);
    }
    r.threshold = tolerance;
    add_standard_terms(r, 0.0, false, mc, true);
    r.fitted.emplace_back("target", target);
    r.decide();
    return r;
}

CheckReport semi_analytic_check(const RoofLaw& law, const ProductSet& a, const ProductSet& b, double t,
                                double c_hat, double tolerance, const RenewalOptions& opt) {
    CheckReport r;
    r.name = "mixing-semi-analytic";
    echo_sets(r, a, b);
    echo(r, "t", t);
    echo(r, "step", opt.step);
    echo(r, "eps_cut", opt.eps_cut);
    RenewalResult fine = renewal_sum_eval(law, a, b, t, opt);
    RenewalOptions half = opt;
    half.step = 2.0 * opt.step;
    RenewalResult coarse = renewal_sum_eval(law, a, b, t, half);
    r.statistic = std::abs(fine.normalized / c_hat - 1.0);
    r.threshold = tolerance;
    const double rel_tail = fine.value > 0 ? fine.tail_budget / fine.value : kInf;
    r.budget_terms.push_back({"renewal_tail", rel_tail * std::abs(fine.normalized / c_hat), true});
    r.budget_terms.push_back({"discretization", std::abs(fine.normalized - coarse.normalized) / c_hat, true});
    add_standard_terms(r, 0.0, false, 0.0, false);
    r.fitted.emplace_back("normalized", fine.normalized);
    r.fitted.emplace_back("c_hat", c_hat);
    r.fitted.emplace_back("k_max", static_cast<double>(fine.k_max));
    r.notes.push_back("overflow beyond the window is covered by the renewal_tail bound");
    r.decide();
    return r;
}

CheckReport mc_agreement_check(const MixingEstimate& mc, const RenewalResult& exact, double z) {
    CheckReport r;
    r.name = "mixing-mc-vs-semi-analytic";
    echo(r, "t", mc.t);
    echo(r, "n_samples", static_cast<double>(mc.n_samples));
    echo(r, "seed", static_cast<double>(mc.seed));
    if (!(mc.stderr_ > 0)) {
        r.inconclusive = true;
        r.notes.push_back("zero standard error");
        r.decide();
        return r;
    }
    r.statistic = std::abs(mc.raw - exact.value) / mc.stderr_;
    r.threshold = z;
    r.budget_terms.push_back({"renewal_tail", exact.tail_budget / mc.stderr_, true});
    add_standard_terms(r, 0.0, false, mc.stderr_, false);
    r.fitted.emplace_back("mc_raw", mc.raw);
    r.fitted.emplace_back("semi_analytic", exact.value);
    r.notes.push_back("statistic is already in standard-error units");
    r.decide();
    return r;
}

CheckReport decomposition_check(const RoofLaw& law, const ProductSet& a, const ProductSet& b, double t,
                                double eps, double min_share, const RenewalOptions& opt) {
    CheckReport r;
    r.name = "mixing-decomposition";
    echo_sets(r, a, b);
    echo(r, "t", t);
    echo(r, "eps", eps);
    Decomposition d = decomposition_diagnostics(law, a, b, t, eps, opt);
    r.statistic = 1.0 - d.share_ii();
    r.threshold = 1.0 - min_share;
    add_standard_terms(r, 0.0, false, 0.0, false);
    r.fitted.emplace_back("part_i", d.part_i);
    r.fitted.emplace_back("part_ii", d.part_ii);
    r.fitted.emplace_back("part_iii", d.part_iii);
    r.fitted.emplace_back("share_ii", d.share_ii());
    r.decide();
    return r;
}

CheckReport oscillation_check(const RoofLaw& law, const ProductSet& a, const ProductSet& b,
                              std::span<const double> t_grid, double shift, const CorrelationOptions& opt,
                              double z) {
    if (t_grid.empty()) throw ConfigError("t-grid", "oscillation check needs at least one t");
    CheckReport r;
    r.name = "mixing-rational-oscillation";
    echo_sets(r, a, b);
    echo(r, "shift", shift);
    echo(r, "n_samples", static_cast<double>(opt.n_samples));
    echo(r, "seed", static_cast<double>(opt.seed));
    double se_max = 0.0;
    for (double t : t_grid) {
        MixingEstimate e0 = correlation_mc(law, a, b, t, opt);
        MixingEstimate e1 = correlation_mc(law, a, b, t + shift, opt);
        double se = std::hypot(e0.scaled_stderr, e1.scaled_stderr);
        double sep = se > 0 ? std::abs(e0.scaled - e1.scaled) / se : 0.0;
        se_max = std::max(se_max, se);
        r.statistic = std::max(r.statistic, sep > 0 ? z / sep : kInf);
        r.fitted.emplace_back("scaled[t=" + format_real(t) + "]", e0.scaled);
        r.fitted.emplace_back("scaled[t=" + format_real(t + shift) + "]", e1.scaled);
        r.fitted.emplace_back("separation_sigma[t=" + format_real(t) + "]", sep);
    }
    r.threshold = 1.0;
    add_standard_terms(r, 0.0, false, se_max, false);
    r.notes.push_back("statistic is z / separation in combined standard errors; pass means non-mixing detected");
    r.decide();
    return r;
}

CheckReport trend_check(const std::string& name, std::span<const MixingEstimate> est, double z) {
    if (est.empty()) throw ConfigError("t-grid", "trend check needs at least one t");
    CheckReport r;
    r.name = name;
    echo(r, "z", z);
    echo(r, "n_samples", static_cast<double>(est.front().n_samples));
    echo(r, "seed", static_cast<double>(est.front().seed));
    double se_max = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) {
        const auto& e = est[i];
        r.fitted.emplace_back("scaled[t=" + format_real(e.t) + "]", e.scaled);
        r.fitted.emplace_back("scaled_stderr[t=" + format_real(e.t) + "]", e.scaled_stderr);
        se_max = std::max(se_max, e.scaled_stderr);
        if (e.n_samples < 1000) r.inconclusive = true;
        // Positivity: e.scaled > z se  <=>  z se / scaled < 1.
        r.statistic = std::max(r.statistic, e.scaled > 0 ? z * e.scaled_stderr / e.scaled : kInf);
        if (i + 1 < est.size()) {
            double se = std::hypot(e.scaled_stderr, est[i + 1].scaled_stderr);
            double d = std::abs(est[i + 1].scaled - e.scaled);
            r.statistic = std::max(r.statistic, se > 0 ? d / (z * se) : (d > 0 ? kInf : 0.0));
        }
    }
    if (r.inconclusive) r.notes.push_back("undersampled estimate in the sequence");
    r.threshold = 1.0;
    add_standard_terms(r, 0.0, false, se_max, false);
    r.notes.push_back("statistic is the largest successive gap over z combined standard errors, "
                      "or z se / value when positivity is the binding constraint");
    r.decide();
    return r;
}

std::vector<CheckReport> mixing_suite(const RoofLaw& law, const SupportClass& support, const ProductSet& a,
                                      const ProductSet& b, std::span<const double> t_grid,
                                      const MixingSuiteOptions& opt) {
    if (t_grid.empty()) throw ConfigError("t-grid", "must not be empty");
    std::vector<CheckReport> out;
    if (support.tag == SupportClass::Tag::Rational) {
        double period = support.hbar.value();
        out.push_back(oscillation_check(law, a, b, t_grid, 0.5 * period, opt.mc));
        return out;
    }
    std::vector<MixingEstimate> est;
    for (double t : t_grid) est.push_back(correlation_mc(law, a, b, t, opt.mc));
    if (support.tag == SupportClass::Tag::PeriodicIrrational) {
        out.push_back(trend_check("mixing-periodic-irrational-trend", est));
        return out;
    }
    out.push_back(trend_check("mixing-aperiodic-trend", est));
    if (law.kind() == RoofLaw::Kind::Continuous) {
        const double c_hat = StableDensity(law.model().alpha()).c_hat();
        out.push_back(mixing_iid_check(law, a, b, est, c_hat));
        const double t_last = t_grid.back();
        out.push_back(semi_analytic_check(law, a, b, t_last, c_hat, 0.02, opt.renewal));
        out.push_back(mc_agreement_check(est.back(), renewal_sum_eval(law, a, b, t_last, opt.renewal)));
        out.push_back(decomposition_check(law, a, b, t_last, opt.decomposition_eps, 0.9, opt.renewal));
    }
    return out;
}

std::vector<CheckReport> mixing_suite_lsv(const InducedEngine& engine, const RoofSpec& roof, const ProductSet& a,
                                          const ProductSet& b, std::span<const double> t_grid,
                                          const LsvCorrelationOptions& opt) {
    if (t_grid.empty()) throw ConfigError("t-grid", "must not be empty");
    std::vector<double> grid(t_grid.begin(), t_grid.end());
    auto est = correlation_lsv(engine, roof, a, b, grid, opt);
    std::vector<CheckReport> out;
    out.push_back(trend_check("mixing-lsv-trend", est));
    return out;
}

// ---------------------------------------------------------------- KS

double ks_statistic(std::span<const double> sorted, const std::function<double(double)>& cdf) {
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        double f = cdf(sorted[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

double ks_pvalue(double d, std::size_t n) {
    if (n == 0) throw DomainError("ks_pvalue: empty sample");
    const double sn = std::sqrt(static_cast<double>(n));
    const double x = d * (sn + 0.12 + 0.11 / sn);
    if (x < 0.2) return 1.0;
    double p = 0.0;
    for (int j = 1; j <= 100; ++j) {
        double term = std::exp(-2.0 * j * j * x * x);
        p += (j % 2 ? 2.0 : -2.0) * term;
        if (term < 1e-18) break;
    }
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace kmix
