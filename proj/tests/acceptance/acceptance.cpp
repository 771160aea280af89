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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "kmix/dist.hpp"
#include "kmix/flow.hpp"
#include "kmix/lsv.hpp"
#include "kmix/regvar.hpp"
#include "kmix/stable.hpp"
#include "kmix/verify.hpp"

using namespace kmix;
using std::numbers::pi;

namespace {

struct Verdict {
    bool pass = true;
    std::vector<std::string> lines;

    // Records one sub-check; the criterion passes only if all of them do.
    void expect(bool ok, const std::string& what) {
        pass = pass && ok;
        lines.push_back((ok ? "ok   " : "FAIL ") + what);
    }
    void note(const std::string& what) { lines.push_back("     " + what); }
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string describe(const CheckReport& r) {
    return fmt("%s: statistic %.4g + budget %.3g vs threshold %.4g", r.name.c_str(), r.statistic, r.budget(),
               r.threshold);
}

std::vector<double> geometric(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    return g;
}

double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
    return sxy / sxx;
}

const double kAlphas[] = {0.25, 0.4, 0.5, 0.6, 0.75};

Verdict c1() {
    Verdict v;
    for (double a : kAlphas) {
        StableDensity d(a);
        double dev = std::abs(c_hat(d) - std::sin(pi * a) / pi);
        v.expect(dev <= 1e-4, fmt("alpha %.2f: |c_hat - sin(pi a)/pi| = %.3g <= 1e-4", a, dev));
    }
    return v;
}

Verdict c2() {
    Verdict v;
    StableDensity d(0.5);
    auto levy = [](double x) { return std::pow(x, -1.5) * std::exp(-0.25 / x) / (2.0 * std::sqrt(pi)); };
    double worst = 0.0;
    for (double z : geometric(0.01, 100.0, 100)) worst = std::max(worst, std::abs(d.rho(z) - levy(z / pi) / pi));
    v.expect(worst <= 1e-8, fmt("max |rho - Levy closed form| on 100 points = %.3g <= 1e-8", worst));

    const std::size_t n = 1'000'000;
    std::vector<double> xs(n);
    RandomStream rng(2026, "acceptance-ks", 0);
    for (auto& x : xs) x = sample_stable(d, rng);
    std::sort(xs.begin(), xs.end());
    v.expect(xs.front() > 0.0, "all draws positive");
    double ks = ks_statistic(xs, [](double z) { return std::erfc(0.5 / std::sqrt(z / pi)); });
    double p = ks_pvalue(ks, n);
    v.expect(p > 0.01, fmt("KS vs closed-form cdf, n = 1e6: D = %.3g, p = %.3g > 0.01", ks, p));
    return v;
}

Verdict c3() {
    Verdict v;
    double worst = 0.0;
    for (unsigned seed = 1; seed <= 3; ++seed) {
        std::vector<double> w(64);
        RandomStream r(seed, "acceptance-toy", 0);
        double s = 0;
        for (auto& x : w) s += (x = r.uniform());
        for (auto& x : w) x /= s;
        auto d = LatticeDist::from_weights(0.0, 1.0, w);
        std::vector<double> ref = w;
        for (std::uint64_t k = 2; k <= 4; ++k) {
            std::vector<double> next(ref.size() + 63, 0.0);
            for (std::size_t i = 0; i < ref.size(); ++i)
                for (std::size_t j = 0; j < 64; ++j) next[i + j] += ref[i] * w[j];
            ref = next;
            auto p = convolve_power(d, k, INFINITY, ConvolveMethod::Fft);
            for (std::size_t i = 0; i < ref.size(); ++i) {
                double got = i < p.size() ? p.weights[i] : 0.0;
                worst = std::max(worst, std::abs(got - ref[i]));
            }
        }
    }
    v.expect(worst <= 1e-12, fmt("FFT vs brute force, k <= 4: max abs diff %.3g <= 1e-12", worst));

    auto law = discretize(TailModel::constant(0.5), 1.0, 1 << 16, DiscretizeRule::MeanPreserving);
    double drift = 0.0;
    for (std::uint64_t k = 1; k <= (1u << 14); k *= 2)
        drift = std::max(drift, std::abs(convolve_power(law, k, double(1 << 20)).total_mass() - 1.0));
    v.expect(drift <= 1e-10, fmt("mass conservation k = 1..2^14: max |mass - 1| = %.3g <= 1e-10", drift));
    return v;
}

Verdict c4() {
    Verdict v;
    for (double a : {0.5, 0.75}) {
        auto m = TailModel::constant(a);
        StableDensity sd(a);
        std::vector<double> stats;
        for (int e = 8; e <= 14; ++e) {
            auto r = llt_check(m, std::uint64_t{1} << e, 1.0, sd);
            stats.push_back(r.inflated());
            if (e == 12) v.expect(r.pass, fmt("alpha %.2f, k = 2^12: ", a) + describe(r));
        }
        bool mono = true;
        std::string seq;
        for (std::size_t i = 0; i < stats.size(); ++i) {
            if (i > 0 && !(stats[i] < stats[i - 1])) mono = false;
            seq += fmt(i ? ", %.3g" : "%.3g", stats[i]);
        }
        v.expect(mono, fmt("alpha %.2f: decreasing under doubling 2^8..2^14: ", a) + seq);
        // power-law extrapolation of the last two points to the threshold
        const double slope = std::log2(stats[6] / stats[5]);
        const double thr = 0.05 * sd.max_rho();
        if (stats[4] > thr && slope < 0)
            v.note(fmt("alpha %.2f: decay exponent %.3f per doubling; threshold %.4g reached near k = 2^%.1f", a,
                       slope, thr, 14 + std::log2(thr / stats[6]) / slope));
    }
    return v;
}

Verdict c5() {
    Verdict v;
    std::vector<std::uint64_t> ks;
    for (std::uint64_t k = 2; k <= 4096; k *= 2) ks.push_back(k);
    StableDensity sd(0.5);
    auto good = anticonc_check(TailModel::constant(0.5), ks, &sd);
    v.expect(good.pass, "Pareto 0.5, k = 2..2^12 by doubling: " + describe(good));
    auto bad = anticonc_check(LatticeDist::point_mass(1.0), [](double k) { return k * k; }, ks, 8192.0);
    v.expect(!bad.pass, "point mass counterexample is rejected: " + describe(bad));
    return v;
}

Verdict c6() {
    Verdict v;
    for (double a : {0.4, 0.6}) {
        auto m = TailModel::constant(a);
        std::vector<std::pair<std::uint64_t, double>> pairs;
        // k L(t) / t^alpha = 0.01 with L = 1
        for (std::uint64_t k : {50u, 200u}) pairs.emplace_back(k, std::pow(100.0 * k, 1.0 / a));
        auto r = ld_check(m, pairs);
        v.expect(r.pass, fmt("alpha %.1f: ", a) + describe(r));
        for (auto& [key, val] : r.fitted)
            if (key.rfind("ratio", 0) == 0) v.note(key + " = " + format_real(val));
    }
    return v;
}

Verdict c7() {
    Verdict v;
    {
        auto m = TailModel::constant(0.4);
        const double R = rate_R(m, 256.0);
        auto r = local_ld_check(m, 256, geometric(0.1 * R, 50.0 * R, 32), 1.0);
        v.expect(r.pass, "alpha 0.4, k = 2^8, held-out ratio: " + describe(r));
    }
    {
        auto r = local_ld_variant_check(TailModel::constant(0.7), 256, geometric(0.1, 50.0, 32), 1.0);
        v.expect(r.pass, "alpha 0.7, Cbar at k and 2k: " + describe(r));
    }
    return v;
}

Verdict c8() {
    Verdict v;
    for (Rational a : {Rational(3, 10), Rational(1, 2), Rational(7, 10)}) {
        auto r = admissibility_report(a);
        v.expect(r.pass, "alpha " + a.str() + ": " + describe(r));
        for (auto& n : r.notes) v.note(n);
    }
    return v;
}

const ProductSet kBox{0.0, INFINITY, 0.0, 0.4};

Verdict c9() {
    Verdict v;
    auto law = RoofLaw::continuous(TailModel::constant(0.5));
    const double t = 1e4;
    auto semi = semi_analytic_check(law, kBox, kBox, t, std::sin(pi / 2) / pi);
    v.expect(semi.pass, "renewal sum at t = 1e4 vs 1/pi: " + describe(semi));
    CorrelationOptions o;
    o.n_samples = 10'000'000;
    o.seed = 9;
    auto mc = correlation_mc(law, kBox, kBox, t, o);
    auto ex = renewal_sum_eval(law, kBox, kBox, t);
    auto agree = mc_agreement_check(mc, ex);
    v.expect(agree.pass, fmt("Monte Carlo n = 1e7: %.6g +- %.2g vs %.6g; ", mc.raw, mc.stderr_, ex.value) +
                             describe(agree));
    auto dec = decomposition_check(law, kBox, kBox, t, 0.25);
    v.expect(dec.pass, "share of the middle range at eps = 0.25: " + describe(dec));
    return v;
}

std::vector<MixingEstimate> trend(const RoofLaw& law, const std::vector<double>& ts, std::uint64_t n,
                                  std::uint64_t seed) {
    std::vector<MixingEstimate> out;
    CorrelationOptions o;
    o.n_samples = n;
    o.seed = seed;
    for (double t : ts) out.push_back(correlation_mc(law, kBox, kBox, t, o));
    return out;
}

Verdict c10() {
    Verdict v;
    auto m = TailModel::constant(0.5);
    CorrelationOptions o;
    o.n_samples = 1'000'000;
    o.seed = 10;
    std::vector<double> ts{1e3, 4e3, 1.6e4};
    auto osc = oscillation_check(RoofLaw::ceil_lattice(m, 0.0, 1.0), kBox, kBox, ts, 0.5, o);
    v.expect(osc.pass, "integer roof, phases t and t + 1/2: " + describe(osc));

    const std::vector<double> grid{1e4, 2e4, 4e4};
    auto pi_trend = trend_check("pi-lattice trend", trend(RoofLaw::ceil_lattice(m, pi, 1.0), grid, 1'000'000, 11));
    v.expect(pi_trend.pass, "roof pi + n: " + describe(pi_trend));
    auto ap_trend = trend_check("aperiodic trend", trend(RoofLaw::continuous(m), grid, 1'000'000, 12));
    v.expect(ap_trend.pass, "continuous Pareto roof: " + describe(ap_trend));
    return v;
}

Verdict c11() {
    Verdict v;
    double worst = 0.0;
    bool exact = true;
    for (double r : {1.25, 1.5, 2.0, 3.0}) {
        auto sys = boundaries(r, 4096);
        exact = exact && sys.y(1) == 0.5 && sys.x(2) == 0.75 && sys.x(1) == 1.0;
        worst = std::max(worst, sys.max_residual());
    }
    v.expect(exact, "y_1 = 1/2, x_1 = 1, x_2 = 3/4 exactly for r in {1.25, 1.5, 2, 3}");
    v.expect(worst <= 1e-14, fmt("boundary residuals %.3g <= 1e-14", worst));

    for (double r : {1.5, 2.0}) {
        auto sys = boundaries(r, 4096);
        InducedEngine eng(sys);
        OrbitOptions o;
        o.steps = 1'000'000'000;
        o.seed = 11;
        auto st = birkhoff_orbit(eng, o);
        std::vector<double> lx, ly;
        for (double n : geometric(10.0, 1000.0, 21)) {
            auto k = static_cast<std::uint64_t>(std::llround(n));
            lx.push_back(std::log(static_cast<double>(k)));
            ly.push_back(std::log(st.tail_fraction(k)));
        }
        double s = lsq_slope(lx, ly);
        v.expect(std::abs(s + 1.0 / r) <= 0.05, fmt("r = %.1f: slope of mu(R > n) on [10, 1e3] = %.4f vs %.4f +- 0.05",
                                                    r, s, -1.0 / r));
        auto ul = ulam_measure(eng, 256);
        double tv = total_variation(st.visits, ul.measure);
        v.expect(tv <= 0.01, fmt("r = %.1f: TV(Birkhoff, Ulam) at 256 bins = %.3g <= 0.01", r, tv));
    }
    return v;
}

Verdict c12() {
    Verdict v;
    auto sys = boundaries(1.5, 4096);
    InducedEngine eng(sys);
    ProductSet box{0.6, 1.0, 0.0, 0.5};
    LsvCorrelationOptions o;
    o.orbit_steps = 100'000'000;
    o.seed = 12;
    const std::vector<double> ts{250, 500, 1000, 2000};
    auto est = correlation_lsv(eng, RoofSpec::affine(1, 1), box, box, ts, o);
    std::string seq;
    for (auto& e : est) seq += fmt(" t=%g: %.5f +- %.1e;", e.t, e.scaled, e.scaled_stderr);
    v.note("scaled t^(1/3) nu(A & g_-t B):" + seq);
    auto r = trend_check("lsv trend", est);
    v.expect(r.pass, "Cauchy trend over t = 250..2000: " + describe(r));
    if (est.size() == 4) {
        double d1 = est[1].scaled - est[0].scaled, d2 = est[2].scaled - est[1].scaled,
               d3 = est[3].scaled - est[2].scaled;
        v.note(fmt("successive increments %.2e, %.2e, %.2e (ratios %.3f, %.3f; t^-1/3 decay gives %.3f)", d1, d2, d3,
                   d2 / d1, d3 / d2, std::pow(2.0, -1.0 / 3.0)));
    }
    return v;
}

Verdict c13() {
    Verdict v;
    for (double r : {1.5, 2.0}) {
        auto sys = boundaries(r, 4096);
        InducedEngine eng(sys);
        auto seq = return_sequence(eng, std::size_t{1} << 24, 13);
        QiOptions o;
        auto iid = qi_constant(shuffled(seq, 14), o);
        v.expect(iid.ci_lo <= 1.0 && 1.0 <= iid.ci_hi,
                 fmt("r = %.1f, shuffled surrogate: K = %.4f, CI [%.4f, %.4f] contains 1", r, iid.k_hat, iid.ci_lo,
                     iid.ci_hi));
        auto half = qi_constant(std::span(seq).first(seq.size() / 2), o);
        auto full = qi_constant(seq, o);
        double rel = std::abs(full.k_hat / half.k_hat - 1.0);
        v.expect(std::isfinite(full.k_hat) && rel <= 0.2,
                 fmt("r = %.1f, depth 1, lag 1: K = %.4f (2^23) vs %.4f (2^24), change %.3f <= 0.2, %zu pairs", r,
                     half.k_hat, full.k_hat, rel, full.pairs_used));
    }
    return v;
}

struct Criterion {
    int id;
    const char* title;
    double budget_s;
    std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all = {
        {1, "stable constant identity", 10, c1},
        {2, "alpha = 1/2 closed form and sampler", 30, c2},
        {3, "FFT oracle exactness", 10, c3},
        {4, "local limit theorem", 120, c4},
        {5, "anticoncentration", 60, c5},
        {6, "sharp large deviations", 60, c6},
        {7, "local large deviations", 120, c7},
        {8, "admissibility logic", 1, c8},
        {9, "i.i.d. mixing", 600, c9},
        {10, "trichotomy demo", 600, c10},
        {11, "LSV structure", 900, c11},
        {12, "LSV mixing trend", 1800, c12},
        {13, "quasi-independence", 300, c13},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& c : all) {
        if (!only.empty() && !only.count(c.id)) continue;
        auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v.expect(false, std::string("exception: ") + e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        v.expect(secs <= c.budget_s, fmt("runtime %.1f s <= %.0f s", secs, c.budget_s));
        std::printf("%s C%02d %s\n", v.pass ? "PASS" : "FAIL", c.id, c.title);
        for (auto& l : v.lines) std::printf("       %s\n", l.c_str());
        std::fflush(stdout);
        failed += !v.pass;
    }
    std::printf("%d criteria failed\n", failed);
    return failed ? 1 : 0;
}
