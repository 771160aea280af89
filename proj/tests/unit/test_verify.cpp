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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "kmix/error.hpp"
#include "kmix/verify.hpp"

using namespace kmix;

namespace {

bool has_note(const CheckReport& r, const std::string& needle) {
    return std::any_of(r.notes.begin(), r.notes.end(),
                       [&](const std::string& n) { return n.find(needle) != std::string::npos; });
}

double fitted(const CheckReport& r, const std::string& key) {
    for (auto& [k, v] : r.fitted)
        if (k == key) return v;
    FAIL("missing fitted value " << key);
    return NAN;
}

MixingEstimate est(double t, double scaled, double se) {
    MixingEstimate e;
    e.t = t;
    e.scaled = scaled;
    e.scaled_stderr = se;
    e.raw = scaled;
    e.stderr_ = se;
    e.n_samples = 1'000'000;
    return e;
}

}  // namespace

TEST_CASE("report decision") {
    CheckReport r;
    r.statistic = 0.5;
    r.threshold = 1.0;
    r.budget_terms = {{"a", 0.3}, {"b", 5.0, false}};
    r.decide();
    CHECK(r.pass);
    CHECK(r.budget() == doctest::Approx(0.3));
    r.budget_terms.push_back({"c", 0.3});
    r.decide();
    CHECK_FALSE(r.pass);
    r.budget_terms.clear();
    r.inconclusive = true;
    r.decide();
    CHECK_FALSE(r.pass);
    r.inconclusive = false;
    r.statistic = NAN;
    r.decide();
    CHECK_FALSE(r.pass);
}

TEST_CASE("reals print with 17 significant digits") {
    CHECK(format_real(0.1) == "0.10000000000000001");
    CHECK(format_real(1.0) == "1");
    CHECK(std::stod(format_real(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("admissibility of (alpha, -1, 1) is exactly alpha > 1/2") {
    for (long long q = 2; q <= 60; ++q)
        for (long long p = 1; p < q; ++p) {
            Rational a(p, q);
            CHECK(admissible(ExponentTriple{a, -1, 1}, a) == (a > Rational(1, 2)));
        }
    CHECK_FALSE(admissible(ExponentTriple{Rational(1, 2), -1, 1}, Rational(1, 2)));
    CHECK(admissible(ExponentTriple{Rational(501, 1000), -1, 1}, Rational(501, 1000)));
    CHECK_THROWS_AS(admissible(ExponentTriple{1, 0, 0}, Rational(1)), DomainError);
    CHECK(admissible(GammaPair{Rational(1), Rational(0)}, Rational(1, 3)));
    CHECK_FALSE(admissible(GammaPair{Rational(0), Rational(1)}, Rational(1, 3)));
    std::vector<ExponentTriple> both{{Rational(13, 10), -1, 0}, {1, 0, 0}};
    CHECK(admissible(both, Rational(3, 10)));
}

TEST_CASE("admissibility report") {
    auto r = admissibility_report(Rational(3, 10));
    CHECK(r.pass);
    CHECK(r.statistic == 0.0);
    CHECK(fitted(r, "by_term_term1") == 1.0);
    CHECK(fitted(r, "by_term_term2") == 1.0);
    CHECK(fitted(r, "by_exponent_term1") == 0.0);
    CHECK(fitted(r, "by_exponent_term2") == 0.0);
}

TEST_CASE("llt check flags tiny k") {
    auto m = TailModel::constant(0.5);
    StableDensity sd(0.5);
    LltOptions o;
    o.cells = 1 << 14;
    auto r = llt_check(m, 1, 1.0, sd, o);
    CHECK(has_note(r, "k too small"));
    CHECK_FALSE(r.pass);
}

TEST_CASE("llt check at moderate k") {
    auto m = TailModel::constant(0.5);
    StableDensity sd(0.5);
    LltOptions o;
    o.cells = 1 << 18;
    auto r = llt_check(m, 256, 1.0, sd, o);
    CHECK(r.pass);
    // frozen: 2.985e-3 at 2^18 cells, about a fifth of the threshold
    CHECK(r.statistic == doctest::Approx(2.985e-3).epsilon(0.02));
    CHECK(r.inflated() < 0.25 * r.threshold);
}

TEST_CASE("anticoncentration") {
    auto m = TailModel::constant(0.5);
    std::vector<std::uint64_t> ks{2, 4, 8, 16, 32, 64, 128, 256};
    StableDensity sd(0.5);
    auto good = anticonc_check(m, ks, &sd);
    CHECK(good.pass);
    CHECK(good.statistic <= 3.0);

    // point mass at 1: tau_k = k sits in a unit interval with probability 1
    auto bad = anticonc_check(LatticeDist::point_mass(1.0), [](double k) { return k * k; }, ks, 300.0);
    CHECK_FALSE(bad.pass);
    CHECK(bad.statistic > 3.0);
}

TEST_CASE("large deviations at k = 1 are exact") {
    auto m = TailModel::constant(0.5);
    std::vector<std::pair<std::uint64_t, double>> pairs{{1, 1e4}, {1, 1e6}};
    auto r = ld_check(m, pairs);
    CHECK(r.pass);
    CHECK(r.statistic == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("large deviations skip pairs that are not large") {
    auto m = TailModel::constant(0.5);
    std::vector<std::pair<std::uint64_t, double>> pairs{{50, 100.0}};
    auto r = ld_check(m, pairs);
    CHECK(r.inconclusive);
    CHECK_FALSE(r.pass);
}

TEST_CASE("trend check") {
    std::vector<MixingEstimate> flat{est(1e3, 1.0, 0.01), est(2e3, 1.01, 0.01), est(4e3, 0.995, 0.01)};
    CHECK(trend_check("flat", flat).pass);
    std::vector<MixingEstimate> drift{est(1e3, 1.0, 0.01), est(2e3, 1.2, 0.01)};
    CHECK_FALSE(trend_check("drift", drift).pass);
    std::vector<MixingEstimate> zero{est(1e3, 0.0, 0.01), est(2e3, 0.0, 0.01)};
    CHECK_FALSE(trend_check("zero", zero).pass);
}

TEST_CASE("integer roof does not mix") {
    auto law = RoofLaw::ceil_lattice(TailModel::constant(0.5), 0.0, 1.0);
    ProductSet a{0.0, INFINITY, 0.0, 0.4};
    CorrelationOptions o;
    o.n_samples = 200000;
    std::vector<double> ts{100.0, 400.0};
    auto r = oscillation_check(law, a, a, ts, 0.5, o);
    CHECK(r.pass);
}

TEST_CASE("ks statistic") {
    std::vector<double> xs;
    for (int i = 0; i < 1000; ++i) xs.push_back((i + 0.5) / 1000.0);
    auto u = [](double x) { return std::clamp(x, 0.0, 1.0); };
    CHECK(ks_statistic(xs, u) == doctest::Approx(0.0005));
    CHECK(ks_pvalue(0.0005, 1000) == doctest::Approx(1.0));
    // critical value at level 0.01 is about 1.628 / sqrt(n)
    CHECK(ks_pvalue(1.628 / std::sqrt(1e6), 1000000) == doctest::Approx(0.01).epsilon(0.02));
    for (auto& x : xs) x = x * x;
    CHECK(ks_pvalue(ks_statistic(xs, u), xs.size()) < 1e-6);
}
