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

#include <cmath>
#include <vector>

#include "kmix/error.hpp"
#include "kmix/lsv.hpp"

using namespace kmix;

namespace {

double slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
    return sxy / sxx;
}

std::uint64_t direct_return(double r, double x) {
    std::uint64_t n = 1;
    for (x = lsv_map(r, x); x < 0.5; x = lsv_map(r, x)) ++n;
    return n;
}

}  // namespace

TEST_CASE("map branches") {
    CHECK(lsv_map(2.0, 0.25) == doctest::Approx(0.3125).epsilon(1e-15));
    CHECK(lsv_map(2.0, 0.75) == 0.5);
    CHECK(lsv_map(1.5, 0.5) == 0.0);
    CHECK(lsv_left(1.5, 0.5) == 1.0);
    CHECK(lsv_map(2.0, 0.0) == 0.0);
}

TEST_CASE("boundaries are exact at the first levels") {
    for (double r : {1.25, 1.5, 2.0, 3.0}) {
        auto sys = boundaries(r, 4096);
        CHECK(sys.y(0) == 1.0);
        CHECK(sys.y(1) == 0.5);
        CHECK(sys.x(1) == 1.0);
        CHECK(sys.x(2) == 0.75);
        CHECK(sys.max_residual() <= 1e-14);
        for (std::size_t n = 0; n + 1 <= sys.n_max(); ++n) CHECK(sys.y(n + 1) < sys.y(n));
    }
}

TEST_CASE("second boundary for r = 2") {
    // root of y (1 + 4 y^2) = 1/2 by bisection
    double lo = 0.0, hi = 0.5;
    for (int i = 0; i < 200; ++i) {
        double m = 0.5 * (lo + hi);
        (m * (1 + 4 * m * m) < 0.5 ? lo : hi) = m;
    }
    auto sys = boundaries(2.0, 16);
    CHECK(sys.y(2) == doctest::Approx(lo).epsilon(1e-12));
    CHECK(sys.y(2) == doctest::Approx(0.34116390191400966).epsilon(1e-12));
    CHECK(sys.x(3) == doctest::Approx((1 + lo) / 2).epsilon(1e-12));
}

TEST_CASE("boundary decay exponent") {
    for (double r : {1.5, 2.0}) {
        auto sys = boundaries(r, 10000);
        std::vector<double> lx, ly;
        for (std::size_t n = 100; n <= 10000; n += 100) {
            lx.push_back(std::log(static_cast<double>(n)));
            ly.push_back(std::log(sys.y(n)));
        }
        CHECK(slope(lx, ly) == doctest::Approx(-1.0 / r).epsilon(0.05 * r));
    }
}

TEST_CASE("return times and the induced map") {
    auto sys2 = boundaries(2.0, 4096);
    CHECK(return_time(sys2, 0.9) == 1);
    CHECK(induced_map(sys2, 0.9) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(return_time(sys2, 0.7) == 2);
    CHECK(induced_map(sys2, 0.7) == doctest::Approx(0.656).epsilon(1e-14));
    CHECK_THROWS_AS(return_time(sys2, 0.5), NumericError);

    RandomStream rng(2, "lsv", 0);
    for (int i = 0; i < 100000; ++i) {
        double x = 0.5 + 0.5 * rng.uniform();
        if (x <= sys2.x(4000)) continue;
        REQUIRE(return_time(sys2, x) == direct_return(2.0, x));
    }
    // level sets X_n = (x_{n+1}, x_n], probed away from the rounded endpoints
    for (std::size_t n = 1; n < 50; ++n) {
        const double w = sys2.x(n) - sys2.x(n + 1);
        CHECK(return_time(sys2, sys2.x(n) - 1e-9 * w) == n);
        CHECK(return_time(sys2, sys2.x(n + 1) + 1e-9 * w) == n);
        CHECK(return_time(sys2, sys2.x(n + 1) + 0.5 * w) == n);
    }
}

TEST_CASE("induced roof") {
    auto sys = boundaries(2.0, 4096);
    CHECK(induced_roof(sys, RoofSpec::affine(1, 1), 0.9) == doctest::Approx(1.9).epsilon(1e-15));
    for (double x : {0.51, 0.6, 0.7, 0.95})
        CHECK(induced_roof(sys, RoofSpec::affine(1, 0), x) == doctest::Approx(double(return_time(sys, x))));
    auto table = RoofSpec::table({0.0, 0.5, 1.0}, {1.0, 2.0, 4.0});
    CHECK(table(0.25) == doctest::Approx(1.5));
    CHECK(table(0.75) == doctest::Approx(3.0));
}

TEST_CASE("engine agrees with direct iteration") {
    for (double r : {1.5, 2.0}) {
        auto sys = boundaries(r, 4096);
        InducedEngine eng(sys);
        auto v = eng.validate(20000, 9);
        CHECK(v.return_mismatches == 0);
        CHECK(v.max_next_error < 1e-9);
        CHECK(v.max_sum_error < 1e-7);
        for (std::uint64_t n : {1u, 2u, 7u, 100u}) {
            double x = eng.inverse_branch(n, 0.8);
            auto s = eng.step(x);
            CHECK(s.ret == n);
            CHECK(s.next == doctest::Approx(0.8).epsilon(1e-10));
        }
    }
}

TEST_CASE("invariant measure by two methods") {
    auto sys = boundaries(2.0, 4096);
    InducedEngine eng(sys);
    OrbitOptions o;
    o.steps = 20'000'000;
    auto st = birkhoff_orbit(eng, o);
    auto ul = ulam_measure(eng, 256);
    CHECK(st.visits.total() == doctest::Approx(1.0));
    CHECK(ul.measure.total() == doctest::Approx(1.0));
    CHECK(total_variation(st.visits, ul.measure) <= 0.01);

    std::vector<double> lx, ly;
    for (std::uint64_t n = 10; n <= 1000; n = n * 5 / 4) {
        lx.push_back(std::log(static_cast<double>(n)));
        ly.push_back(std::log(st.tail_fraction(n)));
    }
    CHECK(slope(lx, ly) == doctest::Approx(-0.5).epsilon(0.1));
}

TEST_CASE("quasi-independence") {
    auto sys = boundaries(2.0, 4096);
    InducedEngine eng(sys);
    auto seq = return_sequence(eng, 4'000'000, 3);
    auto sh = shuffled(seq, 4);
    QiOptions o;
    auto iid = qi_constant(sh, o);
    CHECK(iid.pairs_used > 0);
    CHECK(iid.ci_lo <= 1.0);
    CHECK(iid.ci_hi >= 1.0);

    auto k1 = qi_constant(std::span(seq).first(seq.size() / 2), o);
    auto k2 = qi_constant(seq, o);
    CHECK(std::isfinite(k2.k_hat));
    CHECK(k2.k_hat >= 1.0);
    CHECK(k2.k_hat == doctest::Approx(k1.k_hat).epsilon(0.2));

    auto large = qi_large(seq, 20, 1);
    CHECK(std::isfinite(large.k_hat));
}

TEST_CASE("periodic orbits") {
    auto sys = boundaries(1.5, 4096);
    InducedEngine eng(sys);
    std::vector<std::uint64_t> it{1};
    auto fixed = periodic_orbit(eng, RoofSpec::affine(1, 0), it);
    REQUIRE(fixed.points.size() == 1);
    CHECK(fixed.points[0] == doctest::Approx(1.0));
    std::vector<std::uint64_t> it2{2, 3};
    auto orb = periodic_orbit(eng, RoofSpec::affine(1, 0), it2);
    CHECK(orb.period == doctest::Approx(5.0));
    CHECK(induced_map(sys, induced_map(sys, orb.points[0])) == doctest::Approx(orb.points[0]).epsilon(1e-9));
}
