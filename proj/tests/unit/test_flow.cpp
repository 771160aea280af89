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
#include <numbers>

#include "kmix/error.hpp"
#include "kmix/flow.hpp"
#include "kmix/verify.hpp"

using namespace kmix;

namespace {

ProductSet box(double a1, double a2, double lo = 0.0, double hi = INFINITY) { return {lo, hi, a1, a2}; }

}  // namespace

TEST_CASE("flow on a constant roof") {
    IidBase base(RoofLaw::point(2.0), 1);
    SuspensionState<IidBase> s;
    std::uint64_t laps = 0;
    auto out = flow_advance(base, s, 5.0, &laps);
    CHECK(laps == 2);
    CHECK(out.fiber_s == doctest::Approx(1.0));
    CHECK(out.base_point.index == 2);
    auto same = flow_advance(base, s, 0.0, &laps);
    CHECK(laps == 0);
    CHECK(same.base_point == s.base_point);
    CHECK(same.fiber_s == 0.0);
    CHECK_THROWS_AS(flow_advance(base, s, -1.0), DomainError);
}

TEST_CASE("flow semigroup property") {
    IidBase base(RoofLaw::continuous(TailModel::constant(0.5)), 3);
    RandomStream rng(4, "flow-test", 0);
    for (int i = 0; i < 1000; ++i) {
        SuspensionState<IidBase> s;
        s.base_point = {static_cast<std::uint64_t>(i), 0};
        s.fiber_s = rng.uniform() * base.roof(s.base_point);
        double t1 = 100 * rng.uniform(), t2 = 1000 * rng.uniform();
        auto a = flow_advance(base, flow_advance(base, s, t1), t2);
        auto b = flow_advance(base, s, t1 + t2);
        CHECK(a.base_point == b.base_point);
        CHECK(std::abs(a.fiber_s - b.fiber_s) <= 1e-12 * std::max(1.0, t1 + t2));
        CHECK(a.fiber_s >= 0.0);
        CHECK(a.fiber_s < base.roof(a.base_point));
    }
}

TEST_CASE("lsv suspension") {
    LsvBase base(2.0, RoofSpec::affine(1, 1));
    SuspensionState<LsvBase> s{0.9, 0.0};
    // roof at 0.9 is 1.9, then f(0.9) = 0.8 with roof 1.8
    auto out = flow_advance(base, s, 3.0);
    CHECK(out.base_point == doctest::Approx(0.8));
    CHECK(out.fiber_s == doctest::Approx(1.1));
}

TEST_CASE("roof laws") {
    auto m = TailModel::constant(0.5);
    auto c = RoofLaw::continuous(m);
    CHECK(c.tail(100.0) == doctest::Approx(0.1));
    CHECK(c.prob(1.0, 4.0) == doctest::Approx(0.5));
    CHECK(c.minimum() == 1.0);
    CHECK(c.scale(100.0) == doctest::Approx(10.0));
    auto lat = RoofLaw::ceil_lattice(m, std::numbers::pi, 1.0);
    CHECK(lat.minimum() == doctest::Approx(std::numbers::pi + 1.0));
    CHECK(lat.quantile(0.3) - std::numbers::pi == doctest::Approx(std::round(lat.quantile(0.3) - std::numbers::pi)));
    auto p = RoofLaw::point(1.0);
    CHECK(p.tail(0.5) == 1.0);
    CHECK(p.tail(1.0) == 0.0);
    CHECK(p.scale(1e6) == 1.0);
    CHECK(p.quantile(0.7) == 1.0);
}

TEST_CASE("renewal sum for a point roof") {
    auto law = RoofLaw::point(1.0);
    auto a = box(0.0, 0.4);
    // a + 5.5 lands in [5.5, 5.9], never in some [k, k + 0.4]
    CHECK(renewal_sum_eval(law, a, a, 5.5).value == doctest::Approx(0.0));
    // a + 5.2 in [5, 5.4] iff a <= 0.2
    auto r = renewal_sum_eval(law, a, a, 5.2);
    CHECK(r.value == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(r.terms.size() > 5);
    CHECK(r.terms[5] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("monte carlo sanity") {
    auto law = RoofLaw::continuous(TailModel::constant(0.5));
    auto a = box(0.0, 0.4);
    CorrelationOptions o;
    o.n_samples = 100000;
    auto self = correlation_mc(law, a, a, 0.0, o);
    CHECK(self.raw == doctest::Approx(set_measure(law, a)));
    CHECK(set_measure(law, a) == doctest::Approx(0.4));
    auto disjoint = correlation_mc(law, a, box(0.5, 0.9), 0.0, o);
    CHECK(disjoint.raw == 0.0);
    o.n_samples = 10;
    CHECK_THROWS(correlation_mc(law, a, a, 1.0, o));
}

TEST_CASE("monte carlo agrees with the renewal sum") {
    auto law = RoofLaw::continuous(TailModel::constant(0.5));
    auto a = box(0.0, 0.4), b = box(0.2, 0.6);
    CorrelationOptions o;
    o.n_samples = 1'000'000;
    o.seed = 21;
    for (double t : {100.0, 1000.0}) {
        auto mc = correlation_mc(law, a, b, t, o);
        auto ex = renewal_sum_eval(law, a, b, t);
        CHECK(std::abs(mc.raw - ex.value) <= 3.0 * mc.stderr_);
        CHECK(mc.scaled == doctest::Approx(mc.raw * std::sqrt(t)));
        CHECK(mc_agreement_check(mc, ex).pass);
    }
    // reproducible from the seed
    CHECK(correlation_mc(law, a, b, 100.0, o).raw == correlation_mc(law, a, b, 100.0, o).raw);
}

TEST_CASE("renewal sum is insensitive to the cut once the tail budget is small") {
    auto law = RoofLaw::continuous(TailModel::constant(0.5));
    auto a = box(0.0, 0.4);
    RenewalOptions o1, o2;
    o1.eps_cut = 0.02;
    o2.eps_cut = 0.01;
    auto r1 = renewal_sum_eval(law, a, a, 1000.0, o1);
    auto r2 = renewal_sum_eval(law, a, a, 1000.0, o2);
    CHECK(r1.tail_budget / r1.value < 1e-4);
    CHECK(r2.k_max >= r1.k_max);
    CHECK(std::abs(r2.value / r1.value - 1.0) <= 1e-6);
}

TEST_CASE("decomposition") {
    auto law = RoofLaw::continuous(TailModel::constant(0.5));
    auto a = box(0.0, 0.4);
    auto r = renewal_sum_eval(law, a, a, 1e4);
    auto d = decompose(r, law, 1e4, 0.25);
    CHECK(d.part_i + d.part_ii + d.part_iii == doctest::Approx(d.total).epsilon(1e-12));
    CHECK(d.total == doctest::Approx(r.scaled).epsilon(1e-12));
    CHECK(d.share_ii() >= 0.9);
    // exponent 1 - beta2 - beta3/alpha = 0 for (alpha, -1, 1) at alpha = 1/2
    auto half = decompose(r, law, 1e4, 0.125);
    CHECK(half.part_i <= std::pow(0.5, -0.1) * d.part_i);
    CHECK(half.part_i <= d.part_i);
}
