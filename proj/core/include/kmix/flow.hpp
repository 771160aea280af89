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
#include <limits>
#include <vector>

#include "kmix/dist.hpp"
#include "kmix/error.hpp"
#include "kmix/lsv.hpp"
#include "kmix/random.hpp"
#include "kmix/regvar.hpp"

namespace kmix {

// Law of the roof for an i.i.d. base.
class RoofLaw {
public:
    enum class Kind { Continuous, CeilLattice, Point };

    static RoofLaw continuous(const TailModel& model);
    // a + h * ceil(P) with P drawn from model
    static RoofLaw ceil_lattice(const TailModel& model, double a, double h);
    static RoofLaw point(double value);

    Kind kind() const noexcept { return kind_; }
    const TailModel& model() const;
    bool has_model() const noexcept { return kind_ != Kind::Point; }
    double offset() const noexcept { return a_; }
    double spacing() const noexcept { return h_; }
    double value() const noexcept { return value_; }

    double tail(double t) const;  // P(tau > t)
    double prob(double lo, double hi) const;  // P(lo <= tau <= hi)
    double minimum() const;
    // Roof value from one uniform; restricted to [lo, hi] when a window is given.
    double quantile(double u, double lo = 0.0,
                    double hi = std::numeric_limits<double>::infinity()) const;
    // Lattice version with lattice points exactly on the atoms of lattice laws.
    LatticeDist discretize(double step, double cutoff) const;
    // L(t) t^{1 - alpha}; 1 for the point law
    double scale(double t) const;

private:
    RoofLaw(Kind k, TailModel m, double a, double h, double v)
        : kind_(k), model_(m), a_(a), h_(h), value_(v) {}
    Kind kind_;
    TailModel model_;
    double a_, h_, value_;
};

// A x [a1, a2]. The base set is an interval: roof values for the i.i.d. base,
// points of X = [1/2, 1] for the LSV base.
struct ProductSet {
    double base_lo = 0.0;
    double base_hi = std::numeric_limits<double>::infinity();
    double a1 = 0.0;
    double a2 = 0.0;

    bool base_contains(double v) const noexcept { return v >= base_lo && v <= base_hi; }
    double fiber_length() const noexcept { return a2 - a1; }
};

struct MixingEstimate {
    double t = 0.0;
    double raw = 0.0;
    double scaled = 0.0;
    double stderr_ = 0.0;         // of raw
    double scaled_stderr = 0.0;
    std::uint64_t n_samples = 0;
    std::uint64_t seed = 0;
};

// Suspension over an i.i.d. sequence of roofs; coordinate i of trial j is drawn from
// counter (j, i), so any excursion is addressable without replaying the orbit.
class IidBase {
public:
    struct Point {
        std::uint64_t trial = 0;
        std::uint64_t index = 0;
        bool operator==(const Point&) const = default;
    };
    IidBase(RoofLaw law, std::uint64_t seed) : law_(std::move(law)), key_(make_key(seed, "iid-roof")) {}
    double roof(const Point& p) const { return law_.quantile(random_uniform(key_, p.trial, p.index)); }
    Point next(const Point& p) const { return {p.trial, p.index + 1}; }
    const RoofLaw& law() const noexcept { return law_; }

private:
    RoofLaw law_;
    PhiloxKey key_;
};

// The LSV map on [0, 1] with roof tau~.
class LsvBase {
public:
    using Point = double;
    LsvBase(double r, RoofSpec roof) : r_(r), roof_(std::move(roof)) {}
    double roof(double x) const { return roof_(x); }
    double next(double x) const { return lsv_map(r_, x); }

private:
    double r_;
    RoofSpec roof_;
};

// The induced system on X with the excursion sum of tau~ as roof. With an engine the
// tables are used; otherwise excursions are iterated.
class InducedBase {
public:
    using Point = double;
    InducedBase(const LsvSystem& sys, RoofSpec roof, const InducedEngine* engine = nullptr)
        : sys_(&sys), roof_(std::move(roof)), engine_(engine) {}
    double roof(double x) const;
    double next(double x) const;

private:
    const LsvSystem* sys_;
    RoofSpec roof_;
    const InducedEngine* engine_;
};

template <class Base>
struct SuspensionState {
    typename Base::Point base_point{};
    double fiber_s = 0.0;
};

// g_t: moves up the fiber, crossing roofs. laps receives the number of base steps.
template <class Base>
SuspensionState<Base> flow_advance(const Base& base, SuspensionState<Base> state, double t,
                                   std::uint64_t* laps = nullptr,
                                   std::uint64_t step_cap = 1'000'000'000) {
    if (!(t >= 0.0)) throw DomainError("flow_advance: t must be nonnegative");
    long double s = static_cast<long double>(state.fiber_s) + t;
    std::uint64_t k = 0;
    for (double h = base.roof(state.base_point); s >= h; h = base.roof(state.base_point)) {
        if (++k > step_cap) throw NumericError("flow_advance: step cap exceeded");
        s -= h;
        state.base_point = base.next(state.base_point);
    }
    state.fiber_s = static_cast<double>(s);
    if (laps) *laps = k;
    return state;
}

// Times in (0, horizon] at which the orbit of state enters A x [a1, a2]; base_value maps a
// base point to the coordinate tested against the base interval.
template <class Base, class BaseValue>
std::vector<double> hitting_times(const Base& base, SuspensionState<Base> state, const ProductSet& set,
                                  double horizon, BaseValue base_value) {
    std::vector<double> out;
    long double lap_start = -static_cast<long double>(state.fiber_s);
    auto p = state.base_point;
    while (lap_start + set.a1 <= horizon) {
        double h = base.roof(p);
        long double enter = lap_start + set.a1;
        if (set.base_contains(base_value(p)) && enter > 0.0L) out.push_back(static_cast<double>(enter));
        lap_start += h;
        p = base.next(p);
    }
    return out;
}

struct CorrelationOptions {
    std::uint64_t n_samples = 1'000'000;
    std::uint64_t seed = 1;
    std::size_t chunks = 64;
};

// nu(A & g_{-t} B) for the i.i.d. base, by sampling (x, s) uniformly on A and
// integrating the fiber coordinate exactly.
MixingEstimate correlation_mc(const RoofLaw& law, const ProductSet& a, const ProductSet& b, double t,
                              const CorrelationOptions& opt);

struct LsvCorrelationOptions {
    std::uint64_t orbit_steps = 10'000'000;
    std::uint64_t seed = 1;
    std::size_t chunks = 16;
    std::size_t batches_per_chunk = 8;
    std::size_t burn_in = 1000;
};

// Same over the induced LSV system with an affine roof, for a whole t grid, from start
// points along long induced orbits (stderr by batch means).
std::vector<MixingEstimate> correlation_lsv(const InducedEngine& engine, const RoofSpec& roof,
                                            const ProductSet& a, const ProductSet& b,
                                            const std::vector<double>& t_grid,
                                            const LsvCorrelationOptions& opt);

struct RenewalResult {
    double value = 0.0;         // nu(A & g_{-t} B)
    double scaled = 0.0;        // value * L(t) t^{1-alpha}
    double normalized = 0.0;    // scaled / (nu(A) nu(B))
    double tail_budget = 0.0;   // bound on the omitted terms, same units as value
    std::uint64_t k_max = 0;
    std::uint64_t n_t = 0;      // N(t)
    std::vector<double> terms;  // terms[k], k = 0 .. k_max
};

struct RenewalOptions {
    double eps_cut = 0.05;
    double step = 0.25;
    std::size_t max_cells = kDefaultMaxCells;
};

// Semi-analytic value of sum_k int_{a1}^{a2} mu(x in A, f^k x in B, tau_k in [t+a-b2, t+a-b1]) da.
RenewalResult renewal_sum_eval(const RoofLaw& law, const ProductSet& a, const ProductSet& b, double t,
                               const RenewalOptions& opt = {});

struct Decomposition {
    double part_i = 0.0;    // k < eps N(t)
    double part_ii = 0.0;
    double part_iii = 0.0;  // k >= N(t) / eps
    double total = 0.0;
    double eps = 0.0;
    // scaled by L(t) t^{1-alpha}
    double share_ii() const { return total > 0 ? part_ii / total : 0.0; }
};
Decomposition decompose(const RenewalResult& r, const RoofLaw& law, double t, double eps);
Decomposition decomposition_diagnostics(const RoofLaw& law, const ProductSet& a, const ProductSet& b,
                                        double t, double eps, const RenewalOptions& opt = {});

}  // namespace kmix
