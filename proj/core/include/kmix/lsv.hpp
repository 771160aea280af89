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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kmix/random.hpp"

namespace kmix {

// The LSV map x -> x (1 + (2x)^r) on [0, 1/2), x -> 2x - 1 on [1/2, 1].
double lsv_map(double r, double x);
// Left branch g(y) = y (1 + (2y)^r).
double lsv_left(double r, double y);

// Fatou coordinate near the neutral fixed point: with w = (2y)^{-r} / r,
// psi(w(g(y))) = psi(w(y)) - 1 up to terms of order w^{-5}.
class FatouCoordinate {
public:
    explicit FatouCoordinate(double r);
    double r() const noexcept { return r_; }
    double w_of_y(double y) const;
    double y_of_w(double w) const;
    double psi(double w) const;
    double dpsi(double w) const;
    double psi_inverse(double u) const;
    // Antiderivative of y(w) psi'(w) in w, so that sum_i y_i ~ its increments.
    double y_dpsi_antiderivative(double w) const;

private:
    double r_;
    double b_;
    std::array<double, 4> c_;
};

// Branch boundaries: y_0 = 1, y_{n+1} = left preimage of y_n, x_{n+1} = (1 + y_n) / 2.
// X_n = (x_{n+1}, x_n] is the set where the first return time to X = [1/2, 1] is n.
class LsvSystem {
public:
    LsvSystem(double r, std::size_t n_max);

    double r() const noexcept { return r_; }
    std::size_t n_max() const noexcept { return n_max_; }
    double y(std::size_t n) const { return y_.at(n); }
    double x(std::size_t n) const { return x_.at(n); }  // n >= 1
    std::span<const double> ys() const noexcept { return y_; }
    double max_residual() const;
    const FatouCoordinate& fatou() const noexcept { return fatou_; }

    // j with y in (y_{j+1}, y_j] for y in (0, 1]; returned as double since deep levels
    // come from the Fatou coordinate and may exceed any integer type.
    double level(double y) const;

private:
    double r_;
    std::size_t n_max_;
    std::vector<double> y_;  // y_0 .. y_{n_max}
    std::vector<double> x_;  // x_0 (unused) .. x_{n_max + 1}
    FatouCoordinate fatou_;
    double psi_edge_;  // psi(w(y_{n_max}))
};

LsvSystem boundaries(double r, std::size_t n_max);

// First return time to X by table lookup. Throws NumericError at x = 1/2.
std::uint64_t return_time(const LsvSystem& sys, double x);
// Induced map by iterating the LSV map R(x) times (step cap 1e7).
double induced_map(const LsvSystem& sys, double x);

struct RoofSpec {
    enum class Kind { Affine, Table };
    Kind kind = Kind::Affine;
    double p = 1.0;  // Affine: p + q x
    double q = 0.0;
    std::vector<double> breakpoints;  // Table: piecewise linear through (breakpoints, values)
    std::vector<double> values;
    double holder = 1.0;

    static RoofSpec affine(double p, double q);
    static RoofSpec table(std::vector<double> breakpoints, std::vector<double> values,
                          double holder = 1.0);
    double operator()(double x) const;
    double infimum(double lo, double hi) const;
};

// Birkhoff sum of the roof along one excursion, by iteration with compensated summation.
double induced_roof(const LsvSystem& sys, const RoofSpec& roof, double x);

// Fast induced map built from per-level Chebyshev tables of the excursion exit point
// and of the sum of the visited points. Deep levels are handled in Fatou coordinates.
class InducedEngine {
public:
    struct Step {
        double next;          // f(x)
        std::uint64_t ret;    // R(x), saturated
        double point_sum;     // x + f~(x) + ... + f~^{R-1}(x)
    };

    explicit InducedEngine(const LsvSystem& sys, std::size_t nodes = 32);

    const LsvSystem& system() const noexcept { return *sys_; }
    Step step(double x) const;
    double affine_roof(const Step& s, const RoofSpec& roof) const {
        return roof.p * static_cast<double>(s.ret) + roof.q * s.point_sum;
    }
    // Point x in X_n with f(x) = target.
    double inverse_branch(std::uint64_t n, double target) const;
    std::size_t table_levels() const noexcept { return levels_; }

    // Largest deviation from direct iteration over n random points of X.
    struct Validation {
        double max_next_error = 0.0;
        double max_sum_error = 0.0;
        std::uint64_t return_mismatches = 0;
    };
    Validation validate(std::size_t n, std::uint64_t seed) const;

private:
    double eval(std::size_t j, std::size_t which, double theta) const;
    double exit_point(std::size_t j, double y) const;
    double level_theta(std::size_t j, double y) const;

    const LsvSystem* sys_;
    std::size_t nodes_;
    std::size_t levels_;  // tables for levels 1 .. levels_ - 1; level 0 is the identity
    std::vector<double> coef_;      // [level][which][m]
    std::vector<std::uint8_t> deg_;  // effective degree + 1 per (level, which)
};

// Measure on X = [1/2, 1] given by its masses on equal bins.
struct BinnedMeasure {
    std::vector<double> mass;
    double lo = 0.5, hi = 1.0;
    double total() const;
};
double total_variation(const BinnedMeasure& a, const BinnedMeasure& b);

// Statistics of a long induced orbit, accumulated over independent chunks.
struct OrbitStats {
    std::uint64_t steps = 0;
    BinnedMeasure visits;                // normalized visit frequencies
    std::vector<std::uint64_t> return_hist;  // counts of R = n for n < size, last entry R >= size - 1
    double tail_fraction(std::uint64_t n) const;  // fraction of steps with R > n
};

struct OrbitOptions {
    std::uint64_t steps = 1'000'000;
    std::size_t bins = 256;
    std::size_t max_return = 4096;
    std::size_t chunks = 16;
    std::size_t burn_in = 1000;
    std::uint64_t seed = 1;
};
OrbitStats birkhoff_orbit(const InducedEngine& engine, const OrbitOptions& opt);

struct UlamResult {
    BinnedMeasure measure;
    std::size_t iterations = 0;
    double residual = 0.0;
};
UlamResult ulam_measure(const InducedEngine& engine, std::size_t bins, std::size_t max_iter = 10000,
                        double tol = 1e-15);

// Return-time sequence of one orbit started at a Philox-drawn point.
std::vector<std::uint32_t> return_sequence(const InducedEngine& engine, std::size_t n,
                                           std::uint64_t seed, std::size_t burn_in = 1000);

struct QiOptions {
    std::size_t depth = 1;
    std::size_t lag = 1;
    std::uint32_t cap = 64;        // return times >= cap form one class
    double min_expected = 1000.0;  // pairs with a smaller product estimate are skipped
    double level = 0.01;           // simultaneous (Bonferroni) level of the interval
};
struct QiReport {
    double k_hat = 0.0;
    double ci_lo = 0.0;  // simultaneous interval for the max ratio
    double ci_hi = 0.0;
    std::size_t pairs_used = 0;
    std::size_t pairs_skipped = 0;
    std::uint64_t n = 0;
};
// K = max mu(C1 & f^-lag C2) / (mu(C1) mu(C2)) over depth-`depth` cylinders.
QiReport qi_constant(std::span<const std::uint32_t> returns, const QiOptions& opt);
// Same with C1 = C2 = {R > threshold}.
QiReport qi_large(std::span<const std::uint32_t> returns, std::uint32_t threshold, std::size_t lag,
                  double level = 0.01);
// mu(C1 & f^-l1 C2 & f^-(l1+l2) C3) / (mu(C1) mu(C2) mu(C3)) for depth-one cylinders.
struct TripleRatio {
    double ratio = 0.0;
    double stderr_ = 0.0;
    std::uint64_t count = 0;
};
TripleRatio qi_triple(std::span<const std::uint32_t> returns, std::array<std::uint32_t, 3> cyl,
                      std::size_t l1, std::size_t l2);
// Fisher-Yates shuffle driven by a counter-based stream.
std::vector<std::uint32_t> shuffled(std::span<const std::uint32_t> seq, std::uint64_t seed);

// Point of period p for the induced map with the given return-time itinerary, and the
// flow period sum of roofs along it.
struct PeriodicOrbit {
    std::vector<double> points;
    double period = 0.0;
};
PeriodicOrbit periodic_orbit(const InducedEngine& engine, const RoofSpec& roof,
                             std::span<const std::uint64_t> itinerary);

}  // namespace kmix
