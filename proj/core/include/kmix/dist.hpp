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

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "kmix/random.hpp"
#include "kmix/regvar.hpp"

namespace kmix {

inline constexpr std::size_t kDefaultMaxCells = std::size_t{1} << 27;

// Probability law on the lattice origin + step * Z.
//
// Cell i carries the mass of [c_i - step/2, c_i + step/2) with c_i = origin + i * step,
// except that the last cell ends at window_hi. Mass beyond window_hi is kept in
// overflow_mass and never placed on the grid.
struct LatticeDist {
    double origin = 0.0;
    double step = 1.0;
    std::vector<double> weights;
    double overflow_mass = 0.0;
    double window_hi = 0.5;
    // Atomic laws keep their mass on the lattice points themselves (step CDF).
    bool atomic = false;

    static LatticeDist from_weights(double origin, double step, std::vector<double> weights,
                                    double overflow_mass = 0.0, bool atomic = false);
    static LatticeDist point_mass(double x, double step = 1.0);

    std::size_t size() const noexcept { return weights.size(); }
    double center(std::size_t i) const noexcept { return origin + static_cast<double>(i) * step; }
    double grid_mass() const;
    double total_mass() const { return grid_mass() + overflow_mass; }
    double mean_on_grid() const;
};

enum class DiscretizeRule {
    CdfIncrement,   // cell mass = CDF increment over the cell
    MeanPreserving  // each mass between adjacent nodes split so the first moment is kept
};

// Lattice version of the TailModel law, origin at the model's edge and window ending
// at cutoff. With MeanPreserving the nodes still start at the edge; the last node
// sits at or just past cutoff.
LatticeDist discretize(const TailModel& model, double step, double cutoff,
                       DiscretizeRule rule = DiscretizeRule::CdfIncrement,
                       std::size_t max_cells = kDefaultMaxCells);

// CdfIncrement discretization of an arbitrary CDF, first cell centered at origin.
LatticeDist discretize_cdf(const std::function<double(double)>& cdf, double origin, double step,
                           double cutoff, std::size_t max_cells = kDefaultMaxCells);

// Exact (atomic) law of a + h * ceil(P) for P drawn from model, truncated to values <= cutoff.
LatticeDist discretize_ceil(const TailModel& model, double a, double h, double cutoff,
                            std::size_t max_cells = kDefaultMaxCells);

enum class ConvolveMethod { Auto, Fft, Direct };

// Law of X + Y restricted to centers <= upper_center; the rest joins the overflow.
// Both inputs must share the step.
LatticeDist convolve(const LatticeDist& x, const LatticeDist& y,
                     double upper_center = std::numeric_limits<double>::infinity(),
                     ConvolveMethod method = ConvolveMethod::Auto,
                     std::size_t max_fft = kDefaultMaxCells);

// k-fold convolution power by repeated squaring. The window defaults to that of d,
// or to the whole support of the sum when d has no overflow mass.
LatticeDist convolve_power(const LatticeDist& d, std::uint64_t k,
                           ConvolveMethod method = ConvolveMethod::Auto,
                           std::size_t max_fft = kDefaultMaxCells);
LatticeDist convolve_power(const LatticeDist& d, std::uint64_t k, double upper_center,
                           ConvolveMethod method = ConvolveMethod::Auto,
                           std::size_t max_fft = kDefaultMaxCells);

// Grid mass in [lo, hi] with boundary cells prorated; overflow counts only for hi = +inf.
double interval_prob(const LatticeDist& d, double lo, double hi);
// Grid mass above t plus the overflow.
double tail_prob_dist(const LatticeDist& d, double t);

// Grid CDF with O(1) queries, prorated within cells unless the law is atomic.
class CumulativeView {
public:
    explicit CumulativeView(const LatticeDist& d);
    double operator()(double x) const;
    // Integral of the grid CDF over (-inf, x].
    long double integrated(double x) const;
    double lower() const noexcept { return lo_; }
    double upper() const noexcept { return hi_; }

private:
    double lo_, hi_, step_, last_width_ = 0.0;
    std::vector<long double> prefix_;    // mass below edge i
    std::vector<long double> iprefix_;   // integrated CDF at edge i
    std::vector<double> weights_;
    bool atomic_;
    double origin_;
};

// sup over a of P(a <= X <= a + 1), scanning every breakpoint of the window function.
double sup_unit_interval(const LatticeDist& d);

double sample_tail(const TailModel& model, RandomStream& rng);
std::complex<double> empirical_cf(std::span<const double> samples, double s);
// E exp(i s P) by quadrature along a rotated contour.
std::complex<double> exact_cf(const TailModel& model, double s);

}  // namespace kmix
