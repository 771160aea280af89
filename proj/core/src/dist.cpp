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


#include "kmix/dist.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <mutex>
#include <numeric>
#include <string>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include "kmix/error.hpp"

namespace kmix {
namespace {

// Only fftw_execute is thread safe.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    explicit FftwBuffer(std::size_t n) : data(fftw_alloc_real(n)), size(n) {
        if (!data) throw ResourceError("fftw_alloc_real failed", n);
        std::fill(data, data + n, 0.0);
    }
    ~FftwBuffer() { fftw_free(data); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    double* data;
    std::size_t size;
};

struct Plan {
    Plan(fftw_plan p) : plan(p) {}
    ~Plan() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;
    fftw_plan plan;
};

Plan make_r2c(int n, double* buf) {
    std::lock_guard lock(planner_mutex());
    return Plan(fftw_plan_dft_r2c_1d(n, buf, reinterpret_cast<fftw_complex*>(buf), FFTW_ESTIMATE));
}

Plan make_c2r(int n, double* buf) {
    std::lock_guard lock(planner_mutex());
    return Plan(fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(buf), buf, FFTW_ESTIMATE));
}

// out[m] = sum_j a[j] b[m - j] for m < n_out
void fft_convolve(std::span<const double> a, std::span<const double> b, bool square,
                  std::size_t n_out, double* out, std::size_t max_fft) {
    std::size_t need = a.size() + b.size() - 1;
    std::size_t n = std::bit_ceil(need);
    if (n > max_fft || n > static_cast<std::size_t>(std::numeric_limits<int>::max()))
        throw ResourceError("FFT length " + std::to_string(n) + " exceeds the budget", n);
    std::size_t padded = 2 * (n / 2 + 1);
    FftwBuffer fa(padded);
    std::copy(a.begin(), a.end(), fa.data);
    Plan fwd_a = make_r2c(static_cast<int>(n), fa.data);
    fftw_execute(fwd_a.plan);
    auto* ca = reinterpret_cast<fftw_complex*>(fa.data);
    const std::size_t nc = n / 2 + 1;
    if (square) {
        for (std::size_t i = 0; i < nc; ++i) {
            double re = ca[i][0], im = ca[i][1];
            ca[i][0] = re * re - im * im;
            ca[i][1] = 2.0 * re * im;
        }
    } else {
        FftwBuffer fb(padded);
        std::copy(b.begin(), b.end(), fb.data);
        Plan fwd_b = make_r2c(static_cast<int>(n), fb.data);
        fftw_execute(fwd_b.plan);
        auto* cb = reinterpret_cast<fftw_complex*>(fb.data);
        for (std::size_t i = 0; i < nc; ++i) {
            double re = ca[i][0] * cb[i][0] - ca[i][1] * cb[i][1];
            double im = ca[i][0] * cb[i][1] + ca[i][1] * cb[i][0];
            ca[i][0] = re;
            ca[i][1] = im;
        }
    }
    Plan inv = make_c2r(static_cast<int>(n), fa.data);
    fftw_execute(inv.plan);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t m = 0; m < n_out; ++m) out[m] = fa.data[m] * scale;
}

void direct_convolve(std::span<const double> a, std::span<const double> b, std::size_t n_out,
                     double* out) {
    std::fill(out, out + n_out, 0.0);
    for (std::size_t i = 0; i < a.size() && i < n_out; ++i) {
        if (a[i] == 0.0) continue;
        std::size_t jmax = std::min(b.size(), n_out - i);
        for (std::size_t j = 0; j < jmax; ++j) out[i + j] += a[i] * b[j];
    }
}

long double sum_of(std::span<const double> v) {
    long double s = 0;
    for (double x : v) s += x;
    return s;
}

double last_center(const LatticeDist& d) {
    return d.weights.empty() ? d.origin - d.step : d.center(d.size() - 1);
}

// Moves the cells with centers above upper into the overflow.
LatticeDist truncate(const LatticeDist& d, double upper) {
    if (!(upper < last_center(d) - 1e-9 * d.step)) return d;
    LatticeDist out = d;
    double idx = std::floor((upper - d.origin) / d.step + 1e-9);
    std::size_t keep = idx < 0 ? 0 : static_cast<std::size_t>(idx) + 1;
    keep = std::min(keep, d.size());
    long double dropped = 0;
    for (std::size_t i = keep; i < d.size(); ++i) dropped += d.weights[i];
    out.weights.resize(keep);
    out.overflow_mass = static_cast<double>(d.overflow_mass + dropped);
    out.window_hi = out.weights.empty() ? d.origin - 0.5 * d.step : last_center(out) + 0.5 * d.step;
    return out;
}

std::size_t checked_cells(double span, double step, std::size_t max_cells) {
    double n = std::ceil(span / step) + 1.0;
    if (!(n <= static_cast<double>(max_cells)))
        throw ResourceError("lattice of " + std::to_string(n) + " cells exceeds the budget",
                            static_cast<std::size_t>(std::min(n, 1e18)));
    return static_cast<std::size_t>(std::max(n, 1.0));
}

std::complex<double> slow_complex(const SlowPart& s, std::complex<double> z) {
    if (s.kind == SlowPart::Kind::Constant) return s.c;
    return s.c * std::pow(1.0 + std::log(z), s.beta);
}

}  // namespace

LatticeDist LatticeDist::from_weights(double origin, double step, std::vector<double> weights,
                                      double overflow_mass, bool atomic) {
    if (!(step > 0)) throw DomainError("lattice step must be positive");
    for (double w : weights)
        if (!(w >= 0)) throw DomainError("lattice weights must be nonnegative");
    LatticeDist d;
    d.origin = origin;
    d.step = step;
    d.weights = std::move(weights);
    d.overflow_mass = overflow_mass;
    d.window_hi = last_center(d) + 0.5 * step;
    d.atomic = atomic;
    return d;
}

LatticeDist LatticeDist::point_mass(double x, double step) {
    return from_weights(x, step, {1.0}, 0.0, true);
}

double LatticeDist::grid_mass() const { return static_cast<double>(sum_of(weights)); }

double LatticeDist::mean_on_grid() const {
    long double s = 0;
    for (std::size_t i = 0; i < size(); ++i) s += weights[i] * static_cast<long double>(center(i));
    return static_cast<double>(s);
}

LatticeDist discretize(const TailModel& model, double step, double cutoff, DiscretizeRule rule,
                       std::size_t max_cells) {
    if (!(step > 0)) throw DomainError("discretize: step must be positive");
    const double t0 = model.edge();
    if (!(cutoff > model.t_min()) || !(cutoff > t0))
        throw DomainError("discretize: cutoff must exceed the edge of the law");
    LatticeDist d;
    d.origin = t0;
    d.step = step;
    if (rule == DiscretizeRule::CdfIncrement) {
        double last = std::max(0.0, std::ceil((cutoff - t0) / step - 0.5));
        std::size_t n = checked_cells(last * step, step, max_cells);
        d.weights.resize(n);
        double prev = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            double hi = (i + 1 == n) ? cutoff : t0 + (static_cast<double>(i) + 0.5) * step;
            double t = model.tail(hi);
            d.weights[i] = std::max(0.0, prev - t);
            prev = t;
        }
        d.overflow_mass = model.tail(cutoff);
        d.window_hi = cutoff;
        return d;
    }
    std::size_t n = checked_cells(cutoff - t0, step, max_cells);
    d.weights.assign(n, 0.0);
    using boost::math::quadrature::gauss;
    double t_left = 1.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double a = t0 + static_cast<double>(i) * step;
        double b = a + step;
        double t_right = model.tail(b);
        double mass = t_left - t_right;
        // Geometric panels keep the rule exact enough where the tail spans decades.
        auto panel = [&](double lo, double hi) {
            return gauss<double, 8>::integrate([&](double x) { return model.tail(x) - t_right; },
                                               lo, hi);
        };
        double excess = 0.0;
        if (a > 0 && b > 1.25 * a) {
            int m = static_cast<int>(std::ceil(std::log(b / a) / std::log(1.25)));
            double q = std::pow(b / a, 1.0 / m);
            double lo = a;
            for (int j = 1; j <= m; ++j) {
                double hi = (j == m) ? b : a * std::pow(q, j);
                excess += panel(lo, hi);
                lo = hi;
            }
        } else {
            excess = panel(a, b);
        }
        double right = std::clamp(excess / step, 0.0, mass);
        d.weights[i] += mass - right;
        d.weights[i + 1] += right;
        t_left = t_right;
    }
    d.overflow_mass = t_left;
    d.window_hi = last_center(d) + 0.5 * step;
    return d;
}

LatticeDist discretize_cdf(const std::function<double(double)>& cdf, double origin, double step,
                           double cutoff, std::size_t max_cells) {
    if (!(step > 0)) throw DomainError("discretize: step must be positive");
    if (!(cutoff > origin)) throw DomainError("discretize: cutoff must exceed the origin");
    double last = std::max(0.0, std::ceil((cutoff - origin) / step - 0.5));
    std::size_t n = checked_cells(last * step, step, max_cells);
    LatticeDist d;
    d.origin = origin;
    d.step = step;
    d.weights.resize(n);
    double prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double hi = (i + 1 == n) ? cutoff : origin + (static_cast<double>(i) + 0.5) * step;
        double c = cdf(hi);
        d.weights[i] = std::max(0.0, c - prev);
        prev = c;
    }
    d.overflow_mass = std::max(0.0, 1.0 - prev);
    d.window_hi = cutoff;
    return d;
}

LatticeDist discretize_ceil(const TailModel& model, double a, double h, double cutoff,
                            std::size_t max_cells) {
    if (!(h > 0)) throw DomainError("discretize_ceil: h must be positive");
    double n0 = std::max(1.0, std::ceil(model.edge()));
    double n1 = std::floor((cutoff - a) / h + 1e-12);
    if (!(n1 >= n0)) throw DomainError("discretize_ceil: cutoff below the support");
    std::size_t n = checked_cells((n1 - n0) * h, h, max_cells);
    LatticeDist d;
    d.origin = a + h * n0;
    d.step = h;
    d.weights.resize(n);
    double prev = model.tail(n0 - 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        double t = model.tail(n0 + static_cast<double>(i));
        d.weights[i] = std::max(0.0, prev - t);
        prev = t;
    }
    d.overflow_mass = prev;
    d.window_hi = last_center(d) + 0.5 * h;
    d.atomic = true;
    return d;
}

LatticeDist convolve(const LatticeDist& x, const LatticeDist& y, double upper_center,
                     ConvolveMethod method, std::size_t max_fft) {
    if (std::abs(x.step - y.step) > 1e-12 * x.step)
        throw DomainError("convolve: lattice steps differ");
    const double h = x.step;
    LatticeDist out;
    out.origin = x.origin + y.origin;
    out.step = h;
    out.atomic = x.atomic && y.atomic;
    const double base_overflow = 1.0 - (1.0 - x.overflow_mass) * (1.0 - y.overflow_mass);
    if (x.weights.empty() || y.weights.empty()) {
        out.overflow_mass = base_overflow + x.grid_mass() * y.grid_mass();
        out.window_hi = out.origin - 0.5 * h;
        return out;
    }
    std::size_t full = x.size() + y.size() - 1;
    std::size_t n_out = full;
    if (upper_center < out.origin + static_cast<double>(full - 1) * h) {
        double idx = std::floor((upper_center - out.origin) / h + 1e-9);
        n_out = idx < 0 ? 0 : std::min(full, static_cast<std::size_t>(idx) + 1);
    }
    const long double mass_product = sum_of(x.weights) * sum_of(y.weights);
    if (n_out == 0) {
        out.overflow_mass = static_cast<double>(base_overflow + mass_product);
        out.window_hi = out.origin - 0.5 * h;
        return out;
    }
    std::span<const double> a(x.weights.data(), std::min(x.size(), n_out));
    std::span<const double> b(y.weights.data(), std::min(y.size(), n_out));
    out.weights.assign(n_out, 0.0);
    bool direct = method == ConvolveMethod::Direct ||
                  (method == ConvolveMethod::Auto &&
                   static_cast<double>(std::min(a.size(), b.size())) *
                           static_cast<double>(n_out) <= 65536.0);
    if (direct) {
        direct_convolve(a, b, n_out, out.weights.data());
    } else {
        bool square = (&x == &y) ||
                      (x.weights.data() == y.weights.data() && x.size() == y.size());
        fft_convolve(a, b, square, n_out, out.weights.data(), max_fft);
    }
    for (double& w : out.weights) w = std::max(w, 0.0);
    long double dropped = mass_product - sum_of(out.weights);
    out.overflow_mass = static_cast<double>(base_overflow + std::max(dropped, 0.0L));
    out.window_hi = last_center(out) + 0.5 * h;
    return out;
}

LatticeDist convolve_power(const LatticeDist& d, std::uint64_t k, ConvolveMethod method,
                           std::size_t max_fft) {
    // A law with no overflow has a complete k-fold sum; otherwise the sum is only
    // known up to the window of d.
    const double upper = d.overflow_mass > 0 ? last_center(d) : static_cast<double>(k) * last_center(d);
    return convolve_power(d, k, upper, method, max_fft);
}

LatticeDist convolve_power(const LatticeDist& d, std::uint64_t k, double upper_center,
                           ConvolveMethod method, std::size_t max_fft) {
    if (k == 0) throw DomainError("convolve_power: k must be at least 1");
    LatticeDist base = truncate(d, upper_center);
    LatticeDist result;
    bool have = false;
    while (k > 0) {
        if (k & 1) {
            result = have ? convolve(result, base, upper_center, method, max_fft) : base;
            have = true;
        }
        k >>= 1;
        if (k > 0) base = convolve(base, base, upper_center, method, max_fft);
    }
    return result;
}

double interval_prob(const LatticeDist& d, double lo, double hi) {
    if (!(lo <= hi)) throw DomainError("interval_prob: lo must not exceed hi");
    long double p = 0;
    if (d.atomic) {
        for (std::size_t i = 0; i < d.size(); ++i) {
            double c = d.center(i);
            if (c > hi) break;
            if (c >= lo) p += d.weights[i];
        }
    } else if (!d.weights.empty()) {
        const double h = d.step;
        const double e0 = d.origin - 0.5 * h;
        double first = std::floor((std::max(lo, e0) - e0) / h);
        std::size_t i0 = first < 0 ? 0 : static_cast<std::size_t>(first);
        for (std::size_t i = i0; i < d.size(); ++i) {
            double a = e0 + static_cast<double>(i) * h;
            if (a >= hi) break;
            double b = (i + 1 == d.size()) ? d.window_hi : a + h;
            double width = b - a;
            double ov = std::min(b, hi) - std::max(a, lo);
            if (ov <= 0 || width <= 0) continue;
            p += d.weights[i] * std::min(1.0, ov / width);
        }
    }
    if (std::isinf(hi) && hi > 0) p += d.overflow_mass;
    return static_cast<double>(p);
}

double tail_prob_dist(const LatticeDist& d, double t) {
    return interval_prob(d, t, std::numeric_limits<double>::infinity());
}

CumulativeView::CumulativeView(const LatticeDist& d)
    : lo_(d.origin - 0.5 * d.step), hi_(d.window_hi), step_(d.step), weights_(d.weights),
      atomic_(d.atomic), origin_(d.origin) {
    const std::size_t n = weights_.size();
    if (atomic_) {
        // edges sit on the atoms; integrated CDF is piecewise linear between them
        prefix_.assign(n + 1, 0.0L);
        iprefix_.assign(n + 1, 0.0L);
        for (std::size_t i = 0; i < n; ++i) {
            prefix_[i + 1] = prefix_[i] + weights_[i];
            iprefix_[i + 1] = iprefix_[i] + (i ? step_ * prefix_[i] : 0.0L);
        }
        return;
    }
    last_width_ = n ? hi_ - (lo_ + static_cast<double>(n - 1) * step_) : 0.0;
    prefix_.assign(n + 1, 0.0L);
    iprefix_.assign(n + 1, 0.0L);
    for (std::size_t i = 0; i < n; ++i) {
        double width = (i + 1 == n) ? last_width_ : step_;
        prefix_[i + 1] = prefix_[i] + weights_[i];
        iprefix_[i + 1] = iprefix_[i] + width * (prefix_[i] + 0.5L * weights_[i]);
    }
}

double CumulativeView::operator()(double x) const {
    const std::size_t n = weights_.size();
    if (atomic_) {
        if (n == 0 || x < origin_) return 0.0;
        double idx = std::floor((x - origin_) / step_ + 1e-9);
        return static_cast<double>(prefix_[std::min(n, static_cast<std::size_t>(idx) + 1)]);
    }
    if (n == 0 || x <= lo_) return 0.0;
    if (x >= hi_) return static_cast<double>(prefix_[n]);
    std::size_t i = std::min(n - 1, static_cast<std::size_t>((x - lo_) / step_));
    double width = (i + 1 == n) ? last_width_ : step_;
    double frac = std::clamp((x - (lo_ + static_cast<double>(i) * step_)) / width, 0.0, 1.0);
    return static_cast<double>(prefix_[i] + weights_[i] * frac);
}

long double CumulativeView::integrated(double x) const {
    const std::size_t n = weights_.size();
    if (atomic_) {
        if (n == 0 || x <= origin_) return 0.0;
        double idx = std::floor((x - origin_) / step_);
        std::size_t i = std::min(n - 1, static_cast<std::size_t>(idx));
        double base = origin_ + static_cast<double>(i) * step_;
        return iprefix_[i + 1] + (x - base) * prefix_[i + 1];
    }
    if (n == 0 || x <= lo_) return 0.0;
    if (x >= hi_) return iprefix_[n] + (x - hi_) * prefix_[n];
    std::size_t i = std::min(n - 1, static_cast<std::size_t>((x - lo_) / step_));
    double width = (i + 1 == n) ? last_width_ : step_;
    double dx = std::clamp(x - (lo_ + static_cast<double>(i) * step_), 0.0, width);
    double frac = dx / width;
    return iprefix_[i] + dx * (prefix_[i] + 0.5L * weights_[i] * frac);
}

double sup_unit_interval(const LatticeDist& d) {
    if (d.step > 1.0) throw DomainError("sup_unit_interval: step must be at most 1");
    if (d.weights.empty()) return 0.0;
    const std::size_t n = d.size();
    double best = 0.0;
    if (d.atomic) {
        // closed windows starting at an atom
        const auto per = static_cast<std::size_t>(std::floor(1.0 / d.step + 1e-9));
        long double run = 0;
        for (std::size_t i = 0; i < n; ++i) run += (i <= per ? d.weights[i] : 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            best = std::max(best, static_cast<double>(run));
            run -= d.weights[i];
            if (i + per + 1 < n) run += d.weights[i + per + 1];
        }
        return best;
    }
    CumulativeView cdf(d);
    auto probe = [&](double a) { best = std::max(best, cdf(a + 1.0) - cdf(a)); };
    for (std::size_t i = 0; i <= n; ++i) {
        double e = (i == n) ? cdf.upper() : cdf.lower() + static_cast<double>(i) * d.step;
        probe(e);
        probe(e - 1.0);
    }
    return best;
}

double sample_tail(const TailModel& model, RandomStream& rng) {
    return model.tail_quantile(rng.uniform());
}

std::complex<double> empirical_cf(std::span<const double> samples, double s) {
    if (samples.empty()) throw DomainError("empirical_cf: no samples");
    long double re = 0, im = 0;
    for (double x : samples) {
        re += std::cos(s * x);
        im += std::sin(s * x);
    }
    const long double n = static_cast<long double>(samples.size());
    return {static_cast<double>(re / n), static_cast<double>(im / n)};
}

std::complex<double> exact_cf(const TailModel& model, double s) {
    if (s == 0.0) return 1.0;
    if (s < 0.0) return std::conj(exact_cf(model, -s));
    // E e^{isP} = e^{is t0} (1 - int_0^inf e^{-v} g(t0 + i v / s) dv), g the tail beyond t0
    const double t0 = model.edge();
    const double alpha = model.alpha();
    auto g = [&](double v) {
        std::complex<double> z(t0, v / s);
        return slow_complex(model.slow(), z) * std::pow(z, -alpha);
    };
    boost::math::quadrature::exp_sinh<double> integrator;
    double re = integrator.integrate([&](double v) { return std::exp(-v) * g(v).real(); }, 0.0,
                                     std::numeric_limits<double>::infinity(), 1e-12);
    double im = integrator.integrate([&](double v) { return std::exp(-v) * g(v).imag(); }, 0.0,
                                     std::numeric_limits<double>::infinity(), 1e-12);
    return std::polar(1.0, s * t0) * (1.0 - std::complex<double>(re, im));
}

}  // namespace kmix
