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


#include "kmix/lsv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

#include <boost/math/distributions/normal.hpp>

#include "kmix/error.hpp"
#include "kmix/parallel.hpp"

namespace kmix {
namespace {

constexpr std::uint64_t kStepCap = 10'000'000;
constexpr double kJustAboveHalf = 0.5 + 0x1.0p-53;

// Neumaier summation
struct CompensatedSum {
    double sum = 0.0, comp = 0.0;
    void add(double v) {
        double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

std::uint64_t saturate(double v) {
    constexpr double top = 1.8e19;
    return v >= top ? std::numeric_limits<std::uint64_t>::max() : static_cast<std::uint64_t>(v);
}

double z_bonferroni(double level, std::size_t m) {
    boost::math::normal n01;
    return boost::math::quantile(boost::math::complement(n01, level / (2.0 * std::max<std::size_t>(m, 1))));
}

}  // namespace

double lsv_left(double r, double y) { return y * (1.0 + std::pow(2.0 * y, r)); }

double lsv_map(double r, double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("lsv_map: x must lie in [0, 1]");
    return x < 0.5 ? lsv_left(r, x) : 2.0 * x - 1.0;
}

FatouCoordinate::FatouCoordinate(double r) : r_(r) {
    if (!(r > 1.0)) throw DomainError("LSV exponent r must exceed 1");
    const double r2 = r * r, r3 = r2 * r, r4 = r3 * r, r5 = r4 * r;
    b_ = (r + 1.0) / (2.0 * r);
    c_[0] = (2.0 * r2 + 3.0 * r + 1.0) / (12.0 * r2);
    c_[1] = (-3.0 * r3 - 7.0 * r2 - 5.0 * r - 1.0) / (48.0 * r3);
    c_[2] = (76.0 * r4 + 255.0 * r3 + 295.0 * r2 + 135.0 * r + 19.0) / (2160.0 * r4);
    c_[3] = (-122.0 * r5 - 544.0 * r4 - 1155.0 * r3 - 305.0 * r2 - 799.0 * r + 213.0) /
            (5760.0 * r5);
}

double FatouCoordinate::w_of_y(double y) const { return std::pow(2.0 * y, -r_) / r_; }

double FatouCoordinate::y_of_w(double w) const { return 0.5 * std::pow(r_ * w, -1.0 / r_); }

double FatouCoordinate::psi(double w) const {
    const double v = 1.0 / w;
    return w + b_ * std::log(w) + v * (c_[0] + v * (c_[1] + v * (c_[2] + v * c_[3])));
}

double FatouCoordinate::dpsi(double w) const {
    const double v = 1.0 / w;
    return 1.0 + b_ * v - v * v * (c_[0] + v * (2.0 * c_[1] + v * (3.0 * c_[2] + v * 4.0 * c_[3])));
}

double FatouCoordinate::psi_inverse(double u) const {
    double w = u - b_ * std::log(std::max(u, 2.0));
    for (int it = 0; it < 60; ++it) {
        double dw = (psi(w) - u) / dpsi(w);
        w -= dw;
        if (std::abs(dw) <= 4e-16 * w) return w;
    }
    throw NumericError("Fatou coordinate inversion did not converge");
}

double FatouCoordinate::y_dpsi_antiderivative(double w) const {
    const double a = 1.0 / r_;
    const double k = 0.5 * std::pow(r_, -a);
    const double wa = std::pow(w, -a);
    const double v = 1.0 / w;
    double s = w / (1.0 - a) - b_ / a;
    double vk = v;
    const double coef[4] = {-c_[0], -2.0 * c_[1], -3.0 * c_[2], -4.0 * c_[3]};
    for (int i = 0; i < 4; ++i) {
        s += coef[i] * vk / (-(i + 1) - a);
        vk *= v;
    }
    return k * wa * s;
}

LsvSystem::LsvSystem(double r, std::size_t n_max) : r_(r), n_max_(n_max), fatou_(r) {
    if (n_max < 2) throw DomainError("boundaries: n_max must be at least 2");
    y_.resize(n_max + 1);
    x_.assign(n_max + 2, 0.0);
    y_[0] = 1.0;
    y_[1] = 0.5;
    for (std::size_t n = 1; n < n_max; ++n) {
        const double target = y_[n];
        double lo = 0.0, hi = target;
        for (int it = 0; it < 2000; ++it) {
            double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            (lsv_left(r, mid) < target ? lo : hi) = mid;
        }
        double best = std::abs(lsv_left(r, lo) - target) <= std::abs(lsv_left(r, hi) - target) ? lo : hi;
        if (!(best > 0.0 && best < target)) throw NumericError("boundaries: bisection failed");
        y_[n + 1] = best;
    }
    for (std::size_t n = 0; n <= n_max; ++n) x_[n + 1] = 0.5 * (1.0 + y_[n]);
    psi_edge_ = fatou_.psi(fatou_.w_of_y(y_[n_max]));
}

double LsvSystem::max_residual() const {
    double m = 0.0;
    for (std::size_t n = 0; n < n_max_; ++n) m = std::max(m, std::abs(lsv_left(r_, y_[n + 1]) - y_[n]));
    return m;
}

double LsvSystem::level(double y) const {
    if (!(y > 0.0 && y <= 1.0)) throw NumericError("level: point is glued to the neutral fixed point");
    if (y > y_[n_max_]) {
        auto it = std::partition_point(y_.begin(), y_.end(), [&](double v) { return v >= y; });
        return static_cast<double>(it - y_.begin() - 1);
    }
    double w = fatou_.w_of_y(y);
    if (!std::isfinite(w)) throw NumericError("level: Fatou coordinate overflow");
    return static_cast<double>(n_max_) + std::floor(fatou_.psi(w) - psi_edge_);
}

LsvSystem boundaries(double r, std::size_t n_max) { return LsvSystem(r, n_max); }

std::uint64_t return_time(const LsvSystem& sys, double x) {
    if (!(x > 0.5 && x <= 1.0)) throw NumericError("return_time: x must lie in (1/2, 1]");
    return saturate(sys.level(2.0 * x - 1.0) + 1.0);
}

double induced_map(const LsvSystem& sys, double x) {
    if (!(x >= 0.5 && x <= 1.0)) throw DomainError("induced_map: x must lie in X = [1/2, 1]");
    double z = lsv_map(sys.r(), x);
    for (std::uint64_t n = 1; z < 0.5; ++n) {
        if (n >= kStepCap) throw NumericError("induced_map: step cap exceeded");
        z = lsv_left(sys.r(), z);
    }
    return z;
}

RoofSpec RoofSpec::affine(double p, double q) {
    RoofSpec s;
    s.kind = Kind::Affine;
    s.p = p;
    s.q = q;
    if (!(s.infimum(0.0, 1.0) > 0.0)) throw DomainError("roof must be positive on [0, 1]");
    return s;
}

RoofSpec RoofSpec::table(std::vector<double> breakpoints, std::vector<double> values, double holder) {
    if (breakpoints.size() != values.size() || breakpoints.size() < 2)
        throw DomainError("table roof needs matching breakpoints and values");
    if (!std::is_sorted(breakpoints.begin(), breakpoints.end()) || breakpoints.front() > 0.0 ||
        breakpoints.back() < 1.0)
        throw DomainError("table roof breakpoints must be sorted and cover [0, 1]");
    if (!(holder > 0.0 && holder <= 1.0)) throw DomainError("Holder exponent must lie in (0, 1]");
    RoofSpec s;
    s.kind = Kind::Table;
    s.breakpoints = std::move(breakpoints);
    s.values = std::move(values);
    s.holder = holder;
    if (!(s.infimum(0.0, 1.0) > 0.0)) throw DomainError("roof must be positive on [0, 1]");
    return s;
}

double RoofSpec::operator()(double x) const {
    if (kind == Kind::Affine) return p + q * x;
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
    if (it == breakpoints.begin()) return values.front();
    if (it == breakpoints.end()) return values.back();
    std::size_t i = static_cast<std::size_t>(it - breakpoints.begin());
    double t = (x - breakpoints[i - 1]) / (breakpoints[i] - breakpoints[i - 1]);
    return values[i - 1] + t * (values[i] - values[i - 1]);
}

double RoofSpec::infimum(double lo, double hi) const {
    if (kind == Kind::Affine) return p + q * (q >= 0 ? lo : hi);
    double m = std::min((*this)(lo), (*this)(hi));
    for (std::size_t i = 0; i < breakpoints.size(); ++i)
        if (breakpoints[i] > lo && breakpoints[i] < hi) m = std::min(m, values[i]);
    return m;
}

double induced_roof(const LsvSystem& sys, const RoofSpec& roof, double x) {
    if (!(x >= 0.5 && x <= 1.0)) throw DomainError("induced_roof: x must lie in X = [1/2, 1]");
    CompensatedSum s;
    s.add(roof(x));
    double z = lsv_map(sys.r(), x);
    for (std::uint64_t n = 1; z < 0.5; ++n) {
        if (n >= kStepCap) throw NumericError("induced_roof: step cap exceeded");
        s.add(roof(z));
        z = lsv_left(sys.r(), z);
    }
    return s.value();
}

InducedEngine::InducedEngine(const LsvSystem& sys, std::size_t nodes)
    : sys_(&sys), nodes_(nodes), levels_(sys.n_max()) {
    if (nodes < 4 || nodes > 255) throw DomainError("InducedEngine: nodes must lie in [4, 255]");
    const std::size_t n = nodes_;
    coef_.assign(levels_ * 2 * n, 0.0);
    deg_.assign(levels_ * 2, 0);
    std::vector<double> s(n), f0(n), f1(n);
    for (std::size_t k = 0; k < n; ++k)
        s[k] = std::cos(std::numbers::pi * (static_cast<double>(k) + 0.5) / static_cast<double>(n));
    const double r = sys.r();
    for (std::size_t j = 1; j < levels_; ++j) {
        const double lo = sys.y(j + 1), hi = sys.y(j);
        for (std::size_t k = 0; k < n; ++k) {
            double y = lo + 0.5 * (1.0 + s[k]) * (hi - lo);
            double gy = lsv_left(r, y);
            if (j == 1) {
                f0[k] = gy;
                f1[k] = y;
            } else {
                double th = level_theta(j - 1, gy);
                f0[k] = eval(j - 1, 0, th);
                f1[k] = y + eval(j - 1, 1, th);
            }
        }
        for (std::size_t which = 0; which < 2; ++which) {
            const auto& f = which == 0 ? f0 : f1;
            double* c = &coef_[(j * 2 + which) * n];
            double scale = 0.0;
            for (double v : f) scale = std::max(scale, std::abs(v));
            std::size_t deg = 1;
            for (std::size_t m = 0; m < n; ++m) {
                double acc = 0.0;
                for (std::size_t k = 0; k < n; ++k)
                    acc += f[k] * std::cos(std::numbers::pi * static_cast<double>(m) *
                                           (static_cast<double>(k) + 0.5) / static_cast<double>(n));
                c[m] = acc * 2.0 / static_cast<double>(n);
                if (m == 0) c[m] *= 0.5;
                if (std::abs(c[m]) > 1e-18 * scale) deg = m + 1;
            }
            deg_[j * 2 + which] = static_cast<std::uint8_t>(deg);
        }
    }
}

double InducedEngine::level_theta(std::size_t j, double y) const {
    const double lo = sys_->y(j + 1), hi = sys_->y(j);
    return (y - lo) / (hi - lo);
}

double InducedEngine::eval(std::size_t j, std::size_t which, double theta) const {
    const double* c = &coef_[(j * 2 + which) * nodes_];
    const std::size_t d = deg_[j * 2 + which];
    const double s = 2.0 * theta - 1.0;
    double b1 = 0.0, b2 = 0.0;
    for (std::size_t m = d - 1; m >= 1; --m) {
        double b0 = 2.0 * s * b1 - b2 + c[m];
        b2 = b1;
        b1 = b0;
    }
    return s * b1 - b2 + c[0];
}

double InducedEngine::exit_point(std::size_t j, double y) const {
    return j == 0 ? y : eval(j, 0, level_theta(j, y));
}

InducedEngine::Step InducedEngine::step(double x) const {
    const double y = 2.0 * x - 1.0;
    if (!(y > 0.0)) throw NumericError("induced step: x is glued to 1/2");
    Step out;
    if (y > 0.5) {
        out = {y, 1, x};
    } else if (y > sys_->y(levels_)) {
        double j = sys_->level(y);
        auto jj = static_cast<std::size_t>(j);
        double th = level_theta(jj, y);
        out = {eval(jj, 0, th), jj + 1, x + eval(jj, 1, th)};
    } else {
        // Pass through the deep levels in Fatou coordinates down to level levels_ - 1.
        const FatouCoordinate& fc = sys_->fatou();
        const std::size_t land = levels_ - 1;
        const double w0 = fc.w_of_y(y);
        if (!std::isfinite(w0)) throw NumericError("induced step: Fatou coordinate overflow");
        const double u0 = fc.psi(w0);
        const double edge = fc.psi(fc.w_of_y(sys_->y(levels_)));
        const double depth = std::floor(u0 - edge);
        const double frac = (u0 - edge) - depth;
        const double u_land = edge - 1.0 + frac;
        const double w_land = fc.psi_inverse(u_land);
        const double w_last = fc.psi_inverse(u_land + 1.0);
        const double z = fc.y_of_w(w_land);
        // Euler-Maclaurin for the points y = y_0, ..., y_{m-1} above the landing level
        auto slope = [&](double w) { return -fc.y_of_w(w) / (fc.r() * w) / fc.dpsi(w); };
        double head = fc.y_dpsi_antiderivative(w0) - fc.y_dpsi_antiderivative(w_last) +
                      0.5 * (y + fc.y_of_w(w_last)) + (slope(w0) - slope(w_last)) / 12.0;
        if (depth == 0.0) head = y;
        double th = level_theta(land, z);
        out.next = eval(land, 0, th);
        out.ret = saturate(static_cast<double>(levels_) + depth + 1.0);
        out.point_sum = x + head + eval(land, 1, th);
    }
    out.next = std::clamp(out.next, kJustAboveHalf, 1.0);
    return out;
}

double InducedEngine::inverse_branch(std::uint64_t n, double target) const {
    if (n == 0 || n > levels_) throw DomainError("inverse_branch: level outside the tables");
    if (!(target >= 0.5 && target <= 1.0)) throw DomainError("inverse_branch: target must lie in X");
    const std::size_t j = static_cast<std::size_t>(n - 1);
    double y;
    if (j == 0) {
        y = target;
    } else {
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 64; ++it) {
            double mid = 0.5 * (lo + hi);
            (eval(j, 0, mid) < target ? lo : hi) = mid;
        }
        double th = 0.5 * (lo + hi);
        y = sys_->y(j + 1) + th * (sys_->y(j) - sys_->y(j + 1));
    }
    return 0.5 * (1.0 + y);
}

InducedEngine::Validation InducedEngine::validate(std::size_t n, std::uint64_t seed) const {
    Validation v;
    RandomStream rng(seed, "lsv-validate", 0);
    const double r = sys_->r();
    for (std::size_t i = 0; i < n; ++i) {
        double x = 0.5 + 0.5 * rng.uniform();
        Step s = step(x);
        if (s.ret > 64) continue;
        CompensatedSum sum;
        sum.add(x);
        double z = 2.0 * x - 1.0;
        std::uint64_t k = 1;
        for (; z < 0.5; ++k) {
            sum.add(z);
            z = lsv_left(r, z);
        }
        if (k != s.ret) {
            ++v.return_mismatches;
            continue;
        }
        v.max_next_error = std::max(v.max_next_error, std::abs(z - s.next));
        v.max_sum_error = std::max(v.max_sum_error, std::abs(sum.value() - s.point_sum));
    }
    return v;
}

double BinnedMeasure::total() const {
    double s = 0.0;
    for (double m : mass) s += m;
    return s;
}

double total_variation(const BinnedMeasure& a, const BinnedMeasure& b) {
    if (a.mass.size() != b.mass.size()) throw DomainError("total_variation: bin counts differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.mass.size(); ++i) s += std::abs(a.mass[i] - b.mass[i]);
    return 0.5 * s;
}

double OrbitStats::tail_fraction(std::uint64_t n) const {
    if (n + 1 >= return_hist.size()) throw DomainError("tail_fraction: n beyond the histogram");
    std::uint64_t c = 0;
    for (std::size_t m = n + 1; m < return_hist.size(); ++m) c += return_hist[m];
    return static_cast<double>(c) / static_cast<double>(steps);
}

OrbitStats birkhoff_orbit(const InducedEngine& engine, const OrbitOptions& opt) {
    if (opt.bins == 0 || opt.chunks == 0 || opt.max_return < 2)
        throw DomainError("birkhoff_orbit: bins, chunks and max_return must be positive");
    struct Partial {
        std::vector<std::uint64_t> bins, ret;
    };
    std::vector<Partial> parts(opt.chunks);
    parallel_for(opt.chunks, [&](std::size_t c) {
        Partial& p = parts[c];
        p.bins.assign(opt.bins, 0);
        p.ret.assign(opt.max_return + 1, 0);
        std::uint64_t len = opt.steps / opt.chunks + (c < opt.steps % opt.chunks ? 1 : 0);
        RandomStream rng(opt.seed, "lsv-orbit", c);
        double x = 0.5 + 0.5 * rng.uniform();
        for (std::size_t i = 0; i < opt.burn_in; ++i) x = engine.step(x).next;
        const double scale = 2.0 * static_cast<double>(opt.bins);
        for (std::uint64_t i = 0; i < len; ++i) {
            auto b = static_cast<std::size_t>((x - 0.5) * scale);
            ++p.bins[std::min(b, opt.bins - 1)];
            InducedEngine::Step s = engine.step(x);
            ++p.ret[std::min<std::uint64_t>(s.ret, opt.max_return)];
            x = s.next;
        }
    });
    OrbitStats out;
    out.steps = opt.steps;
    out.visits.mass.assign(opt.bins, 0.0);
    out.return_hist.assign(opt.max_return + 1, 0);
    std::vector<std::uint64_t> bins(opt.bins, 0);
    for (auto& p : parts) {
        for (std::size_t b = 0; b < opt.bins; ++b) bins[b] += p.bins[b];
        for (std::size_t m = 0; m <= opt.max_return; ++m) out.return_hist[m] += p.ret[m];
    }
    for (std::size_t b = 0; b < opt.bins; ++b)
        out.visits.mass[b] = static_cast<double>(bins[b]) / static_cast<double>(opt.steps);
    return out;
}

UlamResult ulam_measure(const InducedEngine& engine, std::size_t bins, std::size_t max_iter,
                        double tol) {
    if (bins < 2) throw DomainError("ulam_measure: need at least two bins");
    const LsvSystem& sys = engine.system();
    const std::size_t B = bins;
    const double width = 0.5 / static_cast<double>(B);
    std::vector<double> m(B * B, 0.0);
    std::vector<double> pre(B + 1);
    auto deposit = [&](double lo, double hi, std::size_t target, double weight) {
        // spreads weight * |[lo, hi] & bin_a| over source bins a
        if (hi <= lo) return;
        auto a0 = static_cast<std::size_t>(std::max(0.0, (lo - 0.5) / width));
        for (std::size_t a = std::min(a0, B - 1); a < B; ++a) {
            double blo = 0.5 + static_cast<double>(a) * width, bhi = blo + width;
            if (blo >= hi) break;
            double ov = std::min(hi, bhi) - std::max(lo, blo);
            if (ov > 0) m[a * B + target] += weight * ov;
        }
    };
    const std::size_t levels = engine.table_levels();
    std::vector<double> last_fraction(B, 0.0);
    for (std::uint64_t n = 1; n <= levels; ++n) {
        const double xl = sys.x(n + 1), xr = sys.x(n);
        pre[0] = xl;
        pre[B] = xr;
        for (std::size_t b = 1; b < B; ++b)
            pre[b] = engine.inverse_branch(n, 0.5 + static_cast<double>(b) * width);
        for (std::size_t b = 0; b < B; ++b) deposit(pre[b], pre[b + 1], b, 1.0);
        if (n == levels)
            for (std::size_t b = 0; b < B; ++b) last_fraction[b] = (pre[b + 1] - pre[b]) / (xr - xl);
    }
    // deeper branches share the image distribution of the last tabulated one
    const double deep_hi = sys.x(levels + 1);
    for (std::size_t b = 0; b < B; ++b) deposit(0.5, deep_hi, b, last_fraction[b]);

    for (std::size_t a = 0; a < B; ++a) {
        double row = 0.0;
        for (std::size_t b = 0; b < B; ++b) row += m[a * B + b];
        if (!(row > 0)) throw NumericError("ulam_measure: empty transfer row");
        for (std::size_t b = 0; b < B; ++b) m[a * B + b] /= row;
    }
    UlamResult out;
    std::vector<double> pi(B, 1.0 / static_cast<double>(B)), next(B);
    for (std::size_t it = 1; it <= max_iter; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t a = 0; a < B; ++a) {
            const double pa = pi[a];
            const double* row = &m[a * B];
            for (std::size_t b = 0; b < B; ++b) next[b] += pa * row[b];
        }
        double s = 0.0;
        for (double v : next) s += v;
        double diff = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            next[b] /= s;
            diff += std::abs(next[b] - pi[b]);
        }
        pi.swap(next);
        out.iterations = it;
        out.residual = diff;
        if (diff < tol) break;
    }
    if (!(out.residual < tol)) throw NumericError("ulam_measure: power iteration did not converge");
    out.measure.mass = pi;
    return out;
}

std::vector<std::uint32_t> return_sequence(const InducedEngine& engine, std::size_t n,
                                           std::uint64_t seed, std::size_t burn_in) {
    std::vector<std::uint32_t> out(n);
    RandomStream rng(seed, "lsv-returns", 0);
    double x = 0.5 + 0.5 * rng.uniform();
    for (std::size_t i = 0; i < burn_in; ++i) x = engine.step(x).next;
    for (std::size_t i = 0; i < n; ++i) {
        InducedEngine::Step s = engine.step(x);
        out[i] = static_cast<std::uint32_t>(std::min<std::uint64_t>(s.ret, 0xffffffffu));
        x = s.next;
    }
    return out;
}

QiReport qi_constant(std::span<const std::uint32_t> returns, const QiOptions& opt) {
    if (opt.depth == 0 || opt.lag < opt.depth) throw DomainError("qi_constant: need lag >= depth >= 1");
    if (opt.cap < 2) throw DomainError("qi_constant: cap must be at least 2");
    const std::size_t span_len = opt.lag + opt.depth;
    if (returns.size() <= span_len) throw DomainError("qi_constant: sequence too short");
    auto code_at = [&](std::size_t i) {
        std::uint64_t c = 0;
        for (std::size_t d = 0; d < opt.depth; ++d)
            c = c * opt.cap + (std::min(returns[i + d], opt.cap) - 1);
        return c;
    };
    const std::size_t n_marg = returns.size() - opt.depth + 1;
    const std::size_t n_pair = returns.size() - span_len + 1;
    std::unordered_map<std::uint64_t, std::uint64_t> marg;
    for (std::size_t i = 0; i < n_marg; ++i) ++marg[code_at(i)];
    std::unordered_map<std::uint64_t, std::uint64_t> joint;
    const std::uint64_t codes = [&] {
        std::uint64_t c = 1;
        for (std::size_t d = 0; d < opt.depth; ++d) c *= opt.cap;
        return c;
    }();
    for (std::size_t i = 0; i < n_pair; ++i) ++joint[code_at(i) * codes + code_at(i + opt.lag)];

    struct Ratio {
        double value, sd;
    };
    std::vector<Ratio> ratios;
    QiReport rep;
    rep.n = returns.size();
    for (auto& [c1, m1] : marg)
        for (auto& [c2, m2] : marg) {
            double p1 = static_cast<double>(m1) / static_cast<double>(n_marg);
            double p2 = static_cast<double>(m2) / static_cast<double>(n_marg);
            double expected = p1 * p2 * static_cast<double>(n_pair);
            if (expected < opt.min_expected) {
                ++rep.pairs_skipped;
                continue;
            }
            auto it = joint.find(c1 * codes + c2);
            double count = it == joint.end() ? 0.0 : static_cast<double>(it->second);
            double ratio = count / expected;
            ratios.push_back({ratio, std::sqrt(std::max(count, 1.0)) / expected});
        }
    rep.pairs_used = ratios.size();
    if (ratios.empty()) throw NumericError("qi_constant: every cylinder pair is undersampled");
    const double z = z_bonferroni(opt.level, ratios.size());
    rep.ci_lo = rep.ci_hi = rep.k_hat = -std::numeric_limits<double>::infinity();
    for (auto& q : ratios) {
        rep.k_hat = std::max(rep.k_hat, q.value);
        rep.ci_lo = std::max(rep.ci_lo, q.value - z * q.sd);
        rep.ci_hi = std::max(rep.ci_hi, q.value + z * q.sd);
    }
    return rep;
}

QiReport qi_large(std::span<const std::uint32_t> returns, std::uint32_t threshold, std::size_t lag,
                  double level) {
    if (lag == 0 || returns.size() <= lag) throw DomainError("qi_large: bad lag");
    std::uint64_t marg = 0, joint = 0;
    for (auto v : returns) marg += v > threshold;
    const std::size_t n_pair = returns.size() - lag;
    for (std::size_t i = 0; i < n_pair; ++i) joint += (returns[i] > threshold) && (returns[i + lag] > threshold);
    double p = static_cast<double>(marg) / static_cast<double>(returns.size());
    double expected = p * p * static_cast<double>(n_pair);
    if (!(expected > 0)) throw NumericError("qi_large: no exceedances");
    QiReport rep;
    rep.n = returns.size();
    rep.pairs_used = 1;
    double count = static_cast<double>(joint);
    rep.k_hat = count / expected;
    double sd = std::sqrt(std::max(count, 1.0)) / expected;
    double z = z_bonferroni(level, 1);
    rep.ci_lo = rep.k_hat - z * sd;
    rep.ci_hi = rep.k_hat + z * sd;
    return rep;
}

TripleRatio qi_triple(std::span<const std::uint32_t> returns, std::array<std::uint32_t, 3> cyl,
                      std::size_t l1, std::size_t l2) {
    if (l1 == 0 || l2 == 0 || returns.size() <= l1 + l2) throw DomainError("qi_triple: bad lags");
    std::array<std::uint64_t, 3> m{};
    for (auto v : returns)
        for (int k = 0; k < 3; ++k) m[k] += v == cyl[k];
    const std::size_t n_tri = returns.size() - l1 - l2;
    std::uint64_t c = 0;
    for (std::size_t i = 0; i < n_tri; ++i)
        c += returns[i] == cyl[0] && returns[i + l1] == cyl[1] && returns[i + l1 + l2] == cyl[2];
    const double n = static_cast<double>(returns.size());
    double expected = static_cast<double>(n_tri);
    for (int k = 0; k < 3; ++k) expected *= static_cast<double>(m[k]) / n;
    if (!(expected > 0)) throw NumericError("qi_triple: a cylinder was never visited");
    TripleRatio t;
    t.count = c;
    t.ratio = static_cast<double>(c) / expected;
    t.stderr_ = std::sqrt(std::max(static_cast<double>(c), 1.0)) / expected;
    return t;
}

std::vector<std::uint32_t> shuffled(std::span<const std::uint32_t> seq, std::uint64_t seed) {
    std::vector<std::uint32_t> out(seq.begin(), seq.end());
    RandomStream rng(seed, "qi-shuffle", 0);
    for (std::size_t i = out.size(); i > 1; --i) {
        auto j = static_cast<std::size_t>(rng.next_u64() % i);
        std::swap(out[i - 1], out[j]);
    }
    return out;
}

PeriodicOrbit periodic_orbit(const InducedEngine& engine, const RoofSpec& roof,
                             std::span<const std::uint64_t> itinerary) {
    if (itinerary.empty()) throw DomainError("periodic_orbit: empty itinerary");
    const std::size_t p = itinerary.size();
    auto pull_back = [&](double x0, std::vector<double>& pts) {
        double z = x0;
        for (std::size_t i = p; i-- > 0;) {
            z = engine.inverse_branch(itinerary[i], z);
            pts[i] = z;
        }
        return z;
    };
    std::vector<double> pts(p);
    double x = 0.75;
    for (int it = 0; it < 200; ++it) {
        double nx = pull_back(x, pts);
        if (nx == x) break;
        x = nx;
    }
    PeriodicOrbit out;
    out.points = pts;
    CompensatedSum period;
    for (double v : pts) period.add(induced_roof(engine.system(), roof, v));
    out.period = period.value();
    return out;
}

}  // namespace kmix
