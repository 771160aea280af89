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


#include "kmix/flow.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "kmix/parallel.hpp"

namespace kmix {
namespace {

void check_under_roof(const RoofLaw& law, const ProductSet& s, const char* name) {
    if (!(s.a1 >= 0.0 && s.a2 > s.a1)) throw DomainError(std::string(name) + ": need 0 <= a1 < a2");
    if (!(s.base_lo <= s.base_hi)) throw DomainError(std::string(name) + ": empty base interval");
    if (!(s.a2 < std::max(law.minimum(), s.base_lo)))
        throw DomainError(std::string(name) + ": fiber interval must lie under the roof");
}

double overlap(double lo1, double hi1, double lo2, double hi2) {
    return std::max(0.0, std::min(hi1, hi2) - std::max(lo1, lo2));
}

// Wilson half-width for a proportion
double wilson_halfwidth(double hits, double n, double z = 1.0) {
    double p = hits / n;
    double denom = 1.0 + z * z / n;
    return z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
}

}  // namespace

RoofLaw RoofLaw::continuous(const TailModel& model) {
    return RoofLaw(Kind::Continuous, model, 0.0, 1.0, 0.0);
}

RoofLaw RoofLaw::ceil_lattice(const TailModel& model, double a, double h) {
    if (!(h > 0.0)) throw DomainError("ceil_lattice: h must be positive");
    RoofLaw law(Kind::CeilLattice, model, a, h, 0.0);
    if (!(law.minimum() > 0.0)) throw DomainError("ceil_lattice: roof must be positive");
    return law;
}

RoofLaw RoofLaw::point(double value) {
    if (!(value > 0.0)) throw DomainError("point roof must be positive");
    return RoofLaw(Kind::Point, TailModel::constant(0.5), 0.0, value, value);
}

const TailModel& RoofLaw::model() const {
    if (kind_ == Kind::Point) throw DomainError("point roof has no tail model");
    return model_;
}

double RoofLaw::tail(double t) const {
    switch (kind_) {
        case Kind::Continuous: return model_.tail(t);
        case Kind::CeilLattice: {
            double m = std::floor((t - a_) / h_);
            return m < 0 ? 1.0 : model_.tail(m);
        }
        case Kind::Point: return t < value_ ? 1.0 : 0.0;
    }
    return 0.0;
}

double RoofLaw::prob(double lo, double hi) const {
    if (hi < lo) return 0.0;
    double at_least = 0.0;
    switch (kind_) {
        case Kind::Continuous: at_least = model_.tail(lo); break;
        case Kind::CeilLattice: {
            double n = std::ceil((lo - a_) / h_);
            at_least = n <= 1 ? 1.0 : model_.tail(n - 1.0);
            break;
        }
        case Kind::Point: at_least = value_ >= lo ? 1.0 : 0.0; break;
    }
    return std::max(0.0, at_least - (std::isinf(hi) ? 0.0 : tail(hi)));
}

double RoofLaw::minimum() const {
    switch (kind_) {
        case Kind::Continuous: return model_.edge();
        case Kind::CeilLattice: return a_ + h_ * std::max(1.0, std::ceil(model_.edge()));
        case Kind::Point: return value_;
    }
    return 0.0;
}

double RoofLaw::quantile(double u, double lo, double hi) const {
    const bool whole = lo <= minimum() && std::isinf(hi);
    switch (kind_) {
        case Kind::Continuous: {
            if (whole) return model_.tail_quantile(u);
            double t_hi = std::isinf(hi) ? 0.0 : model_.tail(hi);
            double t_lo = model_.tail(lo);
            return std::clamp(model_.tail_quantile(t_hi + u * (t_lo - t_hi)), lo, hi);
        }
        case Kind::CeilLattice: {
            double q = u;
            if (!whole) {
                double n_lo = std::max(1.0, std::ceil((lo - a_) / h_));
                double t_hi = std::isinf(hi) ? 0.0 : model_.tail(std::floor((hi - a_) / h_));
                double t_lo = model_.tail(n_lo - 1.0);
                q = t_hi + u * (t_lo - t_hi);
            }
            return a_ + h_ * std::max(1.0, std::ceil(model_.tail_quantile(q)));
        }
        case Kind::Point: return value_;
    }
    return 0.0;
}

LatticeDist RoofLaw::discretize(double step, double cutoff) const {
    switch (kind_) {
        case Kind::Continuous:
            return kmix::discretize(model_, step, cutoff, DiscretizeRule::MeanPreserving);
        case Kind::CeilLattice: return discretize_ceil(model_, a_, h_, cutoff);
        case Kind::Point: return LatticeDist::point_mass(value_, step);
    }
    return {};
}

double RoofLaw::scale(double t) const {
    if (kind_ == Kind::Point) return 1.0;
    return model_.slow_value(t) * std::pow(t, 1.0 - model_.alpha());
}

double InducedBase::roof(double x) const {
    if (engine_ && roof_.kind == RoofSpec::Kind::Affine) return engine_->affine_roof(engine_->step(x), roof_);
    return induced_roof(*sys_, roof_, x);
}

double InducedBase::next(double x) const {
    return engine_ ? engine_->step(x).next : induced_map(*sys_, x);
}

MixingEstimate correlation_mc(const RoofLaw& law, const ProductSet& a, const ProductSet& b, double t,
                              const CorrelationOptions& opt) {
    if (opt.n_samples < 1000) throw DomainError("correlation_mc: at least 1000 samples are required");
    if (!(t >= 0.0)) throw DomainError("correlation_mc: t must be nonnegative");
    check_under_roof(law, a, "A");
    check_under_roof(law, b, "B");
    const double mu_a = law.prob(a.base_lo, a.base_hi);
    if (!(mu_a > 0.0)) throw DomainError("correlation_mc: A has zero measure");
    const PhiloxKey key = make_key(opt.seed, "corr-iid");
    const std::size_t chunks = std::max<std::size_t>(1, std::min<std::uint64_t>(opt.chunks, opt.n_samples));
    struct Partial {
        long double sum = 0, sum2 = 0;
        std::uint64_t hits = 0;
    };
    std::vector<Partial> parts(chunks);
    const double lo = t + a.a1 - b.a2, hi = t + a.a2 - b.a1;
    parallel_for(chunks, [&](std::size_t c) {
        Partial& p = parts[c];
        std::uint64_t begin = opt.n_samples * c / chunks, end = opt.n_samples * (c + 1) / chunks;
        for (std::uint64_t i = begin; i < end; ++i) {
            RandomStream rng(key, i);
            double tau = law.quantile(rng.uniform(), a.base_lo, a.base_hi);
            long double lap = 0.0L;
            double v = 0.0;
            while (lap <= hi) {
                if (lap >= lo && b.base_contains(tau)) {
                    double start = static_cast<double>(lap) - t;
                    v += overlap(a.a1, a.a2, start + b.a1, start + b.a2);
                }
                lap += tau;
                tau = law.quantile(rng.uniform());
            }
            if (v > 0) ++p.hits;
            p.sum += v;
            p.sum2 += static_cast<long double>(v) * v;
        }
    });
    Partial tot;
    for (auto& p : parts) {
        tot.sum += p.sum;
        tot.sum2 += p.sum2;
        tot.hits += p.hits;
    }
    const long double n = static_cast<long double>(opt.n_samples);
    long double mean = tot.sum / n;
    long double var = std::max(0.0L, tot.sum2 / n - mean * mean) * n / (n - 1);
    MixingEstimate est;
    est.t = t;
    est.n_samples = opt.n_samples;
    est.seed = opt.seed;
    est.raw = static_cast<double>(mean) * mu_a;
    est.stderr_ = static_cast<double>(std::sqrt(var / n)) * mu_a;
    if (tot.hits < 30) {
        double w = wilson_halfwidth(static_cast<double>(tot.hits), static_cast<double>(opt.n_samples));
        est.stderr_ = std::max(est.stderr_, w * a.fiber_length() * mu_a);
    }
    const double sc = law.scale(std::max(t, 1.0));
    est.scaled = est.raw * sc;
    est.scaled_stderr = est.stderr_ * sc;
    return est;
}

std::vector<MixingEstimate> correlation_lsv(const InducedEngine& engine, const RoofSpec& roof,
                                            const ProductSet& a, const ProductSet& b,
                                            const std::vector<double>& t_grid,
                                            const LsvCorrelationOptions& opt) {
    if (t_grid.empty()) throw DomainError("correlation_lsv: empty t grid");
    if (opt.orbit_steps < 1000) throw DomainError("correlation_lsv: at least 1000 samples are required");
    for (const ProductSet* s : {&a, &b}) {
        if (!(s->base_lo >= 0.5 && s->base_hi <= 1.0 && s->base_lo < s->base_hi))
            throw DomainError("correlation_lsv: base interval must lie in X = [1/2, 1]");
        if (!(s->a1 >= 0.0 && s->a2 > s->a1 && s->a2 < roof.infimum(s->base_lo, s->base_hi)))
            throw DomainError("correlation_lsv: fiber interval must lie under the roof");
    }
    const double t_max = *std::max_element(t_grid.begin(), t_grid.end());
    const std::size_t chunks = std::max<std::size_t>(1, opt.chunks);
    const std::size_t nb = std::max<std::size_t>(1, opt.batches_per_chunk);
    const std::size_t G = t_grid.size();
    std::vector<std::vector<double>> batch(chunks * nb, std::vector<double>(G, 0.0));
    std::vector<std::uint64_t> batch_len(chunks * nb, 0);
    const bool affine = roof.kind == RoofSpec::Kind::Affine;

    parallel_for(chunks, [&](std::size_t c) {
        const std::uint64_t len = opt.orbit_steps / chunks + (c < opt.orbit_steps % chunks ? 1 : 0);
        RandomStream rng(opt.seed, "corr-lsv", c);
        double x = 0.5 + 0.5 * rng.uniform();
        for (std::size_t i = 0; i < opt.burn_in; ++i) x = engine.step(x).next;
        std::vector<double> xs;
        std::vector<long double> ts;
        xs.reserve(len + 1024);
        ts.reserve(len + 1024);
        long double clock = 0.0L;
        auto advance = [&] {
            InducedEngine::Step s = engine.step(x);
            double tau = affine ? engine.affine_roof(s, roof) : induced_roof(engine.system(), roof, x);
            xs.push_back(x);
            ts.push_back(clock);
            clock += tau;
            x = s.next;
        };
        for (std::uint64_t i = 0; i < len; ++i) advance();
        const long double horizon = ts.back() + a.a2 + t_max - b.a1;
        while (clock <= horizon) advance();
        xs.push_back(x);
        ts.push_back(clock);

        std::vector<std::size_t> ptr(G, 0);
        for (std::size_t bi = 0; bi < nb; ++bi) {
            const std::uint64_t i0 = len * bi / nb, i1 = len * (bi + 1) / nb;
            auto& acc = batch[c * nb + bi];
            batch_len[c * nb + bi] = i1 - i0;
            for (std::uint64_t i = i0; i < i1; ++i) {
                if (!a.base_contains(xs[i])) continue;
                for (std::size_t g = 0; g < G; ++g) {
                    const long double lo = ts[i] + a.a1 + t_grid[g] - b.a2;
                    const long double hi = ts[i] + a.a2 + t_grid[g] - b.a1;
                    std::size_t k = std::max<std::size_t>(ptr[g], i);
                    while (ts[k] < lo) ++k;
                    ptr[g] = k;
                    for (; k < ts.size() && ts[k] <= hi; ++k) {
                        if (!b.base_contains(xs[k])) continue;
                        double start = static_cast<double>(ts[k] - ts[i]) - t_grid[g];
                        acc[g] += overlap(a.a1, a.a2, start + b.a1, start + b.a2);
                    }
                }
            }
        }
    });

    std::vector<MixingEstimate> out(G);
    const double n_total = static_cast<double>(opt.orbit_steps);
    const double nbt = static_cast<double>(batch.size());
    const double alpha = 1.0 / engine.system().r();
    for (std::size_t g = 0; g < G; ++g) {
        long double sum = 0, s1 = 0, s2 = 0;
        for (std::size_t j = 0; j < batch.size(); ++j) {
            sum += batch[j][g];
            double m = batch[j][g] / static_cast<double>(batch_len[j]);
            s1 += m;
            s2 += static_cast<long double>(m) * m;
        }
        long double mean_b = s1 / nbt;
        long double var_b = std::max(0.0L, s2 / nbt - mean_b * mean_b) * nbt / std::max(1.0, nbt - 1.0);
        MixingEstimate& e = out[g];
        e.t = t_grid[g];
        e.raw = static_cast<double>(sum / n_total);
        e.stderr_ = static_cast<double>(std::sqrt(var_b / nbt));
        const double sc = std::pow(std::max(e.t, 1.0), 1.0 - alpha);
        e.scaled = e.raw * sc;
        e.scaled_stderr = e.stderr_ * sc;
        e.n_samples = opt.orbit_steps;
        e.seed = opt.seed;
    }
    return out;
}

RenewalResult renewal_sum_eval(const RoofLaw& law, const ProductSet& a, const ProductSet& b, double t,
                               const RenewalOptions& opt) {
    check_under_roof(law, a, "A");
    check_under_roof(law, b, "B");
    if (!(opt.eps_cut > 0.0 && opt.eps_cut < 1.0)) throw DomainError("renewal_sum_eval: eps_cut must lie in (0, 1)");
    if (!(t > 0.0)) throw DomainError("renewal_sum_eval: t must be positive");
    RenewalResult res;
    const double mu_a = law.prob(a.base_lo, a.base_hi);
    const double mu_b = law.prob(b.base_lo, b.base_hi);
    const double mu_ab = law.prob(std::max(a.base_lo, b.base_lo), std::min(a.base_hi, b.base_hi));
    res.n_t = law.has_model() ? static_cast<std::uint64_t>(counting_N(law.model(), std::max(t, rate_R(law.model(), 1.0))))
                              : static_cast<std::uint64_t>(std::ceil(t / law.value()));
    res.k_max = static_cast<std::uint64_t>(std::ceil(static_cast<double>(res.n_t) / opt.eps_cut));
    const double upper = t + a.a2 - b.a1;

    res.terms.assign(1, mu_ab * overlap(a.a1, a.a2, b.a1 - t, b.a2 - t));
    const double step = law.kind() == RoofLaw::Kind::CeilLattice ? law.spacing() : opt.step;
    if (upper >= law.minimum()) {
        LatticeDist d = law.discretize(step, upper + 2.0 * step);
        LatticeDist s1 = d;
        if (a.base_lo > law.minimum() || !std::isinf(a.base_hi)) {
            long double kept = 0;
            for (std::size_t i = 0; i < s1.size(); ++i) {
                if (!a.base_contains(s1.center(i))) s1.weights[i] = 0.0;
                kept += s1.weights[i];
            }
            for (double& w : s1.weights) w = static_cast<double>(w / mu_a);
            s1.overflow_mass = std::max(0.0, 1.0 - static_cast<double>(kept / mu_a));
        }
        const double factor = mu_a * mu_b;
        const double width = a.fiber_length();
        LatticeDist sk = s1;
        long double total = res.terms[0];
        for (std::uint64_t k = 1; k <= res.k_max; ++k) {
            // one extra cell so the cells straddling the window edge are complete
            if (k > 1) sk = convolve(sk, d, upper + step, ConvolveMethod::Auto, opt.max_cells);
            CumulativeView g(sk);
            long double v = g.integrated(t + a.a2 - b.a1) - g.integrated(t + a.a1 - b.a1) -
                            g.integrated(t + a.a2 - b.a2) + g.integrated(t + a.a1 - b.a2);
            double term = std::max(0.0, static_cast<double>(v)) * factor;
            res.terms.push_back(term);
            total += term;
            const double q = std::min(sk.grid_mass(), 1.0);
            const double bound = q < 1.0 ? factor * width * static_cast<double>(k) * q / (1.0 - q)
                                         : std::numeric_limits<double>::infinity();
            res.tail_budget = bound;
            if (bound <= 1e-17 * static_cast<double>(total)) break;
        }
        res.k_max = res.terms.size() - 1;
        res.value = static_cast<double>(total);
    } else {
        res.value = res.terms[0];
        res.k_max = 0;
    }
    const double sc = law.scale(t);
    res.scaled = res.value * sc;
    res.normalized = res.scaled / (mu_a * a.fiber_length() * mu_b * b.fiber_length());
    return res;
}

Decomposition decompose(const RenewalResult& r, const RoofLaw& law, double t, double eps) {
    if (!(eps > 0.0 && eps < 0.5)) throw DomainError("decompose: eps must lie in (0, 1/2)");
    Decomposition d;
    d.eps = eps;
    const double n = static_cast<double>(r.n_t);
    const double sc = law.scale(t);
    long double i = 0, ii = 0, iii = 0;
    for (std::size_t k = 0; k < r.terms.size(); ++k) {
        double kk = static_cast<double>(k);
        if (kk < eps * n)
            i += r.terms[k];
        else if (kk >= n / eps)
            iii += r.terms[k];
        else
            ii += r.terms[k];
    }
    d.part_i = static_cast<double>(i) * sc;
    d.part_ii = static_cast<double>(ii) * sc;
    d.part_iii = static_cast<double>(iii) * sc;
    d.total = d.part_i + d.part_ii + d.part_iii;
    return d;
}

Decomposition decomposition_diagnostics(const RoofLaw& law, const ProductSet& a, const ProductSet& b,
                                        double t, double eps, const RenewalOptions& opt) {
    RenewalOptions o = opt;
    o.eps_cut = std::min(opt.eps_cut, eps / 4.0);
    return decompose(renewal_sum_eval(law, a, b, t, o), law, t, eps);
}

}  // namespace kmix
