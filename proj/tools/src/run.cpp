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


#include "kmix_cli/run.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <ostream>
#include <sstream>

#include "kmix/dist.hpp"
#include "kmix/error.hpp"
#include "kmix/lsv.hpp"
#include "kmix/parallel.hpp"
#include "kmix/stable.hpp"
#include "kmix/version.hpp"

namespace kmix::cli {

using nlohmann::json;

namespace {

std::string row(std::initializer_list<std::string> cells) {
    std::string s;
    for (const auto& c : cells) {
        if (!s.empty()) s += ',';
        s += c;
    }
    return s + '\n';
}

std::string num(double v) { return format_real(v); }
std::string num(std::uint64_t v) { return std::to_string(v); }

// t with k L(t) / t^alpha = level, by bisection in log t.
double ld_time(const TailModel& model, std::uint64_t k, double level) {
    const double target = static_cast<double>(k) / level;
    auto g = [&](double t) { return std::pow(t, model.alpha()) / model.slow_value(t) - target; };
    double lo = std::max(model.edge(), model.t_min()) * (1 + 1e-12), hi = lo;
    while (g(hi) < 0) {
        lo = hi;
        hi *= 2.0;
        if (!std::isfinite(hi)) throw NumericError("ld_time: no bracket");
    }
    for (int i = 0; i < 200 && hi / lo > 1 + 1e-15; ++i) {
        double mid = std::sqrt(lo * hi);
        (g(mid) < 0 ? lo : hi) = mid;
    }
    return std::sqrt(lo * hi);
}

std::vector<double> geometric(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
    return g;
}

void run_stable(const ExperimentConfig& c, RunResult& res) {
    StableDensity sd(c.model.alpha);
    res.csv = csv_header(c.command);
    const auto& s = c.stable;
    for (std::size_t i = 0; i < s.points; ++i) {
        double z = s.points == 1 ? s.z_min
                                 : s.z_min + (s.z_max - s.z_min) * static_cast<double>(i) / static_cast<double>(s.points - 1);
        res.csv += row({num(z), num(sd.rho(z))});
    }
    std::ostringstream sum;
    sum << "stable density alpha=" << num(c.model.alpha) << "\n"
        << "scale sigma = " << num(sd.scale()) << "\n"
        << "c_hat = " << num(sd.c_hat()) << " (sin(pi alpha)/pi = " << num(std::sin(std::numbers::pi * c.model.alpha) / std::numbers::pi) << ")\n"
        << "mode = " << num(sd.mode()) << ", max rho = " << num(sd.max_rho()) << "\n";
    res.summary = sum.str();
}

void run_convolve(const ExperimentConfig& c, RunResult& res) {
    const auto& cv = c.convolve;
    TailModel model = make_model(c.model);
    auto rule = cv.rule == "cdf-increment" ? DiscretizeRule::CdfIncrement : DiscretizeRule::MeanPreserving;
    LatticeDist d = discretize(model, cv.step, cv.cutoff, rule);
    const double upper = d.center(d.size() - 1);
    res.csv = csv_header(c.command);
    std::ostringstream sum;
    sum << "convolve-oracle: " << d.size() << " cells, step " << num(cv.step) << ", window top " << num(upper) << "\n";
    LatticeDist cur = d;
    for (std::uint64_t j = 1; j <= cv.k; ++j) {
        if (j > 1) cur = convolve(cur, d, upper);
        double p = interval_prob(cur, cv.query_lo, cv.query_hi);
        res.csv += row({num(j), num(cv.query_lo), num(cv.query_hi), num(p), num(cur.overflow_mass)});
        res.budgets.push_back({{"k", j}, {"overflow_budget", cur.overflow_mass}});
        if (j == cv.k)
            sum << "k=" << j << ": P(tau_k in [" << num(cv.query_lo) << ", " << num(cv.query_hi) << "]) = " << num(p)
                << ", overflow " << num(cur.overflow_mass) << "\n";
    }
    res.summary = sum.str();
}

void run_lsv_tail(const ExperimentConfig& c, RunResult& res) {
    const auto& l = c.lsv;
    LsvSystem sys = boundaries(l.r, l.n_max);
    InducedEngine engine(sys);
    OrbitOptions opt;
    opt.steps = l.orbit;
    opt.max_return = l.n_max + 2;
    opt.seed = c.seed;
    OrbitStats st = birkhoff_orbit(engine, opt);
    res.csv = csv_header(c.command);
    for (std::size_t n = 1; n <= l.n_max; ++n)
        res.csv += row({num(static_cast<std::uint64_t>(n)), num(sys.x(n)), num(sys.y(n)), num(st.tail_fraction(n))});
    res.budgets.push_back({{"boundary_residual", sys.max_residual()}});
    std::ostringstream sum;
    sum << "lsv r=" << num(l.r) << ": boundaries to n=" << l.n_max << ", max residual " << num(sys.max_residual()) << "\n"
        << "induced orbit of " << l.orbit << " steps, seed " << c.seed << "\n"
        << "tail fraction at n=" << std::min<std::size_t>(10, l.n_max) << ": " << num(st.tail_fraction(std::min<std::size_t>(10, l.n_max))) << "\n";
    res.summary = sum.str();
}

void run_mix(const ExperimentConfig& c, RunResult& res) {
    const auto& m = c.mixing;
    ProductSet a = parse_set(m.set_a, "mixing.A"), b = parse_set(m.set_b, "mixing.B");
    res.csv = csv_header(c.command);
    std::ostringstream sum;
    auto emit = [&](const MixingEstimate& e) {
        res.csv += row({num(e.t), num(e.raw), num(e.scaled), num(e.stderr_), num(e.n_samples), num(e.seed)});
        sum << "t=" << num(e.t) << " scaled=" << num(e.scaled) << " +- " << num(e.scaled_stderr) << "\n";
        res.budgets.push_back({{"t", e.t}, {"stderr", e.stderr_}});
    };
    if (m.base == "lsv") {
        LsvSystem sys = boundaries(c.lsv.r, c.lsv.n_max);
        InducedEngine engine(sys);
        LsvCorrelationOptions opt;
        opt.orbit_steps = c.lsv.orbit;
        opt.seed = c.seed;
        for (const auto& e : correlation_lsv(engine, make_lsv_roof(c.lsv.roof), a, b, m.t_grid, opt)) emit(e);
    } else {
        RoofLaw law = make_roof_law(m.roof, make_model(c.model));
        for (double t : m.t_grid) {
            if (m.method == "renewal") {
                RenewalOptions ro;
                ro.step = m.step;
                RenewalResult r = renewal_sum_eval(law, a, b, t, ro);
                MixingEstimate e;
                e.t = t;
                e.raw = r.value;
                e.scaled = r.scaled;
                e.stderr_ = r.tail_budget;
                e.scaled_stderr = r.tail_budget * (r.value > 0 ? r.scaled / r.value : 0.0);
                e.n_samples = 0;
                e.seed = c.seed;
                emit(e);
            } else {
                CorrelationOptions co;
                co.n_samples = m.samples;
                co.seed = c.seed;
                emit(correlation_mc(law, a, b, t, co));
            }
        }
    }
    res.summary = "mix-estimate base=" + m.base + " method=" + (m.base == "lsv" ? std::string("orbit") : m.method) + "\n" + sum.str();
}

void run_verify(const ExperimentConfig& c, RunResult& res) {
    const auto& v = c.verify;
    const bool all = v.suite == "all";
    TailModel model = make_model(c.model);
    using Job = std::function<std::vector<CheckReport>()>;
    std::vector<Job> jobs;
    if (all || v.suite == "llt") {
        jobs.push_back([&] {
            LltOptions o;
            o.eps = v.eps;
            return std::vector<CheckReport>{llt_check(model, v.llt_k, 1.0, StableDensity(model.alpha()), o)};
        });
    }
    if (all || v.suite == "anticonc") {
        jobs.push_back([&] {
            std::vector<std::uint64_t> ks;
            for (std::uint64_t k = 2; k <= v.anticonc_k_max; k *= 2) ks.push_back(k);
            StableDensity sd(model.alpha());
            return std::vector<CheckReport>{anticonc_check(model, ks, &sd)};
        });
    }
    if (all || v.suite == "ld") {
        jobs.push_back([&] {
            std::vector<std::pair<std::uint64_t, double>> pairs;
            for (auto k : v.ld_k) pairs.emplace_back(k, ld_time(model, k, v.ld_level));
            LdOptions o;
            o.seed = c.seed;
            return std::vector<CheckReport>{ld_check(model, pairs, o)};
        });
    }
    if (all || v.suite == "local-ld") {
        jobs.push_back([&] {
            const double R = rate_R(model, static_cast<double>(v.local_k));
            auto grid = geometric(0.1 * R, 50.0 * R, 32);
            std::vector<CheckReport> out{local_ld_check(model, v.local_k, grid, v.interval)};
            if (model.alpha() > 0.5)
                out.push_back(local_ld_variant_check(model, v.local_k, geometric(0.1, 50.0, 32), v.interval));
            return out;
        });
    }
    if (all || v.suite == "mixing") {
        jobs.push_back([&] {
            ProductSet a = parse_set(c.mixing.set_a, "mixing.A"), b = parse_set(c.mixing.set_b, "mixing.B");
            if (c.mixing.base == "lsv") {
                LsvSystem sys = boundaries(c.lsv.r, c.lsv.n_max);
                InducedEngine engine(sys);
                LsvCorrelationOptions o;
                o.orbit_steps = c.lsv.orbit;
                o.seed = c.seed;
                return mixing_suite_lsv(engine, make_lsv_roof(c.lsv.roof), a, b, c.mixing.t_grid, o);
            }
            MixingSuiteOptions o;
            o.mc.n_samples = c.mixing.samples;
            o.mc.seed = c.seed;
            o.renewal.step = c.mixing.step;
            return mixing_suite(make_roof_law(c.mixing.roof, model), support_of(c.mixing.roof), a, b,
                                c.mixing.t_grid, o);
        });
    }
    std::vector<std::vector<CheckReport>> parts(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t i) { parts[i] = jobs[i](); });
    res.csv = csv_header(c.command);
    std::ostringstream sum;
    bool failed = false, inconclusive = false;
    for (auto& p : parts)
        for (auto& r : p) {
            res.csv += row({r.name, num(r.statistic), num(r.threshold), num(r.budget()), r.pass ? "1" : "0",
                            r.inconclusive ? "1" : "0"});
            sum << (r.pass ? "PASS " : r.inconclusive ? "INCONCLUSIVE " : "FAIL ") << r.name << ": statistic "
                << num(r.statistic) << " + budget " << num(r.budget()) << " vs threshold " << num(r.threshold) << "\n";
            for (const auto& n : r.notes) sum << "    " << n << "\n";
            json terms = json::array();
            for (const auto& t : r.budget_terms) terms.push_back({{"label", t.label}, {"value", t.value}, {"inflates", t.inflates}});
            res.budgets.push_back({{"check", r.name}, {"terms", terms}});
            inconclusive |= r.inconclusive;
            failed |= !r.pass && !r.inconclusive;
            res.reports.push_back(std::move(r));
        }
    res.exit_code = failed ? kExitError : inconclusive ? kExitInconclusive : kExitOk;
    res.summary = "verify suite=" + v.suite + "\n" + sum.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("out", "cannot write '" + p.string() + "'");
    f << text;
}

}  // namespace

std::string csv_header(Command c) {
    switch (c) {
        case Command::StableDensity: return "z,rho\n";
        case Command::ConvolveOracle: return "k,lo,hi,prob,overflow_budget\n";
        case Command::LsvTail: return "n,x_n,y_n,mu_R_gt_n\n";
        case Command::MixEstimate: return "t,raw,scaled,stderr,n,seed\n";
        case Command::Verify: return "name,statistic,threshold,budget,pass,inconclusive\n";
    }
    return "";
}

json report_to_json(const CheckReport& r) {
    json terms = json::array();
    for (const auto& t : r.budget_terms) terms.push_back({{"label", t.label}, {"value", t.value}, {"inflates", t.inflates}});
    json fitted = json::object();
    for (const auto& [k, v] : r.fitted) fitted[k] = v;
    json cfg = json::object();
    for (const auto& [k, v] : r.config_echo) cfg[k] = v;
    return {{"name", r.name},     {"statistic", r.statistic}, {"threshold", r.threshold},
            {"budget", r.budget()}, {"budget_terms", terms}, {"pass", r.pass},
            {"inconclusive", r.inconclusive}, {"notes", r.notes}, {"fitted", fitted},
            {"config_echo", cfg}};
}

RunResult run(const ExperimentConfig& config) {
    validate(config);
    RunResult res;
    switch (config.command) {
        case Command::StableDensity: run_stable(config, res); break;
        case Command::ConvolveOracle: run_convolve(config, res); break;
        case Command::LsvTail: run_lsv_tail(config, res); break;
        case Command::MixEstimate: run_mix(config, res); break;
        case Command::Verify: run_verify(config, res); break;
    }
    return res;
}

int execute(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    RunResult res = run(config);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (config.out.empty()) {
        out << res.csv;
        err << res.summary;
        return res.exit_code;
    }
    namespace fs = std::filesystem;
    fs::path dir(config.out);
    fs::create_directories(dir);
    const std::string name = command_name(config.command);
    write_file(dir / (name + ".csv"), res.csv);
    write_file(dir / "summary.txt", res.summary);
    json manifest = {{"config", config_to_json(config)},
                     {"library", "kmix"},
                     {"version", version_string},
                     {"wall_time_s", wall},
                     {"threads", thread_count()},
                     {"csv", name + ".csv"},
                     {"exit_code", res.exit_code},
                     {"budgets", res.budgets}};
    if (config.command == Command::Verify) {
        json reports = json::array();
        for (const auto& r : res.reports) reports.push_back(report_to_json(r));
        write_file(dir / "report.json", reports.dump(2) + "\n");
        manifest["report"] = "report.json";
    }
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    err << res.summary;
    return res.exit_code;
}

}  // namespace kmix::cli
