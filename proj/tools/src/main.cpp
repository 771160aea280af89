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


// kmix: experiment runner.
//
//   kmix stable-density --alpha 0.5 --grid 0.05:10:200
//   kmix convolve-oracle --model m.json --step 1 --cutoff 4096 --k 8 --query 100:200
//   kmix lsv-tail --r 1.5 --nmax 1000 --orbit 10000000
//   kmix mix-estimate --base iid --model m.json --roof lattice:pi:1 --A 0:inf:0:0.4 \
//        --B 0:inf:0:0.4 --t-grid 100,1000 --samples 1000000 --seed 7
//   kmix verify --suite all --config c.json --out results/
//
// Thread count comes from KMIX_THREADS only.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "kmix/error.hpp"
#include "kmix_cli/config.hpp"
#include "kmix_cli/run.hpp"

namespace {

using kmix::cli::Command;
using kmix::cli::ExperimentConfig;

struct Flags {
    std::string config, model_file, out;
    std::optional<std::uint64_t> seed;
    std::optional<double> alpha, c, beta, t_min;
    std::optional<std::string> slow;
    // stable-density
    std::optional<std::string> grid;
    // convolve-oracle
    std::optional<double> step, cutoff;
    std::optional<std::uint64_t> k;
    std::optional<std::string> query, rule;
    // lsv
    std::optional<double> r;
    std::optional<std::size_t> nmax;
    std::optional<std::uint64_t> orbit;
    std::optional<std::string> lsv_roof;
    // mixing
    std::optional<std::string> base, roof, set_a, set_b, t_grid, method;
    std::optional<std::uint64_t> samples;
    // verify
    std::optional<std::string> suite;
    std::optional<std::uint64_t> llt_k, anticonc_k_max, local_k;
    std::optional<double> eps;
};

void add_common(CLI::App* app, Flags& f) {
    app->add_option("--config", f.config, "JSON experiment config; flags override it");
    app->add_option("--out", f.out, "Output directory for CSV, manifest.json and summary.txt");
    app->add_option("--seed", f.seed, "64-bit seed");
}

void add_model(CLI::App* app, Flags& f) {
    app->add_option("--model", f.model_file, "JSON tail model {alpha, slow, c, beta, t_min}");
    app->add_option("--alpha", f.alpha, "Tail index in (0, 1)");
    app->add_option("--slow", f.slow, "Slowly varying part: constant | log-power");
    app->add_option("--c", f.c, "Tail constant");
    app->add_option("--beta", f.beta, "log-power exponent");
    app->add_option("--t-min", f.t_min, "Left end of the Pareto tail");
}

template <class T, class U>
void take(const std::optional<T>& v, U& dst) {
    if (v) dst = *v;
}

ExperimentConfig assemble(Command cmd, const Flags& f) {
    ExperimentConfig c;
    if (!f.config.empty()) c = kmix::cli::config_from_json(kmix::cli::read_json_file(f.config));
    c.command = cmd;
    if (!f.model_file.empty()) c.model = kmix::cli::model_from_json(kmix::cli::read_json_file(f.model_file));
    if (!f.out.empty()) c.out = f.out;
    take(f.seed, c.seed);
    take(f.alpha, c.model.alpha);
    take(f.slow, c.model.slow);
    take(f.c, c.model.c);
    take(f.beta, c.model.beta);
    take(f.t_min, c.model.t_min);
    if (f.grid) {
        auto g = kmix::cli::parse_grid(*f.grid, "grid");
        if (g.size() < 2 && f.grid->find(':') == std::string::npos) throw kmix::ConfigError("grid", "expected zmin:zmax:n");
        c.stable.z_min = g.front();
        c.stable.z_max = g.back();
        c.stable.points = g.size();
    }
    take(f.step, cmd == Command::MixEstimate || cmd == Command::Verify ? c.mixing.step : c.convolve.step);
    take(f.cutoff, c.convolve.cutoff);
    take(f.k, c.convolve.k);
    if (f.query) std::tie(c.convolve.query_lo, c.convolve.query_hi) = kmix::cli::parse_range(*f.query, "query");
    take(f.rule, c.convolve.rule);
    take(f.r, c.lsv.r);
    take(f.nmax, c.lsv.n_max);
    take(f.orbit, c.lsv.orbit);
    take(f.lsv_roof, c.lsv.roof);
    take(f.base, c.mixing.base);
    if (f.roof) {
        // One --roof flag serves both bases.
        if (c.mixing.base == "lsv") c.lsv.roof = *f.roof;
        else c.mixing.roof = *f.roof;
    }
    take(f.set_a, c.mixing.set_a);
    take(f.set_b, c.mixing.set_b);
    if (f.t_grid) c.mixing.t_grid = f.t_grid->empty() ? std::vector<double>{} : kmix::cli::parse_grid(*f.t_grid, "t-grid");
    take(f.method, c.mixing.method);
    take(f.samples, c.mixing.samples);
    take(f.suite, c.verify.suite);
    take(f.llt_k, c.verify.llt_k);
    take(f.anticonc_k_max, c.verify.anticonc_k_max);
    take(f.local_k, c.verify.local_k);
    take(f.eps, c.verify.eps);
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kmix: stable local limits, renewal sums and mixing of suspension flows"};
    app.require_subcommand(1);
    Flags f;

    auto* stable = app.add_subcommand("stable-density", "Tabulate the one-sided stable density rho");
    stable->footer("CSV columns: z,rho");
    add_common(stable, f);
    stable->add_option("--alpha", f.alpha, "Tail index in (0, 1)");
    stable->add_option("--grid", f.grid, "zmin:zmax:n (linear)");

    auto* conv = app.add_subcommand("convolve-oracle", "FFT convolution powers of a discretized tail law");
    conv->footer("CSV columns: k,lo,hi,prob,overflow_budget (one row per power 1..K)");
    add_common(conv, f);
    add_model(conv, f);
    conv->add_option("--step", f.step, "Lattice step");
    conv->add_option("--cutoff", f.cutoff, "Window top; mass beyond is overflow");
    conv->add_option("--k", f.k, "Largest power K");
    conv->add_option("--query", f.query, "lo:hi interval (hi may be inf)");
    conv->add_option("--rule", f.rule, "mean-preserving | cdf-increment");

    auto* lsv = app.add_subcommand("lsv-tail", "LSV boundaries and the return-time tail of the induced map");
    lsv->footer("CSV columns: n,x_n,y_n,mu_R_gt_n");
    add_common(lsv, f);
    lsv->add_option("--r", f.r, "LSV exponent");
    lsv->add_option("--nmax", f.nmax, "Number of boundary levels");
    lsv->add_option("--orbit", f.orbit, "Induced orbit length");

    auto* mix = app.add_subcommand("mix-estimate", "Correlation nu(A & g_-t B) of a suspension flow");
    mix->footer("CSV columns: t,raw,scaled,stderr,n,seed\n"
                "roof: continuous | lattice:a:h | point:v (iid), affine:p:q (lsv); a, h, v accept pi, e, sqrt(n)\n"
                "sets: lo:hi:a1:a2, base range [lo, hi] times fiber [a1, a2]");
    add_common(mix, f);
    add_model(mix, f);
    mix->add_option("--base", f.base, "iid | lsv");
    mix->add_option("--r", f.r, "LSV exponent");
    mix->add_option("--roof", f.roof, "Roof spec");
    mix->add_option("--A", f.set_a, "Set A");
    mix->add_option("--B", f.set_b, "Set B");
    mix->add_option("--t-grid", f.t_grid, "t0:t1:n (linear) or a comma list");
    mix->add_option("--samples", f.samples, "Monte Carlo samples");
    mix->add_option("--orbit", f.orbit, "LSV induced orbit length");
    mix->add_option("--method", f.method, "mc | renewal");
    mix->add_option("--step", f.step, "Lattice step of the renewal evaluation");

    auto* ver = app.add_subcommand("verify", "Run property checks with explicit error budgets");
    ver->footer("CSV columns: name,statistic,threshold,budget,pass,inconclusive; report.json in --out\n"
                "exit status: 0 all pass, 1 failure or error, 2 inconclusive");
    add_common(ver, f);
    add_model(ver, f);
    ver->add_option("--suite", f.suite, "llt | anticonc | ld | local-ld | mixing | all");
    ver->add_option("--t-grid", f.t_grid, "Mixing t-grid");
    ver->add_option("--samples", f.samples, "Monte Carlo samples for mixing checks");
    ver->add_option("--roof", f.roof, "Roof spec for mixing checks");
    ver->add_option("--base", f.base, "iid | lsv");
    ver->add_option("--r", f.r, "LSV exponent");
    ver->add_option("--orbit", f.orbit, "LSV induced orbit length");
    ver->add_option("--A", f.set_a, "Set A");
    ver->add_option("--B", f.set_b, "Set B");
    ver->add_option("--llt-k", f.llt_k, "k of the local limit check");
    ver->add_option("--eps", f.eps, "Grid range [eps R(k), R(k)/eps]");
    ver->add_option("--anticonc-k-max", f.anticonc_k_max, "Largest k of the doubling chain");
    ver->add_option("--local-k", f.local_k, "k of the local large deviation check");

    CLI11_PARSE(app, argc, argv);

    try {
        CLI::App* chosen = app.get_subcommands().front();
        Command cmd = kmix::cli::parse_command(chosen->get_name());
        return kmix::cli::execute(assemble(cmd, f), std::cout, std::cerr);
    } catch (const kmix::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
    } catch (const kmix::ResourceError& e) {
        std::cerr << "resource error: " << e.what() << " (advisory limit " << e.advisory_cells() << " cells)\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return kmix::cli::kExitError;
}
