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


#include "kmix_cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "kmix/error.hpp"

namespace kmix::cli {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void bad(const std::string& field, const std::string& what) { throw ConfigError(field, what); }

double real_of(const json& v, const std::string& path) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const auto& s = v.get_ref<const std::string&>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
    }
    bad(path, "expected a number");
}

json real_to(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

std::uint64_t count_of(const json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
    // Allow 1e7 style literals when they are exact integers.
    if (v.is_number_float()) {
        double d = v.get<double>();
        if (d >= 0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
    }
    bad(path, "expected a nonnegative integer");
}

std::string string_of(const json& v, const std::string& path) {
    if (!v.is_string()) bad(path, "expected a string");
    return v.get<std::string>();
}

template <class F>
void for_fields(const json& j, const std::string& path, F&& on_field) {
    if (!j.is_object()) bad(path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        if (!on_field(it.key(), it.value(), key)) bad(key, "unknown field");
    }
}

double parse_real_token(const std::string& s, const std::string& field) {
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) bad(field, "cannot parse '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        bad(field, "cannot parse '" + s + "'");
    }
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

}  // namespace

std::string command_name(Command c) {
    switch (c) {
        case Command::StableDensity: return "stable-density";
        case Command::ConvolveOracle: return "convolve-oracle";
        case Command::LsvTail: return "lsv-tail";
        case Command::MixEstimate: return "mix-estimate";
        case Command::Verify: return "verify";
    }
    return "verify";
}

Command parse_command(const std::string& name) {
    for (Command c : {Command::StableDensity, Command::ConvolveOracle, Command::LsvTail, Command::MixEstimate,
                      Command::Verify})
        if (command_name(c) == name) return c;
    bad("command", "unknown subcommand '" + name + "'");
}

ModelConfig model_from_json(const json& j, const std::string& path) {
    ModelConfig m;
    for_fields(j, path, [&](const std::string& k, const json& v, const std::string& p) {
        if (k == "alpha") m.alpha = real_of(v, p);
        else if (k == "slow") m.slow = string_of(v, p);
        else if (k == "c") m.c = real_of(v, p);
        else if (k == "beta") m.beta = real_of(v, p);
        else if (k == "t_min") m.t_min = real_of(v, p);
        else return false;
        return true;
    });
    return m;
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    for_fields(j, "", [&](const std::string& k, const json& v, const std::string& p) {
        if (k == "command") c.command = parse_command(string_of(v, p));
        else if (k == "seed") c.seed = count_of(v, p);
        else if (k == "out") c.out = string_of(v, p);
        else if (k == "model") c.model = model_from_json(v, p);
        else if (k == "stable") {
            for_fields(v, p, [&](const std::string& k2, const json& v2, const std::string& p2) {
                if (k2 == "z_min") c.stable.z_min = real_of(v2, p2);
                else if (k2 == "z_max") c.stable.z_max = real_of(v2, p2);
                else if (k2 == "points") c.stable.points = count_of(v2, p2);
                else return false;
                return true;
            });
        } else if (k == "convolve") {
            for_fields(v, p, [&](const std::string& k2, const json& v2, const std::string& p2) {
                if (k2 == "step") c.convolve.step = real_of(v2, p2);
                else if (k2 == "cutoff") c.convolve.cutoff = real_of(v2, p2);
                else if (k2 == "k") c.convolve.k = count_of(v2, p2);
                else if (k2 == "query_lo") c.convolve.query_lo = real_of(v2, p2);
                else if (k2 == "query_hi") c.convolve.query_hi = real_of(v2, p2);
                else if (k2 == "rule") c.convolve.rule = string_of(v2, p2);
                else return false;
                return true;
            });
        } else if (k == "lsv") {
            for_fields(v, p, [&](const std::string& k2, const json& v2, const std::string& p2) {
                if (k2 == "r") c.lsv.r = real_of(v2, p2);
                else if (k2 == "n_max") c.lsv.n_max = count_of(v2, p2);
                else if (k2 == "orbit") c.lsv.orbit = count_of(v2, p2);
                else if (k2 == "roof") c.lsv.roof = string_of(v2, p2);
                else return false;
                return true;
            });
        } else if (k == "mixing") {
            for_fields(v, p, [&](const std::string& k2, const json& v2, const std::string& p2) {
                if (k2 == "base") c.mixing.base = string_of(v2, p2);
                else if (k2 == "roof") c.mixing.roof = string_of(v2, p2);
                else if (k2 == "A") c.mixing.set_a = string_of(v2, p2);
                else if (k2 == "B") c.mixing.set_b = string_of(v2, p2);
                else if (k2 == "t_grid") {
                    if (v2.is_string()) {
                        c.mixing.t_grid = parse_grid(v2.get<std::string>(), "t-grid");
                    } else if (v2.is_array()) {
                        c.mixing.t_grid.clear();
                        for (const auto& x : v2) c.mixing.t_grid.push_back(real_of(x, "t-grid"));
                    } else {
                        bad("t-grid", "expected an array or a grid string");
                    }
                } else if (k2 == "samples") c.mixing.samples = count_of(v2, p2);
                else if (k2 == "method") c.mixing.method = string_of(v2, p2);
                else if (k2 == "step") c.mixing.step = real_of(v2, p2);
                else return false;
                return true;
            });
        } else if (k == "verify") {
            for_fields(v, p, [&](const std::string& k2, const json& v2, const std::string& p2) {
                if (k2 == "suite") c.verify.suite = string_of(v2, p2);
                else if (k2 == "llt_k") c.verify.llt_k = count_of(v2, p2);
                else if (k2 == "eps") c.verify.eps = real_of(v2, p2);
                else if (k2 == "anticonc_k_max") c.verify.anticonc_k_max = count_of(v2, p2);
                else if (k2 == "ld_k") {
                    if (!v2.is_array()) bad(p2, "expected an array");
                    c.verify.ld_k.clear();
                    for (const auto& x : v2) c.verify.ld_k.push_back(count_of(x, p2));
                } else if (k2 == "ld_level") c.verify.ld_level = real_of(v2, p2);
                else if (k2 == "local_k") c.verify.local_k = count_of(v2, p2);
                else if (k2 == "interval") c.verify.interval = real_of(v2, p2);
                else return false;
                return true;
            });
        } else {
            return false;
        }
        return true;
    });
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["command"] = command_name(c.command);
    j["seed"] = c.seed;
    j["out"] = c.out;
    j["model"] = {{"alpha", c.model.alpha}, {"slow", c.model.slow}, {"c", c.model.c},
                  {"beta", c.model.beta}, {"t_min", c.model.t_min}};
    j["stable"] = {{"z_min", c.stable.z_min}, {"z_max", c.stable.z_max}, {"points", c.stable.points}};
    j["convolve"] = {{"step", c.convolve.step},         {"cutoff", real_to(c.convolve.cutoff)},
                     {"k", c.convolve.k},               {"query_lo", real_to(c.convolve.query_lo)},
                     {"query_hi", real_to(c.convolve.query_hi)}, {"rule", c.convolve.rule}};
    j["lsv"] = {{"r", c.lsv.r}, {"n_max", c.lsv.n_max}, {"orbit", c.lsv.orbit}, {"roof", c.lsv.roof}};
    json grid = json::array();
    for (double t : c.mixing.t_grid) grid.push_back(t);
    j["mixing"] = {{"base", c.mixing.base}, {"roof", c.mixing.roof},     {"A", c.mixing.set_a},
                   {"B", c.mixing.set_b},   {"t_grid", grid},            {"samples", c.mixing.samples},
                   {"method", c.mixing.method}, {"step", c.mixing.step}};
    j["verify"] = {{"suite", c.verify.suite},       {"llt_k", c.verify.llt_k},
                   {"eps", c.verify.eps},           {"anticonc_k_max", c.verify.anticonc_k_max},
                   {"ld_k", c.verify.ld_k},         {"ld_level", c.verify.ld_level},
                   {"local_k", c.verify.local_k},   {"interval", c.verify.interval}};
    return j;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) bad("config", "cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        bad("config", std::string("malformed JSON in '") + path + "': " + e.what());
    }
}

void validate(const ExperimentConfig& c) {
    const auto& m = c.model;
    if (!(m.alpha > 0 && m.alpha < 1)) bad("model.alpha", "must lie in (0, 1)");
    if (m.slow != "constant" && m.slow != "log-power") bad("model.slow", "must be constant or log-power");
    if (!(m.c > 0)) bad("model.c", "must be positive");
    if (!(m.t_min > 0)) bad("model.t_min", "must be positive");
    if (!std::isfinite(m.beta)) bad("model.beta", "must be finite");
    switch (c.command) {
        case Command::StableDensity:
            if (!(c.stable.z_min > 0 && c.stable.z_max > c.stable.z_min)) bad("stable.grid", "need 0 < z_min < z_max");
            if (c.stable.points < 1) bad("stable.grid", "need at least one point");
            break;
        case Command::ConvolveOracle:
            if (!(c.convolve.step > 0)) bad("convolve.step", "must be positive");
            if (!(c.convolve.cutoff > 0) || !std::isfinite(c.convolve.cutoff)) bad("convolve.cutoff", "must be finite");
            if (c.convolve.k < 1) bad("convolve.k", "must be at least 1");
            if (!(c.convolve.query_hi >= c.convolve.query_lo)) bad("convolve.query", "need lo <= hi");
            if (c.convolve.rule != "mean-preserving" && c.convolve.rule != "cdf-increment")
                bad("convolve.rule", "must be mean-preserving or cdf-increment");
            break;
        case Command::LsvTail:
            if (!(c.lsv.r > 0)) bad("lsv.r", "must be positive");
            if (c.lsv.n_max < 2) bad("lsv.n_max", "must be at least 2");
            if (c.lsv.orbit < 1000) bad("lsv.orbit", "must be at least 1000");
            break;
        case Command::MixEstimate:
        case Command::Verify:
            if (c.mixing.t_grid.empty()) bad("t-grid", "must not be empty");
            for (double t : c.mixing.t_grid)
                if (!(t > 0) || !std::isfinite(t)) bad("t-grid", "entries must be positive and finite");
            if (c.mixing.base != "iid" && c.mixing.base != "lsv") bad("mixing.base", "must be iid or lsv");
            if (c.mixing.method != "mc" && c.mixing.method != "renewal") bad("mixing.method", "must be mc or renewal");
            if (c.mixing.samples < 1000) bad("mixing.samples", "must be at least 1000");
            if (!(c.mixing.step > 0)) bad("mixing.step", "must be positive");
            parse_set(c.mixing.set_a, "mixing.A");
            parse_set(c.mixing.set_b, "mixing.B");
            if (c.mixing.base == "iid") support_of(c.mixing.roof);
            else make_lsv_roof(c.lsv.roof);
            if (c.command == Command::Verify) {
                const auto& v = c.verify;
                static const char* suites[] = {"llt", "anticonc", "ld", "local-ld", "mixing", "all"};
                if (std::find(std::begin(suites), std::end(suites), v.suite) == std::end(suites))
                    bad("verify.suite", "must be one of llt, anticonc, ld, local-ld, mixing, all");
                if (v.llt_k < 1) bad("verify.llt_k", "must be at least 1");
                if (!(v.eps > 0 && v.eps < 1)) bad("verify.eps", "must lie in (0, 1)");
                if (v.anticonc_k_max < 2) bad("verify.anticonc_k_max", "must be at least 2");
                if (v.ld_k.empty()) bad("verify.ld_k", "must not be empty");
                if (!(v.ld_level > 0 && v.ld_level < 1)) bad("verify.ld_level", "must lie in (0, 1)");
                if (v.local_k < 1) bad("verify.local_k", "must be at least 1");
                if (!(v.interval > 0)) bad("verify.interval", "must be positive");
            }
            break;
    }
}

TailModel make_model(const ModelConfig& m) {
    if (m.slow == "constant") return TailModel::constant(m.alpha, m.c, m.t_min);
    return TailModel::log_power(m.alpha, m.c, m.beta, m.t_min);
}

RoofLaw make_roof_law(const std::string& spec, const TailModel& model) {
    auto parts = split(spec, ':');
    if (parts.empty()) bad("roof", "empty roof spec");
    try {
        if (parts[0] == "continuous" && parts.size() == 1) return RoofLaw::continuous(model);
        if (parts[0] == "lattice" && parts.size() == 3)
            return RoofLaw::ceil_lattice(model, ExactReal::parse(parts[1]).value(), ExactReal::parse(parts[2]).value());
        if (parts[0] == "point" && parts.size() == 2) return RoofLaw::point(ExactReal::parse(parts[1]).value());
    } catch (const DomainError& e) {
        bad("roof", e.what());
    }
    bad("roof", "expected continuous, lattice:a:h or point:v, got '" + spec + "'");
}

SupportClass support_of(const std::string& spec) {
    auto parts = split(spec, ':');
    try {
        if (parts.size() == 1 && parts[0] == "continuous") return SupportClass{};
        if (parts.size() == 3 && parts[0] == "lattice") {
            ExactReal a = ExactReal::parse(parts[1]), h = ExactReal::parse(parts[2]);
            if (!(h.value() > 0)) bad("roof", "lattice spacing must be positive");
            return classify_support({a, a + h});
        }
        if (parts.size() == 2 && parts[0] == "point") {
            ExactReal v = ExactReal::parse(parts[1]);
            if (!(v.value() > 0)) bad("roof", "point roof must be positive");
            SupportClass s;
            s.tag = SupportClass::Tag::Rational;
            s.a = ExactReal{};
            s.h = v;
            s.hbar = v;
            return s;
        }
    } catch (const DomainError& e) {
        bad("roof", e.what());
    }
    bad("roof", "expected continuous, lattice:a:h or point:v, got '" + spec + "'");
}

RoofSpec make_lsv_roof(const std::string& spec) {
    auto parts = split(spec, ':');
    if (parts.size() == 3 && parts[0] == "affine")
        return RoofSpec::affine(parse_real_token(parts[1], "lsv.roof"), parse_real_token(parts[2], "lsv.roof"));
    bad("lsv.roof", "expected affine:p:q, got '" + spec + "'");
}

ProductSet parse_set(const std::string& spec, const std::string& field) {
    auto parts = split(spec, ':');
    if (parts.size() != 4) bad(field, "expected lo:hi:a1:a2, got '" + spec + "'");
    ProductSet s;
    s.base_lo = parse_real_token(parts[0], field);
    s.base_hi = parse_real_token(parts[1], field);
    s.a1 = parse_real_token(parts[2], field);
    s.a2 = parse_real_token(parts[3], field);
    if (!(s.base_hi >= s.base_lo)) bad(field, "base range is empty");
    if (!(s.a2 > s.a1) || !(s.a1 >= 0)) bad(field, "need 0 <= a1 < a2");
    return s;
}

std::vector<double> parse_grid(const std::string& text, const std::string& field) {
    std::vector<double> g;
    if (text.empty()) bad(field, "must not be empty");
    if (text.find(',') != std::string::npos || text.find(':') == std::string::npos) {
        for (const auto& s : split(text, ',')) g.push_back(parse_real_token(s, field));
        return g;
    }
    auto parts = split(text, ':');
    if (parts.size() != 3) bad(field, "expected t0:t1:n or a comma list");
    double a = parse_real_token(parts[0], field), b = parse_real_token(parts[1], field);
    double nd = parse_real_token(parts[2], field);
    if (!(nd >= 1) || nd != std::floor(nd)) bad(field, "point count must be a positive integer");
    auto n = static_cast<std::size_t>(nd);
    if (n == 1) return {a};
    for (std::size_t i = 0; i < n; ++i) g.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    return g;
}

std::pair<double, double> parse_range(const std::string& text, const std::string& field) {
    auto parts = split(text, ':');
    if (parts.size() != 2) bad(field, "expected lo:hi");
    return {parse_real_token(parts[0], field), parse_real_token(parts[1], field)};
}

}  // namespace kmix::cli
