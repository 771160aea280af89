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
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kmix/exact.hpp"
#include "kmix/flow.hpp"
#include "kmix/regvar.hpp"

namespace kmix::cli {

enum class Command { StableDensity, ConvolveOracle, LsvTail, MixEstimate, Verify };

std::string command_name(Command c);
Command parse_command(const std::string& name);

struct ModelConfig {
    double alpha = 0.5;
    std::string slow = "constant";  // or "log-power"
    double c = 1.0;
    double beta = 0.0;
    double t_min = 1.0;
};

struct StableConfig {
    double z_min = 0.05;
    double z_max = 10.0;
    std::size_t points = 200;
};

struct ConvolveConfig {
    double step = 1.0;
    double cutoff = 4096.0;
    std::uint64_t k = 4;
    double query_lo = 0.0;
    double query_hi = std::numeric_limits<double>::infinity();
    std::string rule = "mean-preserving";  // or "cdf-increment"
};

struct LsvConfig {
    double r = 1.5;
    std::size_t n_max = 4096;
    std::uint64_t orbit = 10'000'000;
    std::string roof = "affine:1:1";
};

struct MixingConfig {
    std::string base = "iid";        // or "lsv"
    std::string roof = "continuous";  // "lattice:a:h", "point:v" with exact reals
    std::string set_a = "0:inf:0:0.4";
    std::string set_b = "0:inf:0:0.4";
    std::vector<double> t_grid{100.0, 1000.0};
    std::uint64_t samples = 1'000'000;
    std::string method = "mc";  // or "renewal"
    double step = 0.25;
};

struct VerifyConfig {
    std::string suite = "all";
    std::uint64_t llt_k = 1024;
    double eps = 0.1;
    std::uint64_t anticonc_k_max = 1024;
    std::vector<std::uint64_t> ld_k{50, 200};
    double ld_level = 0.01;
    std::uint64_t local_k = 256;
    double interval = 1.0;
};

struct ExperimentConfig {
    Command command = Command::Verify;
    std::uint64_t seed = 1;
    ModelConfig model;
    StableConfig stable;
    ConvolveConfig convolve;
    LsvConfig lsv;
    MixingConfig mixing;
    VerifyConfig verify;
    std::string out;
};

// Strict: unknown keys raise ConfigError naming the dotted path.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
ModelConfig model_from_json(const nlohmann::json& j, const std::string& path = "model");
nlohmann::json read_json_file(const std::string& path);

// Raises ConfigError naming the first invalid field.
void validate(const ExperimentConfig& c);

TailModel make_model(const ModelConfig& m);
RoofLaw make_roof_law(const std::string& spec, const TailModel& model);
RoofSpec make_lsv_roof(const std::string& spec);
SupportClass support_of(const std::string& roof_spec);
// "lo:hi:a1:a2"; "inf" allowed for hi.
ProductSet parse_set(const std::string& spec, const std::string& field);
// "t0:t1:n" (linear) or "a,b,c".
std::vector<double> parse_grid(const std::string& text, const std::string& field);
// "lo:hi".
std::pair<double, double> parse_range(const std::string& text, const std::string& field);

}  // namespace kmix::cli
