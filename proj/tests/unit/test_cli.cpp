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

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "kmix/error.hpp"
#include "kmix_cli/config.hpp"
#include "kmix_cli/run.hpp"

using namespace kmix;
using namespace kmix::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    int rc = std::system((std::string(KMIX_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("kmix_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("unknown fields are rejected with their path") {
    json j = {{"command", "mix-estimate"}, {"mixing", {{"bogus", 1}}}};
    try {
        config_from_json(j);
        FAIL("accepted an unknown field");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "mixing.bogus");
    }
    CHECK_THROWS_AS(config_from_json(json{{"colour", "red"}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"model", {{"alpha", 0.5}, {"gamma", 2}}}}), ConfigError);
}

TEST_CASE("empty t-grid names the field") {
    auto c = config_from_json(json{{"command", "mix-estimate"}});
    c.mixing.t_grid.clear();
    try {
        validate(c);
        FAIL("empty grid accepted");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "t-grid");
    }
    CHECK_THROWS_AS(parse_grid("", "t-grid"), ConfigError);
}

TEST_CASE("config survives a json round trip") {
    ExperimentConfig c;
    c.command = Command::ConvolveOracle;
    c.seed = 99;
    c.model.alpha = 0.3;
    c.model.slow = "log-power";
    c.model.beta = 1.5;
    c.convolve.k = 17;
    c.mixing.t_grid = {10.0, 20.0, 40.0};
    auto j = config_to_json(c);
    CHECK(j["convolve"]["query_hi"] == "inf");
    auto back = config_from_json(j);
    CHECK(config_to_json(back) == j);
    CHECK(back.convolve.query_hi == std::numeric_limits<double>::infinity());
    CHECK(back.model.beta == 1.5);
}

TEST_CASE("grids and sets") {
    auto g = parse_grid("100:400:4", "t-grid");
    REQUIRE(g.size() == 4);
    CHECK(g[1] == 200.0);
    CHECK(parse_grid("1,2.5,7", "t-grid") == std::vector<double>{1.0, 2.5, 7.0});
    auto s = parse_set("0:inf:0:0.4", "A");
    CHECK(s.base_hi == std::numeric_limits<double>::infinity());
    CHECK(s.a2 == 0.4);
    CHECK_THROWS_AS(parse_set("0:1:0", "A"), ConfigError);
    CHECK(support_of("lattice:pi:1").tag == SupportClass::Tag::PeriodicIrrational);
    CHECK(support_of("lattice:0:1").tag == SupportClass::Tag::Rational);
    CHECK(support_of("continuous").tag == SupportClass::Tag::Aperiodic);
}

TEST_CASE("stable-density output") {
    ExperimentConfig c;
    c.command = Command::StableDensity;
    c.stable.points = 3;
    c.stable.z_min = 1.0;
    c.stable.z_max = 3.0;
    auto r = run(c);
    CHECK(r.exit_code == kExitOk);
    std::istringstream in(r.csv);
    std::string header, row;
    std::getline(in, header);
    CHECK(header == "z,rho");
    std::getline(in, row);
    std::getline(in, row);
    REQUIRE(row.substr(0, 2) == "2,");
    CHECK(row.size() >= 2 + 17);
    CHECK(std::stod(row.substr(2)) == doctest::Approx(0.11936526501745548).epsilon(1e-14));
}

TEST_CASE("identical configs give byte-identical csv") {
    ExperimentConfig c;
    c.command = Command::MixEstimate;
    c.mixing.samples = 20000;
    c.seed = 5;
    CHECK(run(c).csv == run(c).csv);
    c.command = Command::ConvolveOracle;
    CHECK(run(c).csv == run(c).csv);
}

TEST_CASE("binary writes artifacts and maps exit codes") {
    auto d1 = scratch("a"), d2 = scratch("b");
    const std::string args = "mix-estimate --samples 20000 --t-grid 100,200 --seed 3 --out ";
    CHECK(run_cli(args + d1.string()) == 0);
    CHECK(run_cli(args + d2.string()) == 0);
    CHECK(fs::exists(d1 / "manifest.json"));
    CHECK(fs::exists(d1 / "summary.txt"));
    CHECK(slurp(d1 / "mix-estimate.csv") == slurp(d2 / "mix-estimate.csv"));
    auto manifest = json::parse(slurp(d1 / "manifest.json"));
    CHECK(manifest["exit_code"] == 0);
    CHECK(manifest["config"]["seed"] == 3);

    // flags override the file
    auto cfg = scratch("cfg.json");
    std::ofstream(cfg) << json{{"command", "mix-estimate"}, {"seed", 8}, {"mixing", {{"samples", 20000}}}}.dump();
    auto d3 = scratch("c");
    CHECK(run_cli("mix-estimate --config " + cfg.string() + " --seed 3 --t-grid 100,200 --out " + d3.string()) == 0);
    CHECK(slurp(d3 / "mix-estimate.csv") == slurp(d1 / "mix-estimate.csv"));

    CHECK(run_cli("mix-estimate --t-grid ''") == 1);
    std::ofstream(cfg) << json{{"mixing", {{"bogus", 1}}}}.dump();
    CHECK(run_cli("mix-estimate --config " + cfg.string()) == 1);
    CHECK(run_cli("verify --suite nonsense") == 1);
    for (auto& p : {d1, d2, d3, cfg}) fs::remove_all(p);
}
