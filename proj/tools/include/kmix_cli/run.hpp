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

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kmix/verify.hpp"
#include "kmix_cli/config.hpp"

namespace kmix::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInconclusive = 2;

struct RunResult {
    int exit_code = kExitOk;
    std::string csv;           // header plus rows, 17 significant digits
    std::string summary;       // human readable
    nlohmann::json budgets = nlohmann::json::array();
    std::vector<CheckReport> reports;  // verify only
};

// Column list of the CSV written by each subcommand.
std::string csv_header(Command c);

// Pure: computes the artifacts without touching the filesystem.
RunResult run(const ExperimentConfig& config);

nlohmann::json report_to_json(const CheckReport& r);

// Runs and writes artifacts. With config.out set, DIR/<command>.csv,
// DIR/manifest.json, DIR/summary.txt (and DIR/report.json for verify) are
// written; otherwise the CSV goes to out and the summary to err.
int execute(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

}  // namespace kmix::cli
