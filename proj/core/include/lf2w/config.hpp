#pragma once

// JSON run configuration: nested groups (backbone / estimator / train / eval),
// strict unknown-key rejection, round-trippable serialization. Precedence is
// defaults < config file < command-line flags; the flag layer lives in the CLI.

#include <string>
#include <vector>

#include "lf2w/trainer.hpp"

namespace lf2w {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EvalConfig {
    std::vector<std::string> protocols = {"P1", "P2", "P3", "P4", "P5"};
    std::vector<double> deltas = {0.2, 0.4, 0.6};
    std::size_t seeds = 20;
    double rmse_threshold = 0.1;  // success = backward-map RMSE below this
};

struct RunConfig {
    EstimatorConfig estimator;  // includes the backbone config
    TrainConfig train;
    EvalConfig eval;
    std::string out_dir = "out";

    void validate() const;
};

std::string run_config_to_json(const RunConfig& cfg);

// Parses a JSON document; every present key overrides the default, any key
// outside the schema throws config_error naming the offender.
RunConfig run_config_from_json(const std::string& text);

RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& cfg);

} // namespace lf2w
