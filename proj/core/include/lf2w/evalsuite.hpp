#pragma once

// Evaluation suite: backward-retrieval RMSE curves against the mean-predictor
// baseline, the protocol x terrain-difficulty grid, associative-recall probes,
// and a constant-time inference latency profile.

#include "lf2w/config.hpp"

namespace lf2w {

struct RmseEval {
    std::string protocol;
    double delta = 0;
    std::size_t seeds = 0;
    std::vector<double> rmse_trace;  // per backward step, mean over seeds
    double mean_rmse = 0;            // pooled over backward steps and seeds
    double baseline_rmse = 0;        // per-track mean predictor, pooled
    double success_rate = 0;         // fraction of seeds with RMSE < threshold
};

// Runs n_seeds fresh episodes in recurrent mode and scores the backward-phase
// elevation map error. Deterministic given seed0; seeds run in parallel.
RmseEval eval_backward_rmse(const ParamStore& ps, const EstimatorConfig& est_cfg,
                            const Protocol& protocol, double delta,
                            std::size_t n_seeds, std::uint64_t seed0,
                            double threshold, double speed = 0.25);

struct EvalReport {
    std::string variant;
    double rmse_threshold = 0;
    std::vector<RmseEval> cells;
};

EvalReport eval_protocol_grid(const ParamStore& ps, const EstimatorConfig& est_cfg,
                              const EvalConfig& eval_cfg, std::uint64_t seed0,
                              double speed = 0.25);

void write_report_json(const EvalReport& report, std::ostream& os);
void write_report_csv(const EvalReport& report, std::ostream& os);

// ---- associative recall probes ----

// Hand-set single-head memory: write each pair with the given variant
// (beta = 1), then read back in query order. Returns max |S q - v| error.
double recall_error(const RecallTask& task, Variant variant);

// ---- latency / constant-state profile ----

struct LatencyProfile {
    std::vector<double> step_seconds;  // one entry per inference step
    double mean_seconds = 0;
    double slope_per_step = 0;   // least-squares slope of step time vs index
    std::size_t state_bytes_start = 0;
    std::size_t state_bytes_end = 0;
};

// Times n_steps recurrent estimator steps on a synthetic observation stream.
LatencyProfile bench_inference(const ParamStore& ps, const EstimatorConfig& est_cfg,
                               std::size_t n_steps, std::uint64_t seed = 0);

} // namespace lf2w
