#pragma once

// Supervised rollout-window training with state carry + detach, plus the PPO
// loss functions and GAE as standalone verified operations.

#include <functional>

#include "lf2w/estimator.hpp"
#include "lf2w/taskgen.hpp"

namespace lf2w {

struct TrainConfig {
    std::size_t window_k = 320;
    std::size_t batch_envs = 4;
    double learning_rate = 3e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double lambda_m = 1.0;
    double lambda_v = 1.0;
    double alpha = 1.0;       // estimator-loss mixing weight in the total objective
    double grad_clip = 1.0;   // global-norm clip
    std::size_t total_windows = 200;
    std::uint64_t seed = 0;

    // episode schedule
    double delta = 0.4;
    Protocol protocol = Protocol::p1();
    double speed = 0.25;  // cells per step

    void validate(const BackboneConfig& bb) const;
};

struct OptimizerState {
    std::map<std::string, Matrix> m;  // first moment
    std::map<std::string, Matrix> v;  // second moment
    std::uint64_t step = 0;
};

OptimizerState make_optimizer_state(const ParamStore& ps);

// Adam with global-norm gradient clipping; consumes ps gradients.
void adam_step(ParamStore& ps, OptimizerState& opt, const TrainConfig& cfg);

struct WindowBatchEntry {
    std::vector<Observation> observations;
    std::vector<Vector> target_m;
    std::vector<Vector> target_v;
    BackboneState states_in;
};

struct WindowMetrics {
    std::size_t window_index = 0;
    double loss = 0;       // alpha * mean per-step estimator loss
    double map_rmse = 0;
    double vel_rmse = 0;
    double wall_seconds = 0;
    double grad_norm = 0;
};

// One gradient step over a K-step window batch via the chunkwise forward.
// Carried states are detached; states_in is never mutated.
WindowMetrics train_window(ParamStore& ps, const std::vector<WindowBatchEntry>& batch,
                           std::vector<BackboneState>& states_out,
                           OptimizerState& opt, const EstimatorConfig& est_cfg,
                           const TrainConfig& cfg);

struct TrainResult {
    std::vector<WindowMetrics> metrics;
};

// Full training schedule: per-env episode streams, windows with carry,
// zero-state reset at episode boundaries. Deterministic given cfg.seed.
// on_window (may be null) receives each window's metrics as they complete.
TrainResult run_training(ParamStore& ps, OptimizerState& opt,
                         const EstimatorConfig& est_cfg, const TrainConfig& cfg,
                         const std::function<void(const WindowMetrics&)>& on_window = {});

// ---- PPO operations (pure, no simulator) ----

struct PpoBatch {
    std::vector<double> logp_old;
    std::vector<double> logp_new;
    std::vector<double> advantages;
    std::vector<double> returns;
    std::vector<double> values;
    std::vector<double> entropy;
    double clip_eps = 0.2;
    double c_value = 0.5;
    double c_entropy = 0.01;

    void validate() const;
};

struct GaeResult {
    std::vector<double> advantages;
    std::vector<double> returns;
};

// Standard GAE(gamma, lambda) recursion; bootstrap_value stands in for the
// value after the final step.
GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      double gamma, double lam, double bootstrap_value = 0.0);

struct PpoLosses {
    double clip_loss = 0;     // E[min(r A, clip(r) A)]
    double value_loss = 0;    // E[(V - R)^2]
    double entropy_loss = 0;  // E[H]
    double total = 0;         // -clip + c_V * value - c_H * entropy
};

PpoLosses ppo_losses(const PpoBatch& batch);

} // namespace lf2w
