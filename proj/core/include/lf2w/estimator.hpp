#pragma once

// Terrain-memory estimator: encode exteroception + proprioception into one
// fused token, run the memory backbone, decode a body-centric elevation
// window and a velocity estimate.

#include "lf2w/backbone.hpp"

namespace lf2w {

struct Observation {
    Vector extero;   // forward elevation window, length h_d
    Vector proprio;  // commanded velocity, realized displacement, facing flag
};

struct EstimatorOutput {
    Vector m_hat;  // body-centric elevation window, length h_m
    Vector v_hat;  // along-track velocity estimate, length d_vel
};

struct EstimatorConfig {
    std::size_t h_d = 25;         // extero samples, covers [+0.1, +2.5] ahead
    std::size_t d_o = 3;          // proprio dims
    std::size_t h_m = 25;         // map samples, covers [-1.0, +1.4] around the agent
    std::size_t d_vel = 1;
    std::size_t extero_hidden = 32;
    std::size_t d_d = 64;         // extero embedding; d_d + d_p == d_model
    std::size_t d_p = 64;
    BackboneConfig backbone;

    void validate() const;
};

void init_estimator_params(ParamStore& ps, const EstimatorConfig& cfg,
                           std::mt19937_64& rng);

// ---- raw (inference) path ----

// [extero MLP ; proprio linear] concatenation fusion; length d_model.
Vector encode(const Observation& obs, const ParamStore& ps, const EstimatorConfig& cfg);

EstimatorOutput decode(const Vector& y, const ParamStore& ps, const EstimatorConfig& cfg);

// One full estimator step in serial recurrent mode.
EstimatorOutput estimator_step(BackboneState& states, const Observation& obs,
                               const ParamStore& ps, const EstimatorConfig& cfg);

// lambda_m ||m_hat - m||^2 + lambda_v ||v_hat - v||^2
double est_loss(const EstimatorOutput& out, const Vector& m, const Vector& v,
                double lambda_m, double lambda_v);

// ---- taped path ----

Slot build_encode(Tape& tape, const TapedParams& tp, const EstimatorConfig& cfg,
                  const Observation& obs);

struct TapedOutput {
    Slot m_hat, v_hat;
};

TapedOutput build_decode(Tape& tape, const TapedParams& tp, const EstimatorConfig& cfg,
                         Slot y);

// Returns the scalar slot lambda_m*sse(m) + lambda_v*sse(v).
Slot build_est_loss(Tape& tape, const TapedOutput& out, const Vector& m, const Vector& v,
                    double lambda_m, double lambda_v);

} // namespace lf2w
