#pragma once

// DeltaNet-style recurrent memory stack: per-step recurrent form, chunkwise
// parallel form, and the two ablation memory variants (explicit decay gate,
// additive linear attention), all sharing one parameterization.

#include <cstdint>
#include <string>
#include <vector>

#include "lf2w/linalg.hpp"
#include "lf2w/tape.hpp"

namespace lf2w {

enum class Variant { DeltaRule, GatedDelta, LinearAttention };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& s);

struct BackboneConfig {
    std::size_t n_layers = 2;
    std::size_t d_model = 128;
    std::size_t d_k = 32;   // per head
    std::size_t d_v = 32;   // per head
    std::size_t n_heads = 2;
    std::size_t d_ff = 256;
    std::size_t chunk_size = 16;
    Variant variant = Variant::DeltaRule;
    Precision precision = Precision::f64;

    void validate() const;
};

inline constexpr double kL2Eps = 1e-8;
inline constexpr double kRmsEps = 1e-6;

// Per-layer per-head memory matrix S (d_v x d_k) plus step counter.
struct LayerState {
    std::vector<Matrix> s;  // one per head
    std::uint64_t t = 0;
};

using BackboneState = std::vector<LayerState>;  // one per layer

BackboneState zero_state(const BackboneConfig& cfg);
std::size_t state_bytes(const BackboneState& st);

// Registers all layer parameters under "<prefix>l<i>." names.
// Projections are uniform +-sqrt(1/fan_in); rms gains 1; w_beta biased so
// beta ~ 0.5 at unit-scale inputs, w_alpha so alpha ~ 0.95.
void init_backbone_params(ParamStore& ps, const BackboneConfig& cfg,
                          std::mt19937_64& rng, const std::string& prefix = "");

// ---- recurrent (inference) path ----

// l2_normalize(silu(w x)); the key/query feature map.
Vector feature_map(const Vector& x, const Matrix& w);

// One delta-rule write. removal_sign = +1 is the correct remove-then-write;
// the check suite passes -1 to verify the equivalence tests catch a wrong rule.
void delta_step(Matrix& s, const Vector& k, const Vector& v, double beta,
                double alpha, Variant variant, double removal_sign = 1.0);

Vector readout(const Matrix& s, const Vector& q);

// Full block: pre-norm -> projections -> per-head delta write/read -> output
// norm + projection + residual -> pre-norm SwiGLU FFN + residual.
Vector layer_step(LayerState& state, const Vector& x, const ParamStore& ps,
                  const std::string& prefix, const BackboneConfig& cfg,
                  double removal_sign = 1.0);

Vector forward_recurrent(BackboneState& states, const Vector& x,
                         const ParamStore& ps, const BackboneConfig& cfg,
                         const std::string& prefix = "", double removal_sign = 1.0);

// ---- chunkwise building blocks (plain, f64) ----

struct UtResult {
    Matrix t;  // C x C
    Matrix w;  // C x d_k
    Matrix u;  // C x d_v
};

// T = (I + strictLower(diag(beta) K K^T))^{-1} diag(beta), by forward
// substitution; W = T K, U = T V.
UtResult ut_transform(const Matrix& k_blk, const Matrix& v_blk, const Vector& beta_blk);

// ---- taped graph builders ----

// Parameter leaves for one tape, created once per tape and shared.
class TapedParams {
public:
    TapedParams(Tape& tape, const ParamStore& ps);
    Slot at(const std::string& name) const;
    // Adds each leaf's adjoint into ps.grad(name). Call after tape.backward().
    void accumulate_grads_into(const Tape& tape, ParamStore& ps) const;

private:
    std::map<std::string, Slot> slots_;
};

struct TapedState {
    std::vector<std::vector<Slot>> s;  // [layer][head]
};

TapedState taped_state(Tape& tape, const BackboneState& st, bool detach_input);

// Reads final state values back out of the tape (detached by construction).
BackboneState extract_state(const Tape& tape, const TapedState& ts,
                            const BackboneConfig& cfg, std::uint64_t t);

// Builds the L-layer forward over a token sequence; both return one d_model
// output slot per token and the final state slots.
std::vector<Slot> build_recurrent(Tape& tape, const TapedParams& tp,
                                  const BackboneConfig& cfg, TapedState& state,
                                  const std::vector<Slot>& tokens,
                                  const std::string& prefix = "");

std::vector<Slot> build_chunkwise(Tape& tape, const TapedParams& tp,
                                  const BackboneConfig& cfg, TapedState& state,
                                  const std::vector<Slot>& tokens,
                                  const std::string& prefix = "");

// Convenience non-tape wrappers used by equivalence checks.
struct ForwardResult {
    std::vector<Vector> y;
    BackboneState states_out;
};

ForwardResult forward_chunkwise(const BackboneState& states_in,
                                const std::vector<Vector>& x_seq,
                                const ParamStore& ps, const BackboneConfig& cfg,
                                const std::string& prefix = "");

} // namespace lf2w
