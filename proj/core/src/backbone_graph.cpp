#include "lf2w/backbone.hpp"

namespace lf2w {

namespace {

Matrix col_of(const Vector& v) {
    Matrix m(v.len(), 1);
    for (std::size_t i = 0; i < v.len(); ++i) m.data()[i] = v[i];
    return m;
}

struct TokenProj {
    std::vector<Slot> k, q, v;      // per head, column vectors
    std::vector<Slot> beta, alpha;  // per head, 1x1
};

TokenProj project_token(Tape& tape, const TapedParams& tp, const BackboneConfig& cfg,
                        const std::string& p, Slot xt) {
    TokenProj out;
    const Slot kfull = tape.silu(tape.matmul(tp.at(p + "w_k"), xt));
    const Slot qfull = tape.silu(tape.matmul(tp.at(p + "w_q"), xt));
    const Slot vfull = tape.matmul(tp.at(p + "w_v"), xt);
    const Slot beta = tape.sigmoid(tape.matmul(tp.at(p + "w_beta"), xt));
    Slot alpha;
    if (cfg.variant == Variant::GatedDelta)
        alpha = tape.sigmoid(tape.add(tape.matmul(tp.at(p + "w_alpha"), xt),
                                      tp.at(p + "w_alpha_bias")));
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
        out.k.push_back(tape.l2_normalize(tape.slice_rows(kfull, h * cfg.d_k, cfg.d_k), kL2Eps));
        out.q.push_back(tape.l2_normalize(tape.slice_rows(qfull, h * cfg.d_k, cfg.d_k), kL2Eps));
        out.v.push_back(tape.slice_rows(vfull, h * cfg.d_v, cfg.d_v));
        out.beta.push_back(tape.slice_rows(beta, h, 1));
        if (cfg.variant == Variant::GatedDelta) out.alpha.push_back(tape.slice_rows(alpha, h, 1));
    }
    return out;
}

// Post-attention half of the block: output norm, W_O, residual, SwiGLU FFN.
Slot finish_block(Tape& tape, const TapedParams& tp, const std::string& p,
                  Slot x, Slot o_concat) {
    const Slot ohat = tape.rmsnorm(o_concat, tp.at(p + "rms_out"), kRmsEps);
    const Slot xp = tape.add(x, tape.matmul(tp.at(p + "w_o"), ohat));
    const Slot xbar = tape.rmsnorm(xp, tp.at(p + "rms_ffn"), kRmsEps);
    const Slot ffn = tape.matmul(tp.at(p + "w_ffn2"),
                                 tape.swiglu(tape.matmul(tp.at(p + "w_ffn1"), xbar)));
    return tape.add(xp, ffn);
}

// Chunkwise attention core for one head over tokens [t0, t0+c).
// Returns per-token d_v x 1 output slots and the updated state slot.
std::pair<std::vector<Slot>, Slot> chunk_core(Tape& tape, const BackboneConfig& cfg,
                                              const std::vector<TokenProj>& proj,
                                              std::size_t head, std::size_t t0,
                                              std::size_t c, Slot s0) {
    std::vector<Slot> krows, qrows, vrows, betas, alphas;
    for (std::size_t i = 0; i < c; ++i) {
        krows.push_back(proj[t0 + i].k[head]);
        qrows.push_back(proj[t0 + i].q[head]);
        vrows.push_back(proj[t0 + i].v[head]);
        betas.push_back(proj[t0 + i].beta[head]);
        if (cfg.variant == Variant::GatedDelta) alphas.push_back(proj[t0 + i].alpha[head]);
    }
    const Slot kb = tape.stack_rows(krows);
    const Slot qb = tape.stack_rows(qrows);
    const Slot vb = tape.stack_rows(vrows);

    std::vector<Slot> o(c);
    Slot s_out;
    if (cfg.variant == Variant::LinearAttention) {
        s_out = tape.add(s0, tape.matmul(tape.transpose(vb), kb));
        const Slot qkt = tape.matmul(qb, tape.transpose(kb));
        const Slot masked = tape.mul(qkt, tape.constant(lower_mask_incl(c)));
        const Slot ob = tape.add(tape.matmul(masked, vb),
                                 tape.matmul(qb, tape.transpose(s0)));
        for (std::size_t i = 0; i < c; ++i)
            o[i] = tape.transpose(tape.slice_rows(ob, i, 1));
        return {o, s_out};
    }

    const bool gated = cfg.variant == Variant::GatedDelta;
    const Slot beta_col = tape.vconcat(betas);
    // R[t][s] = prod of decay over (s, t]; doubles as the inclusive causal mask.
    const Slot rmat = gated ? tape.decay_ratio(tape.vconcat(alphas))
                            : tape.constant(lower_mask_incl(c));
    const Slot pcum = gated ? tape.cumprod(tape.vconcat(alphas))
                            : tape.constant(Matrix(c, 1, 1.0));

    const Slot gram = tape.matmul(kb, tape.transpose(kb));
    const Slot lmat = tape.add(tape.constant(identity(c)),
                               tape.mul(tape.constant(strict_lower_mask(c)),
                                        tape.row_scale(tape.mul(gram, rmat), beta_col)));
    const Slot ks0t = tape.matmul(kb, tape.transpose(s0));
    const Slot rhs = tape.sub(tape.row_scale(vb, beta_col),
                              tape.row_scale(ks0t, tape.mul(beta_col, pcum)));
    const Slot m = tape.unit_lower_solve(lmat, rhs);  // pseudo-value rows

    const Slot r_last = tape.transpose(tape.slice_rows(rmat, c - 1, 1));
    const Slot p_last = tape.slice_rows(pcum, c - 1, 1);
    s_out = tape.add(tape.scale(s0, p_last),
                     tape.matmul(tape.transpose(tape.row_scale(m, r_last)), kb));

    const Slot qkt = tape.mul(tape.matmul(qb, tape.transpose(kb)), rmat);
    const Slot ob = tape.add(tape.matmul(qkt, m),
                             tape.row_scale(tape.matmul(qb, tape.transpose(s0)), pcum));
    for (std::size_t i = 0; i < c; ++i)
        o[i] = tape.transpose(tape.slice_rows(ob, i, 1));
    return {o, s_out};
}

} // namespace

TapedParams::TapedParams(Tape& tape, const ParamStore& ps) {
    for (const auto& name : ps.names()) slots_.emplace(name, tape.leaf(ps.get(name)));
}

Slot TapedParams::at(const std::string& name) const {
    auto it = slots_.find(name);
    detail::require(it != slots_.end(), "TapedParams: unknown name " + name);
    return it->second;
}

void TapedParams::accumulate_grads_into(const Tape& tape, ParamStore& ps) const {
    for (const auto& [name, slot] : slots_) {
        Matrix& g = ps.grad(name);
        const Matrix& a = tape.adjoint(slot);
        for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += a.data()[i];
    }
}

TapedState taped_state(Tape& tape, const BackboneState& st, bool detach_input) {
    TapedState ts;
    ts.s.resize(st.size());
    for (std::size_t l = 0; l < st.size(); ++l)
        for (const Matrix& s : st[l].s) {
            Slot slot = tape.leaf(s);
            ts.s[l].push_back(detach_input ? tape.detach(slot) : slot);
        }
    return ts;
}

BackboneState extract_state(const Tape& tape, const TapedState& ts,
                            const BackboneConfig& cfg, std::uint64_t t) {
    BackboneState out(cfg.n_layers);
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        for (Slot s : ts.s[l]) out[l].s.push_back(tape.value(s));
        out[l].t = t;
    }
    return out;
}

std::vector<Slot> build_recurrent(Tape& tape, const TapedParams& tp,
                                  const BackboneConfig& cfg, TapedState& state,
                                  const std::vector<Slot>& tokens,
                                  const std::string& prefix) {
    std::vector<Slot> xs = tokens;
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        const std::string p = prefix + "l" + std::to_string(l) + ".";
        std::vector<Slot> ys(xs.size());
        for (std::size_t t = 0; t < xs.size(); ++t) {
            const Slot xt = tape.rmsnorm(xs[t], tp.at(p + "rms_att"), kRmsEps);
            const TokenProj proj = project_token(tape, tp, cfg, p, xt);
            std::vector<Slot> ohs;
            for (std::size_t h = 0; h < cfg.n_heads; ++h) {
                Slot s = state.s[l][h];
                if (cfg.variant == Variant::LinearAttention) {
                    s = tape.add(s, tape.outer(proj.v[h], proj.k[h]));
                } else {
                    const Slot sk = tape.matmul(s, proj.k[h]);
                    Slot rem = tape.sub(s, tape.scale(tape.outer(sk, proj.k[h]), proj.beta[h]));
                    if (cfg.variant == Variant::GatedDelta) rem = tape.scale(rem, proj.alpha[h]);
                    s = tape.add(rem, tape.scale(tape.outer(proj.v[h], proj.k[h]), proj.beta[h]));
                }
                state.s[l][h] = s;
                ohs.push_back(tape.matmul(s, proj.q[h]));
            }
            ys[t] = finish_block(tape, tp, p, xs[t], tape.vconcat(ohs));
        }
        xs = std::move(ys);
    }
    return xs;
}

std::vector<Slot> build_chunkwise(Tape& tape, const TapedParams& tp,
                                  const BackboneConfig& cfg, TapedState& state,
                                  const std::vector<Slot>& tokens,
                                  const std::string& prefix) {
    const std::size_t n = tokens.size();
    std::vector<Slot> xs = tokens;
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        const std::string p = prefix + "l" + std::to_string(l) + ".";
        std::vector<TokenProj> proj(n);
        for (std::size_t t = 0; t < n; ++t) {
            const Slot xt = tape.rmsnorm(xs[t], tp.at(p + "rms_att"), kRmsEps);
            proj[t] = project_token(tape, tp, cfg, p, xt);
        }
        std::vector<std::vector<Slot>> o_per_head(cfg.n_heads);
        for (std::size_t h = 0; h < cfg.n_heads; ++h) {
            Slot s = state.s[l][h];
            std::vector<Slot> oh;
            // final chunk may be shorter; no padding ever touches the state
            for (std::size_t t0 = 0; t0 < n; t0 += cfg.chunk_size) {
                const std::size_t c = std::min(cfg.chunk_size, n - t0);
                auto [o, s_next] = chunk_core(tape, cfg, proj, h, t0, c, s);
                for (Slot os : o) oh.push_back(os);
                s = s_next;
            }
            state.s[l][h] = s;
            o_per_head[h] = std::move(oh);
        }
        std::vector<Slot> ys(n);
        for (std::size_t t = 0; t < n; ++t) {
            std::vector<Slot> ohs;
            for (std::size_t h = 0; h < cfg.n_heads; ++h) ohs.push_back(o_per_head[h][t]);
            ys[t] = finish_block(tape, tp, p, xs[t], tape.vconcat(ohs));
        }
        xs = std::move(ys);
    }
    return xs;
}

ForwardResult forward_chunkwise(const BackboneState& states_in,
                                const std::vector<Vector>& x_seq,
                                const ParamStore& ps, const BackboneConfig& cfg,
                                const std::string& prefix) {
    Tape tape;
    TapedParams tp(tape, ps);
    TapedState ts = taped_state(tape, states_in, /*detach_input=*/false);
    std::vector<Slot> tokens;
    tokens.reserve(x_seq.size());
    for (const Vector& x : x_seq) tokens.push_back(tape.constant(col_of(x)));
    const std::vector<Slot> ys = build_chunkwise(tape, tp, cfg, ts, tokens, prefix);
    ForwardResult out;
    out.states_out = extract_state(tape, ts, cfg,
                                   (states_in.empty() ? 0 : states_in[0].t) + x_seq.size());
    out.y.reserve(ys.size());
    for (Slot y : ys) {
        const Matrix& m = tape.value(y);
        Vector v(m.size());
        for (std::size_t i = 0; i < m.size(); ++i) v[i] = m.data()[i];
        out.y.push_back(std::move(v));
    }
    return out;
}

} // namespace lf2w
