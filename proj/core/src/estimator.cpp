#include "lf2w/estimator.hpp"

#include <cmath>

namespace lf2w {

namespace {

Matrix uniform_mat(std::size_t rows, std::size_t cols, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return m;
}

Matrix col_of(const Vector& v) {
    Matrix m(v.len(), 1);
    for (std::size_t i = 0; i < v.len(); ++i) m.data()[i] = v[i];
    return m;
}

Vector vec_of(const Matrix& m) {
    Vector v(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) v[i] = m.data()[i];
    return v;
}

} // namespace

void EstimatorConfig::validate() const {
    backbone.validate();
    detail::require(d_d + d_p == backbone.d_model,
                    "estimator: d_d + d_p must equal d_model (concatenation fusion)");
    detail::require(h_d >= 1 && h_m >= 1 && d_o >= 1 && d_vel >= 1,
                    "estimator: dimensions must be positive");
}

void init_estimator_params(ParamStore& ps, const EstimatorConfig& cfg,
                           std::mt19937_64& rng) {
    cfg.validate();
    ps.add("enc_e1.w", uniform_mat(cfg.extero_hidden, cfg.h_d, std::sqrt(1.0 / cfg.h_d), rng));
    ps.add("enc_e1.b", Matrix(cfg.extero_hidden, 1));
    ps.add("enc_e2.w", uniform_mat(cfg.d_d, cfg.extero_hidden,
                                   std::sqrt(1.0 / cfg.extero_hidden), rng));
    ps.add("enc_e2.b", Matrix(cfg.d_d, 1));
    ps.add("enc_p.w", uniform_mat(cfg.d_p, cfg.d_o, std::sqrt(1.0 / cfg.d_o), rng));
    ps.add("enc_p.b", Matrix(cfg.d_p, 1));
    init_backbone_params(ps, cfg.backbone, rng, "bb.");
    const double inv_dm = std::sqrt(1.0 / cfg.backbone.d_model);
    ps.add("head_m.w", uniform_mat(cfg.h_m, cfg.backbone.d_model, inv_dm, rng));
    ps.add("head_m.b", Matrix(cfg.h_m, 1));
    ps.add("head_v.w", uniform_mat(cfg.d_vel, cfg.backbone.d_model, inv_dm, rng));
    ps.add("head_v.b", Matrix(cfg.d_vel, 1));
}

Vector encode(const Observation& obs, const ParamStore& ps, const EstimatorConfig& cfg) {
    detail::require(obs.extero.len() == cfg.h_d && obs.proprio.len() == cfg.d_o,
                    "encode: observation dimensions mismatch config");
    const Vector h = silu(add(matvec(ps.get("enc_e1.w"), obs.extero),
                              vec_of(ps.get("enc_e1.b"))));
    const Vector zd = add(matvec(ps.get("enc_e2.w"), h), vec_of(ps.get("enc_e2.b")));
    const Vector zp = add(matvec(ps.get("enc_p.w"), obs.proprio), vec_of(ps.get("enc_p.b")));
    Vector x(cfg.backbone.d_model);
    for (std::size_t i = 0; i < cfg.d_d; ++i) x[i] = zd[i];
    for (std::size_t i = 0; i < cfg.d_p; ++i) x[cfg.d_d + i] = zp[i];
    return x;
}

EstimatorOutput decode(const Vector& y, const ParamStore& ps, const EstimatorConfig& cfg) {
    detail::require(y.len() == cfg.backbone.d_model, "decode: feature length mismatch");
    EstimatorOutput out;
    out.m_hat = add(matvec(ps.get("head_m.w"), y), vec_of(ps.get("head_m.b")));
    out.v_hat = add(matvec(ps.get("head_v.w"), y), vec_of(ps.get("head_v.b")));
    return out;
}

EstimatorOutput estimator_step(BackboneState& states, const Observation& obs,
                               const ParamStore& ps, const EstimatorConfig& cfg) {
    const Vector x = encode(obs, ps, cfg);
    const Vector y = forward_recurrent(states, x, ps, cfg.backbone, "bb.");
    return decode(y, ps, cfg);
}

double est_loss(const EstimatorOutput& out, const Vector& m, const Vector& v,
                double lambda_m, double lambda_v) {
    if (lambda_m <= 0 || lambda_v <= 0)
        throw std::invalid_argument("est_loss: lambda weights must be positive");
    detail::require(out.m_hat.len() == m.len() && out.v_hat.len() == v.len(),
                    "est_loss: target length mismatch");
    double lm = 0, lv = 0;
    for (std::size_t i = 0; i < m.len(); ++i) {
        const double d = out.m_hat[i] - m[i];
        lm += d * d;
    }
    for (std::size_t i = 0; i < v.len(); ++i) {
        const double d = out.v_hat[i] - v[i];
        lv += d * d;
    }
    return lambda_m * lm + lambda_v * lv;
}

Slot build_encode(Tape& tape, const TapedParams& tp, const EstimatorConfig& cfg,
                  const Observation& obs) {
    const Slot e = tape.constant(col_of(obs.extero));
    const Slot p = tape.constant(col_of(obs.proprio));
    const Slot h = tape.silu(tape.add(tape.matmul(tp.at("enc_e1.w"), e), tp.at("enc_e1.b")));
    const Slot zd = tape.add(tape.matmul(tp.at("enc_e2.w"), h), tp.at("enc_e2.b"));
    const Slot zp = tape.add(tape.matmul(tp.at("enc_p.w"), p), tp.at("enc_p.b"));
    return tape.vconcat({zd, zp});
}

TapedOutput build_decode(Tape& tape, const TapedParams& tp, const EstimatorConfig& cfg,
                         Slot y) {
    (void)cfg;
    TapedOutput out;
    out.m_hat = tape.add(tape.matmul(tp.at("head_m.w"), y), tp.at("head_m.b"));
    out.v_hat = tape.add(tape.matmul(tp.at("head_v.w"), y), tp.at("head_v.b"));
    return out;
}

Slot build_est_loss(Tape& tape, const TapedOutput& out, const Vector& m, const Vector& v,
                    double lambda_m, double lambda_v) {
    if (lambda_m <= 0 || lambda_v <= 0)
        throw std::invalid_argument("est_loss: lambda weights must be positive");
    const Slot tm = tape.constant(col_of(m));
    const Slot tv = tape.constant(col_of(v));
    return tape.add(tape.cscale(tape.sse(out.m_hat, tm), lambda_m),
                    tape.cscale(tape.sse(out.v_hat, tv), lambda_v));
}

} // namespace lf2w
