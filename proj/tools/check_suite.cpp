#include "check_suite.hpp"

#include <cmath>

namespace lf2w {

namespace {

BackboneConfig small_cfg(Variant variant, std::size_t chunk) {
    BackboneConfig cfg;
    cfg.n_layers = 2;
    cfg.d_model = 32;
    cfg.d_k = 8;
    cfg.d_v = 8;
    cfg.n_heads = 2;
    cfg.d_ff = 64;
    cfg.chunk_size = chunk;
    cfg.variant = variant;
    return cfg;
}

std::vector<Vector> random_tokens(std::size_t n, std::size_t d, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vector> xs(n, Vector(d));
    for (auto& x : xs)
        for (std::size_t i = 0; i < d; ++i) x[i] = u(rng);
    return xs;
}

double equivalence_error(Variant variant, std::size_t chunk, std::uint64_t seed,
                         double removal_sign) {
    const BackboneConfig cfg = small_cfg(variant, chunk);
    std::mt19937_64 rng(seed);
    ParamStore ps;
    init_backbone_params(ps, cfg, rng);
    const std::vector<Vector> xs = random_tokens(48, cfg.d_model, rng);

    BackboneState rec = zero_state(cfg);
    std::vector<Vector> y_rec;
    for (const Vector& x : xs)
        y_rec.push_back(forward_recurrent(rec, x, ps, cfg, "", removal_sign));

    const ForwardResult cw = forward_chunkwise(zero_state(cfg), xs, ps, cfg);
    double worst = 0;
    for (std::size_t t = 0; t < xs.size(); ++t)
        worst = std::max(worst, max_abs_diff(y_rec[t], cw.y[t]));
    for (std::size_t l = 0; l < cfg.n_layers; ++l)
        for (std::size_t h = 0; h < cfg.n_heads; ++h)
            worst = std::max(worst, max_abs_diff(rec[l].s[h], cw.states_out[l].s[h]));
    return worst;
}

CheckResult check_equivalence(std::uint64_t seed) {
    CheckResult r{"recurrent/chunkwise equivalence", false, 0, 1e-9};
    for (Variant v : {Variant::DeltaRule, Variant::GatedDelta, Variant::LinearAttention})
        for (std::size_t c : {1, 2, 4, 8, 16, 32})
            r.worst = std::max(r.worst, equivalence_error(v, c, seed, 1.0));
    r.passed = r.worst <= r.tolerance;
    return r;
}

CheckResult check_ut_identity(std::uint64_t seed) {
    CheckResult r{"UT transform identity", false, 0, 1e-11};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t c = 16, d_k = 8, d_v = 8;
    Matrix k_blk(c, d_k), v_blk(c, d_v);
    Vector beta(c);
    for (std::size_t t = 0; t < c; ++t) {
        Vector k(d_k);
        for (std::size_t i = 0; i < d_k; ++i) k[i] = u(rng);
        k = l2_normalize(k, kL2Eps);
        for (std::size_t i = 0; i < d_k; ++i) k_blk(t, i) = k[i];
        for (std::size_t i = 0; i < d_v; ++i) v_blk(t, i) = u(rng);
        beta[t] = 0.5 * (u(rng) + 1.0);
    }
    const UtResult ut = ut_transform(k_blk, v_blk, beta);

    // A = I + strictLower(diag(beta) K K^T); A T must equal diag(beta).
    Matrix gram = matmul(k_blk, transpose(k_blk));
    Matrix a = identity<double>(c);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < i; ++j) a(i, j) = beta[i] * gram(i, j);
    const Matrix at = matmul(a, ut.t);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            const double want = i == j ? beta[i] : 0.0;
            r.worst = std::max(r.worst, std::abs(at(i, j) - want));
        }
    r.worst = std::max(r.worst, max_abs_diff(ut.w, matmul(ut.t, k_blk)));
    r.worst = std::max(r.worst, max_abs_diff(ut.u, matmul(ut.t, v_blk)));
    r.passed = r.worst <= r.tolerance;
    return r;
}

CheckResult check_spectrum(std::uint64_t seed) {
    CheckResult r{"delta projection spectrum", false, 0, 1e-12};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t d = 12;
    for (double beta : {0.0, 0.3, 0.7, 1.0}) {
        Vector k(d);
        for (std::size_t i = 0; i < d; ++i) k[i] = u(rng);
        k = l2_normalize(k, kL2Eps);
        // P = I - beta k k^T: eigenvalue 1-beta along k, 1 on the complement
        const Matrix p = sub(identity<double>(d), scale(outer(k, k), beta));
        const Vector pk = matvec(p, k);
        for (std::size_t i = 0; i < d; ++i)
            r.worst = std::max(r.worst, std::abs(pk[i] - (1.0 - beta) * k[i]));
        Vector v(d);
        for (std::size_t i = 0; i < d; ++i) v[i] = u(rng);
        Vector orth = v;
        const double proj = dot(v, k);
        for (std::size_t i = 0; i < d; ++i) orth[i] -= proj * k[i];
        const Vector po = matvec(p, orth);
        for (std::size_t i = 0; i < d; ++i)
            r.worst = std::max(r.worst, std::abs(po[i] - orth[i]));
    }
    r.passed = r.worst <= r.tolerance;
    return r;
}

CheckResult check_gradients(std::uint64_t seed) {
    CheckResult r{"chunkwise gradient check", false, 0, 1e-5};
    const BackboneConfig cfg = small_cfg(Variant::GatedDelta, 4);
    std::mt19937_64 rng(seed);
    ParamStore ps;
    init_backbone_params(ps, cfg, rng);
    const std::vector<Vector> xs = random_tokens(10, cfg.d_model, rng);
    const Vector target(cfg.d_model);

    {
        Tape tape;
        TapedParams tp(tape, ps);
        BackboneState st0 = zero_state(cfg);
        TapedState ts = taped_state(tape, st0, true);
        std::vector<Slot> tokens;
        for (const Vector& x : xs) tokens.push_back(tape.leaf_vec(x, false));
        const std::vector<Slot> ys = build_chunkwise(tape, tp, cfg, ts, tokens);
        Slot loss;
        const Slot tgt = tape.leaf_vec(target, false);
        for (std::size_t t = 0; t < ys.size(); ++t) {
            const Slot lt = tape.sse(ys[t], tgt);
            loss = t == 0 ? lt : tape.add(loss, lt);
        }
        tape.backward(loss);
        ps.zero_grads();
        tp.accumulate_grads_into(tape, ps);
    }

    const auto scalar_loss = [&](const ParamStore& p) {
        Tape tape;  // rebuilt per evaluation so the closure above stays simple
        TapedParams tp(tape, p);
        BackboneState st0 = zero_state(cfg);
        TapedState ts = taped_state(tape, st0, true);
        std::vector<Slot> tokens;
        for (const Vector& x : xs) tokens.push_back(tape.leaf_vec(x, false));
        const std::vector<Slot> ys = build_chunkwise(tape, tp, cfg, ts, tokens);
        Slot loss;
        const Slot tgt = tape.leaf_vec(target, false);
        for (std::size_t t = 0; t < ys.size(); ++t) {
            const Slot lt = tape.sse(ys[t], tgt);
            loss = t == 0 ? lt : tape.add(loss, lt);
        }
        return tape.scalar(loss);
    };
    r.worst = grad_check(scalar_loss, ps, 1e-6, 24, seed);
    r.passed = r.worst < r.tolerance;
    return r;
}

CheckResult check_mutation(std::uint64_t seed) {
    // Flip the removal sign in the recurrent rule; the equivalence probe must
    // light up, otherwise the checks above are vacuous.
    CheckResult r{"mutation sensitivity (wrong removal sign detected)", false, 0, 1e-6};
    r.worst = equivalence_error(Variant::DeltaRule, 8, seed, -1.0);
    r.passed = r.worst > r.tolerance;
    return r;
}

} // namespace

std::vector<CheckResult> run_check_suite(std::uint64_t seed) {
    return {check_equivalence(seed), check_ut_identity(seed), check_spectrum(seed),
            check_gradients(seed), check_mutation(seed)};
}

} // namespace lf2w
