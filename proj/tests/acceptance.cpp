// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 8 and 9 train small models from scratch and take the bulk
// of the runtime; everything else is analytic or sub-second.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <lf2w/backbone.hpp>
#include <lf2w/estimator.hpp>
#include <lf2w/evalsuite.hpp>
#include <lf2w/taskgen.hpp>
#include <lf2w/trainer.hpp>

using namespace lf2w;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<Vector> random_tokens(std::size_t n, std::size_t d, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vector> xs(n, Vector(d));
    for (auto& x : xs)
        for (std::size_t i = 0; i < d; ++i) x[i] = u(rng);
    return xs;
}

Vector random_unit(std::size_t d, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vector k(d);
    for (std::size_t i = 0; i < d; ++i) k[i] = g(rng);
    return l2_normalize(k, kL2Eps);
}

struct Outcome {
    bool passed = false;
    std::string detail;
};

// ---- criterion 1 / 11 shared probe -------------------------------------

BackboneConfig equiv_cfg(Variant variant, std::size_t chunk) {
    BackboneConfig cfg;
    cfg.n_layers = 2;
    cfg.d_model = 64;
    cfg.d_k = 16;
    cfg.d_v = 16;
    cfg.n_heads = 2;
    cfg.d_ff = 128;
    cfg.chunk_size = chunk;
    cfg.variant = variant;
    return cfg;
}

double equivalence_error(Variant variant, std::size_t chunk, std::size_t len,
                         std::uint64_t seed, double removal_sign) {
    const BackboneConfig cfg = equiv_cfg(variant, chunk);
    std::mt19937_64 rng(seed);
    ParamStore ps;
    init_backbone_params(ps, cfg, rng);
    const std::vector<Vector> xs = random_tokens(len, cfg.d_model, rng);

    BackboneState rec = zero_state(cfg);
    std::vector<Vector> y_rec;
    y_rec.reserve(len);
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

Outcome criterion1() {
    const auto t0 = Clock::now();
    double worst = 0;
    for (Variant v : {Variant::DeltaRule, Variant::GatedDelta, Variant::LinearAttention})
        for (std::size_t c : {1, 2, 4, 8, 16, 32})
            worst = std::max(worst, equivalence_error(v, c, 128, 101, 1.0));
    const double secs = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof buf, "max deviation %.3e (tol 1e-9), %.1f s (limit 10 s)",
                  worst, secs);
    return {worst <= 1e-9 && secs < 10.0, buf};
}

Outcome criterion2() {
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t c = 1 + rng() % 32;
        const std::size_t d_k = 4 + rng() % 29;  // up to 32
        Matrix k_blk(c, d_k), v_blk(c, d_k);
        Vector beta(c);
        for (std::size_t t = 0; t < c; ++t) {
            const Vector k = random_unit(d_k, rng);
            for (std::size_t i = 0; i < d_k; ++i) {
                k_blk(t, i) = k[i];
                v_blk(t, i) = u(rng);
            }
            beta[t] = 0.5 * (u(rng) + 1.0);
        }
        const UtResult ut = ut_transform(k_blk, v_blk, beta);
        const Matrix gram = matmul(k_blk, transpose(k_blk));
        Matrix a = identity<double>(c);
        for (std::size_t i = 0; i < c; ++i)
            for (std::size_t j = 0; j < i; ++j) a(i, j) = beta[i] * gram(i, j);
        const Matrix at = matmul(a, ut.t);
        for (std::size_t i = 0; i < c; ++i)
            for (std::size_t j = 0; j < c; ++j) {
                const double want = i == j ? beta[i] : 0.0;
                worst = std::max(worst, std::abs(at(i, j) - want));
            }
    }
    char buf[120];
    std::snprintf(buf, sizeof buf, "max residual %.3e over 100 trials (tol 1e-11)", worst);
    return {worst <= 1e-11, buf};
}

Outcome criterion3() {
    std::mt19937_64 rng(303);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t d = 4 + rng() % 29;
        const Vector k = random_unit(d, rng);
        for (double beta : {0.0, 0.25, 0.5, 1.0}) {
            const Matrix p = sub(identity<double>(d), scale(outer(k, k), beta));
            const Vector pk = matvec(p, k);
            for (std::size_t i = 0; i < d; ++i)
                worst = std::max(worst, std::abs(pk[i] - (1.0 - beta) * k[i]));
            Vector orth(d);
            for (std::size_t i = 0; i < d; ++i) orth[i] = u(rng);
            const double proj = dot(orth, k);
            for (std::size_t i = 0; i < d; ++i) orth[i] -= proj * k[i];
            const Vector po = matvec(p, orth);
            for (std::size_t i = 0; i < d; ++i)
                worst = std::max(worst, std::abs(po[i] - orth[i]));
        }
    }
    char buf[120];
    std::snprintf(buf, sizeof buf, "max deviation %.3e over 100 keys (tol 1e-12)", worst);
    return {worst <= 1e-12, buf};
}

Outcome criterion4() {
    const auto t0 = Clock::now();
    EstimatorConfig cfg;
    cfg.extero_hidden = 8;
    cfg.d_d = 8;
    cfg.d_p = 8;
    cfg.backbone.n_layers = 2;
    cfg.backbone.d_model = 16;
    cfg.backbone.d_k = 4;
    cfg.backbone.d_v = 4;
    cfg.backbone.n_heads = 2;
    cfg.backbone.d_ff = 16;
    cfg.backbone.chunk_size = 4;

    std::mt19937_64 rng(404);
    ParamStore ps;
    init_estimator_params(ps, cfg, rng);

    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t steps = 6;
    std::vector<Observation> obs(steps);
    std::vector<Vector> tm(steps, Vector(cfg.h_m)), tv(steps, Vector(cfg.d_vel));
    for (std::size_t t = 0; t < steps; ++t) {
        obs[t].extero = Vector(cfg.h_d);
        obs[t].proprio = Vector(cfg.d_o);
        for (std::size_t i = 0; i < cfg.h_d; ++i) obs[t].extero[i] = u(rng);
        for (std::size_t i = 0; i < cfg.d_o; ++i) obs[t].proprio[i] = u(rng);
        for (std::size_t i = 0; i < cfg.h_m; ++i) tm[t][i] = u(rng);
        for (std::size_t i = 0; i < cfg.d_vel; ++i) tv[t][i] = u(rng);
    }

    const auto build = [&](Tape& tape, const ParamStore& p) {
        TapedParams tp(tape, p);
        TapedState ts = taped_state(tape, zero_state(cfg.backbone), true);
        std::vector<Slot> tokens;
        for (std::size_t t = 0; t < steps; ++t)
            tokens.push_back(build_encode(tape, tp, cfg, obs[t]));
        const std::vector<Slot> ys = build_chunkwise(tape, tp, cfg.backbone, ts, tokens, "bb.");
        Slot loss;
        for (std::size_t t = 0; t < steps; ++t) {
            const TapedOutput out = build_decode(tape, tp, cfg, ys[t]);
            const Slot lt = build_est_loss(tape, out, tm[t], tv[t], 1.0, 1.0);
            loss = t == 0 ? lt : tape.add(loss, lt);
        }
        return std::pair<Slot, TapedParams>(loss, tp);
    };

    {
        Tape tape;
        auto [loss, tp] = build(tape, ps);
        tape.backward(loss);
        ps.zero_grads();
        tp.accumulate_grads_into(tape, ps);
    }
    const auto scalar_loss = [&](const ParamStore& p) {
        Tape tape;
        return tape.scalar(build(tape, p).first);
    };
    const double worst = grad_check(scalar_loss, ps, 1e-6, 64, 404);
    const double secs = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "max relative error %.3e over %zu tensors (tol 1e-5), %.1f s (limit 60 s)",
                  worst, ps.size(), secs);
    return {worst < 1e-5 && secs < 60.0, buf};
}

Outcome criterion5() {
    EstimatorConfig cfg;
    cfg.extero_hidden = 8;
    cfg.d_d = 8;
    cfg.d_p = 8;
    cfg.backbone.n_layers = 2;
    cfg.backbone.d_model = 16;
    cfg.backbone.d_k = 4;
    cfg.backbone.d_v = 4;
    cfg.backbone.n_heads = 2;
    cfg.backbone.d_ff = 16;
    cfg.backbone.chunk_size = 4;
    std::mt19937_64 rng(505);
    ParamStore ps;
    init_estimator_params(ps, cfg, rng);

    const LatencyProfile lat = bench_inference(ps, cfg, 10000, 506);

    // state size probed directly at t = 10 and t = 10,000
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    BackboneState st = zero_state(cfg.backbone);
    Observation obs{Vector(cfg.h_d), Vector(cfg.d_o)};
    std::size_t bytes10 = 0;
    for (std::size_t t = 1; t <= 10000; ++t) {
        for (std::size_t i = 0; i < cfg.h_d; ++i) obs.extero[i] = u(rng);
        for (std::size_t i = 0; i < cfg.d_o; ++i) obs.proprio[i] = u(rng);
        (void)estimator_step(st, obs, ps, cfg);
        if (t == 10) bytes10 = state_bytes(st);
    }
    const std::size_t bytes10k = state_bytes(st);

    const bool slope_ok = std::abs(lat.slope_per_step) < 0.01 * lat.mean_seconds;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "slope %.3e s/step vs 1%% of mean %.3e s; state %zu bytes at t=10 "
                  "and %zu at t=10000",
                  lat.slope_per_step, lat.mean_seconds, bytes10, bytes10k);
    return {slope_ok && bytes10 == bytes10k && bytes10 > 0, buf};
}

Outcome criterion6() {
    const BackboneConfig cfg = equiv_cfg(Variant::DeltaRule, 16);
    std::mt19937_64 rng(606);
    ParamStore ps;
    init_backbone_params(ps, cfg, rng);
    const std::vector<Vector> xs = random_tokens(640, cfg.d_model, rng);

    BackboneState rec = zero_state(cfg);
    std::vector<Vector> y_ref;
    for (const Vector& x : xs) y_ref.push_back(forward_recurrent(rec, x, ps, cfg));

    double worst = 0;

    // window 1: chunkwise over tokens [0, 320)
    Tape t1;
    TapedParams tp1(t1, ps);
    TapedState ts1 = taped_state(t1, zero_state(cfg), false);
    std::vector<Slot> tok1;
    for (std::size_t t = 0; t < 320; ++t) tok1.push_back(t1.leaf_vec(xs[t], false));
    const std::vector<Slot> y1 = build_chunkwise(t1, tp1, cfg, ts1, tok1);
    for (std::size_t t = 0; t < 320; ++t) {
        const Matrix& y = t1.value(y1[t]);
        for (std::size_t i = 0; i < cfg.d_model; ++i)
            worst = std::max(worst, std::abs(y(i, 0) - y_ref[t][i]));
    }
    const BackboneState carried = extract_state(t1, ts1, cfg, 320);

    // window 2: carried state enters through an explicit leaf -> detach edge
    Tape t2;
    TapedParams tp2(t2, ps);
    TapedState ts2;
    std::vector<Slot> carried_leaves;
    ts2.s.resize(cfg.n_layers);
    for (std::size_t l = 0; l < cfg.n_layers; ++l)
        for (std::size_t h = 0; h < cfg.n_heads; ++h) {
            const Slot leaf = t2.leaf(carried[l].s[h]);
            carried_leaves.push_back(leaf);
            ts2.s[l].push_back(t2.detach(leaf));
        }
    std::vector<Slot> tok2;
    for (std::size_t t = 320; t < 640; ++t) tok2.push_back(t2.leaf_vec(xs[t], false));
    const std::vector<Slot> y2 = build_chunkwise(t2, tp2, cfg, ts2, tok2);
    for (std::size_t t = 0; t < 320; ++t) {
        const Matrix& y = t2.value(y2[t]);
        for (std::size_t i = 0; i < cfg.d_model; ++i)
            worst = std::max(worst, std::abs(y(i, 0) - y_ref[320 + t][i]));
    }

    // gradient must not cross the carried edge
    Slot loss;
    const Slot zero = t2.leaf_vec(Vector(cfg.d_model), false);
    for (std::size_t t = 0; t < y2.size(); ++t) {
        const Slot lt = t2.sse(y2[t], zero);
        loss = t == 0 ? lt : t2.add(loss, lt);
    }
    t2.backward(loss);
    double carry_grad = 0;
    for (const Slot s : carried_leaves) carry_grad = std::max(carry_grad, max_abs(t2.adjoint(s)));

    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "output deviation %.3e (tol 1e-9), carried-edge gradient %.3e (must be 0)",
                  worst, carry_grad);
    return {worst <= 1e-9 && carry_grad == 0.0, buf};
}

Outcome criterion7() {
    const std::size_t d_k = 16;
    const RecallTask ortho = generate_recall_task(d_k, d_k, 707);
    const double delta_err = recall_error(ortho, Variant::DeltaRule);

    const RecallTask crowded = generate_recall_task(2 * d_k, d_k, 708);
    const double lin_err = recall_error(crowded, Variant::LinearAttention);

    // closed-form interference oracle for the additive memory
    double oracle = 0;
    for (std::size_t qi : crowded.queries) {
        Vector err(crowded.values[0].len());
        for (std::size_t j = 0; j < crowded.keys.size(); ++j) {
            const double w =
                dot(crowded.keys[j], crowded.keys[qi]) - (j == qi ? 1.0 : 0.0);
            for (std::size_t i = 0; i < err.len(); ++i)
                err[i] += w * crowded.values[j][i];
        }
        oracle = std::max(oracle, max_abs(err));
    }
    const double oracle_gap = std::abs(lin_err - oracle) / std::max(oracle, 1e-12);

    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "delta-rule error %.3e (tol 1e-12); linear-attention error %.3e "
                  "matches oracle to %.3e rel",
                  delta_err, lin_err, oracle_gap);
    return {delta_err <= 1e-12 && lin_err > delta_err && lin_err > 1e-3 &&
                oracle_gap <= 1e-9,
            buf};
}

// ---- criteria 8 & 9: desk-scale training runs ---------------------------

EstimatorConfig desk_cfg(Variant variant) {
    EstimatorConfig cfg;
    cfg.extero_hidden = 16;
    cfg.d_d = 16;
    cfg.d_p = 16;
    cfg.backbone.n_layers = 2;
    cfg.backbone.d_model = 32;
    cfg.backbone.d_k = 8;
    cfg.backbone.d_v = 8;
    cfg.backbone.n_heads = 2;
    cfg.backbone.d_ff = 64;
    cfg.backbone.chunk_size = 16;
    cfg.backbone.variant = variant;
    return cfg;
}

constexpr double kSuccessThreshold = 0.1;  // 10% of typical feature height
constexpr std::size_t kEvalSeeds = 20;
constexpr std::uint64_t kHeldOutSeed0 = 900001;  // disjoint from training streams

ParamStore train_variant(Variant variant, double& train_seconds) {
    const EstimatorConfig cfg = desk_cfg(variant);
    TrainConfig tc;
    tc.window_k = 100;
    tc.batch_envs = 4;
    tc.total_windows = 300;
    tc.delta = 0.4;
    tc.protocol = Protocol::p1();
    tc.seed = 808;

    ParamStore ps;
    std::mt19937_64 rng(809);
    init_estimator_params(ps, cfg, rng);
    OptimizerState opt = make_optimizer_state(ps);
    const auto t0 = Clock::now();
    (void)run_training(ps, opt, cfg, tc);
    train_seconds = seconds_since(t0);
    return ps;
}

double success(const ParamStore& ps, const EstimatorConfig& cfg, const Protocol& p,
               double delta) {
    return eval_backward_rmse(ps, cfg, p, delta, kEvalSeeds, kHeldOutSeed0,
                              kSuccessThreshold)
        .success_rate;
}

Outcome criterion8(const ParamStore& delta_ps, double train_seconds) {
    const RmseEval r = eval_backward_rmse(delta_ps, desk_cfg(Variant::DeltaRule),
                                          Protocol::p1(), 0.4, kEvalSeeds,
                                          kHeldOutSeed0, kSuccessThreshold);
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "backward RMSE %.4f vs mean-predictor baseline %.4f over %zu "
                  "held-out seeds; training %.0f s (limit 1800 s)",
                  r.mean_rmse, r.baseline_rmse, kEvalSeeds, train_seconds);
    return {r.mean_rmse < r.baseline_rmse && train_seconds < 1800.0, buf};
}

Outcome criterion9(const ParamStore& delta_ps, const ParamStore& gated_ps,
                   const ParamStore& linear_ps) {
    const EstimatorConfig dc = desk_cfg(Variant::DeltaRule);
    const EstimatorConfig gc = desk_cfg(Variant::GatedDelta);
    const EstimatorConfig lc = desk_cfg(Variant::LinearAttention);

    // (a) capacity-overload protocols: delta rule vs additive memory
    const double d_p2 = success(delta_ps, dc, Protocol::p2(), 0.4);
    const double l_p2 = success(linear_ps, lc, Protocol::p2(), 0.4);
    const double d_p4 = success(delta_ps, dc, Protocol::p4(), 0.4);
    const double l_p4 = success(linear_ps, lc, Protocol::p4(), 0.4);
    const bool a_ok = d_p2 >= l_p2 && d_p4 >= l_p4;

    // (b) long-retrieval protocols: delta rule vs decaying memory
    const double d_p3 = success(delta_ps, dc, Protocol::p3(), 0.4);
    const double g_p3 = success(gated_ps, gc, Protocol::p3(), 0.4);
    const double d_p5 = success(delta_ps, dc, Protocol::p5(), 0.4);
    const double g_p5 = success(gated_ps, gc, Protocol::p5(), 0.4);
    const bool b_ok = d_p3 >= g_p3 && d_p5 >= g_p5;

    // (c) success non-increasing in terrain difficulty on P1
    bool c_ok = true;
    std::string c_txt;
    const struct {
        const ParamStore* ps;
        const EstimatorConfig* cfg;
        const char* tag;
    } models[] = {{&delta_ps, &dc, "delta"}, {&gated_ps, &gc, "gated"},
                  {&linear_ps, &lc, "linear"}};
    for (const auto& m : models) {
        double prev = 2.0;
        c_txt += std::string(" ") + m.tag + "[";
        for (double d : {0.2, 0.4, 0.6, 0.8}) {
            const double s = success(*m.ps, *m.cfg, Protocol::p1(), d);
            c_ok = c_ok && s <= prev + 1e-12;
            prev = s;
            char t[16];
            std::snprintf(t, sizeof t, " %.2f", s);
            c_txt += t;
        }
        c_txt += " ]";
    }

    char buf[360];
    std::snprintf(buf, sizeof buf,
                  "(a) P2 %.2f>=%.2f P4 %.2f>=%.2f; (b) P3 %.2f>=%.2f P5 %.2f>=%.2f; "
                  "(c) P1 success by delta:%s",
                  d_p2, l_p2, d_p4, l_p4, d_p3, g_p3, d_p5, g_p5, c_txt.c_str());
    return {a_ok && b_ok && c_ok, buf};
}

Outcome criterion10() {
    double worst = 0;

    // closed-form clip cases
    {
        PpoBatch b;
        b.logp_old = {0.0, 0.0};
        b.logp_new = {0.0, 0.0};
        b.advantages = {0.7, -0.3};
        b.returns = {0.0, 0.0};
        b.values = {0.0, 0.0};
        b.entropy = {0.0, 0.0};
        worst = std::max(worst, std::abs(ppo_losses(b).clip_loss - 0.2));  // mean adv
    }
    {
        PpoBatch b;
        b.logp_old = {0.0};
        b.logp_new = {std::log(1.5)};
        b.advantages = {1.0};
        b.returns = {0.0};
        b.values = {0.0};
        b.entropy = {0.0};
        worst = std::max(worst, std::abs(ppo_losses(b).clip_loss - 1.2));
    }
    {
        PpoBatch b;
        b.logp_old = {0.0};
        b.logp_new = {std::log(0.5)};
        b.advantages = {-1.0};
        b.returns = {0.0};
        b.values = {0.0};
        b.entropy = {0.0};
        worst = std::max(worst, std::abs(ppo_losses(b).clip_loss - (-0.8)));
    }

    // GAE closed forms
    {
        const std::vector<double> r{1.0, 2.0, 3.0}, v{0.5, 0.25, 0.125};
        const GaeResult g0 = compute_gae(r, v, 0.0, 0.7);  // gamma = 0: A_t = r_t - V_t
        for (std::size_t t = 0; t < 3; ++t)
            worst = std::max(worst, std::abs(g0.advantages[t] - (r[t] - v[t])));
        const GaeResult l0 = compute_gae(r, v, 0.9, 0.0, 0.1);  // lambda = 0: one-step TD
        for (std::size_t t = 0; t < 3; ++t) {
            const double next = t + 1 < 3 ? v[t + 1] : 0.1;
            worst = std::max(worst, std::abs(l0.advantages[t] - (r[t] + 0.9 * next - v[t])));
        }
    }

    // random batch vs brute force
    std::mt19937_64 rng(1010);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t n = 64;
    PpoBatch b;
    for (std::size_t i = 0; i < n; ++i) {
        b.logp_old.push_back(u(rng));
        b.logp_new.push_back(u(rng));
        b.advantages.push_back(2.0 * u(rng));
        b.returns.push_back(u(rng));
        b.values.push_back(u(rng));
        b.entropy.push_back(std::abs(u(rng)));
    }
    const PpoLosses got = ppo_losses(b);
    double clip = 0, value = 0, ent = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ratio = std::exp(b.logp_new[i] - b.logp_old[i]);
        const double clipped = std::min(std::max(ratio, 1.0 - b.clip_eps), 1.0 + b.clip_eps);
        clip += std::min(ratio * b.advantages[i], clipped * b.advantages[i]);
        value += (b.values[i] - b.returns[i]) * (b.values[i] - b.returns[i]);
        ent += b.entropy[i];
    }
    clip /= n;
    value /= n;
    ent /= n;
    worst = std::max(worst, std::abs(got.clip_loss - clip));
    worst = std::max(worst, std::abs(got.value_loss - value));
    worst = std::max(worst, std::abs(got.entropy_loss - ent));
    worst = std::max(worst,
                     std::abs(got.total - (-clip + b.c_value * value - b.c_entropy * ent)));

    // GAE random vs brute-force double sum
    std::vector<double> rr(12), vv(12);
    for (auto& x : rr) x = u(rng);
    for (auto& x : vv) x = u(rng);
    const double gamma = 0.93, lam = 0.8, boot = u(rng);
    const GaeResult g = compute_gae(rr, vv, gamma, lam, boot);
    for (std::size_t t = 0; t < rr.size(); ++t) {
        double adv = 0;
        for (std::size_t l = t; l < rr.size(); ++l) {
            const double next = l + 1 < rr.size() ? vv[l + 1] : boot;
            const double td = rr[l] + gamma * next - vv[l];
            adv += std::pow(gamma * lam, double(l - t)) * td;
        }
        worst = std::max(worst, std::abs(g.advantages[t] - adv));
        worst = std::max(worst, std::abs(g.returns[t] - (adv + vv[t])));
    }

    char buf[120];
    std::snprintf(buf, sizeof buf, "max deviation from oracles %.3e (tol 1e-12)", worst);
    return {worst <= 1e-12, buf};
}

Outcome criterion11() {
    const double err = equivalence_error(Variant::DeltaRule, 8, 128, 101, -1.0);
    char buf[140];
    std::snprintf(buf, sizeof buf,
                  "flipped removal sign drives equivalence error to %.3e (> 1e-9 required)",
                  err);
    return {err > 1e-9, buf};
}

} // namespace

int main(int argc, char** argv) {
    // --trend-only: skip the analytic criteria; for iterating on the
    // training-dependent criteria 8 and 9 during development
    const bool trend_only = argc > 1 && std::string(argv[1]) == "--trend-only";
    int failures = 0;
    const auto report = [&](int id, const char* title, const Outcome& o) {
        std::printf("[%s] criterion %d: %s — %s\n", o.passed ? "PASS" : "FAIL", id, title,
                    o.detail.c_str());
        std::fflush(stdout);
        if (!o.passed) ++failures;
    };

    if (!trend_only) {
        report(1, "parallel/recurrent equivalence", criterion1());
        report(2, "UT transform identity", criterion2());
        report(3, "removal projection spectrum", criterion3());
        report(4, "gradient correctness", criterion4());
        report(5, "constant-time inference", criterion5());
        report(6, "window detach semantics", criterion6());
        report(7, "exact recall vs interference", criterion7());
    }

    double delta_secs = 0, gated_secs = 0, linear_secs = 0;
    const ParamStore delta_ps = train_variant(Variant::DeltaRule, delta_secs);
    const ParamStore gated_ps = train_variant(Variant::GatedDelta, gated_secs);
    const ParamStore linear_ps = train_variant(Variant::LinearAttention, linear_secs);

    report(8, "trained backward retrieval beats baseline", criterion8(delta_ps, delta_secs));
    report(9, "variant trend analysis", criterion9(delta_ps, gated_ps, linear_ps));
    if (!trend_only) {
        report(10, "PPO and GAE operations", criterion10());
        report(11, "mutation sensitivity", criterion11());
    }

    if (failures) {
        std::printf("%d criterion(s) FAILED\n", failures);
        return 1;
    }
    std::printf("all 11 criteria passed\n");
    return 0;
}
