#include "lf2w/trainer.hpp"

#include <chrono>
#include <cmath>
#include <memory>

#include "lf2w/threading.hpp"

namespace lf2w {

void TrainConfig::validate(const BackboneConfig& bb) const {
    detail::require(window_k >= bb.chunk_size, "train config: window_K must be >= chunk_size");
    detail::require(alpha > 0, "train config: alpha must be positive");
    detail::require(batch_envs >= 1, "train config: batch_envs must be >= 1");
    if (lambda_m <= 0 || lambda_v <= 0)
        throw std::invalid_argument("train config: lambda weights must be positive");
}

OptimizerState make_optimizer_state(const ParamStore& ps) {
    OptimizerState opt;
    for (const auto& name : ps.names()) {
        const Matrix& p = ps.get(name);
        opt.m.emplace(name, Matrix(p.rows(), p.cols()));
        opt.v.emplace(name, Matrix(p.rows(), p.cols()));
    }
    return opt;
}

void adam_step(ParamStore& ps, OptimizerState& opt, const TrainConfig& cfg) {
    double sq = 0;
    for (const auto& name : ps.names()) {
        const Matrix& g = ps.grad(name);
        for (std::size_t i = 0; i < g.size(); ++i) sq += g.data()[i] * g.data()[i];
    }
    const double gnorm = std::sqrt(sq);
    const double clip = (cfg.grad_clip > 0 && gnorm > cfg.grad_clip)
                            ? cfg.grad_clip / gnorm
                            : 1.0;
    opt.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(opt.step));
    for (const auto& name : ps.names()) {
        Matrix& p = ps.get(name);
        const Matrix& g = ps.grad(name);
        Matrix& m = opt.m.at(name);
        Matrix& v = opt.v.at(name);
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = g.data()[i] * clip;
            m.data()[i] = cfg.adam_beta1 * m.data()[i] + (1.0 - cfg.adam_beta1) * gi;
            v.data()[i] = cfg.adam_beta2 * v.data()[i] + (1.0 - cfg.adam_beta2) * gi * gi;
            const double mh = m.data()[i] / bc1;
            const double vh = v.data()[i] / bc2;
            p.data()[i] -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.adam_eps);
        }
    }
}

namespace {

struct StreamResult {
    Tape tape;
    TapedParams* tp = nullptr;
    double loss_sum = 0;
    double map_se = 0;
    double vel_se = 0;
    BackboneState states_out;
};

} // namespace

WindowMetrics train_window(ParamStore& ps, const std::vector<WindowBatchEntry>& batch,
                           std::vector<BackboneState>& states_out,
                           OptimizerState& opt, const EstimatorConfig& est_cfg,
                           const TrainConfig& cfg) {
    cfg.validate(est_cfg.backbone);
    const auto t_start = std::chrono::steady_clock::now();
    const std::size_t nb = batch.size();
    states_out.assign(nb, BackboneState{});

    std::vector<StreamResult> streams(nb);
    std::vector<std::unique_ptr<TapedParams>> tps(nb);

    parallel_for(nb, [&](std::size_t e) {
        const WindowBatchEntry& entry = batch[e];
        const std::size_t k = entry.observations.size();
        StreamResult& sr = streams[e];
        Tape& tape = sr.tape;
        tps[e] = std::make_unique<TapedParams>(tape, ps);
        const TapedParams& tp = *tps[e];
        TapedState ts = taped_state(tape, entry.states_in, /*detach_input=*/true);

        std::vector<Slot> tokens;
        tokens.reserve(k);
        for (const Observation& obs : entry.observations)
            tokens.push_back(build_encode(tape, tp, est_cfg, obs));

        const std::vector<Slot> ys =
            build_chunkwise(tape, tp, est_cfg.backbone, ts, tokens, "bb.");

        Slot loss;
        for (std::size_t t = 0; t < k; ++t) {
            const TapedOutput out = build_decode(tape, tp, est_cfg, ys[t]);
            const Slot lt = build_est_loss(tape, out, entry.target_m[t], entry.target_v[t],
                                           cfg.lambda_m, cfg.lambda_v);
            loss = t == 0 ? lt : tape.add(loss, lt);

            // per-step residuals for metrics, from the same forward values
            const Matrix& mh = tape.value(out.m_hat);
            const Matrix& vh = tape.value(out.v_hat);
            for (std::size_t i = 0; i < mh.size(); ++i) {
                const double d = mh.data()[i] - entry.target_m[t][i];
                sr.map_se += d * d;
            }
            for (std::size_t i = 0; i < vh.size(); ++i) {
                const double d = vh.data()[i] - entry.target_v[t][i];
                sr.vel_se += d * d;
            }
        }
        loss = tape.cscale(loss, cfg.alpha / static_cast<double>(k));
        sr.loss_sum = tape.scalar(loss);
        if (!std::isfinite(sr.loss_sum))
            throw std::runtime_error("train_window: non-finite loss (training diverged)");
        tape.backward(loss);
        sr.states_out = extract_state(tape, ts, est_cfg.backbone,
                                      (entry.states_in.empty() ? 0 : entry.states_in[0].t) + k);
    });

    // fixed-order merge keeps the update deterministic under any thread count
    ps.zero_grads();
    for (std::size_t e = 0; e < nb; ++e) tps[e]->accumulate_grads_into(streams[e].tape, ps);
    const double inv_nb = 1.0 / static_cast<double>(nb);
    double gsq = 0;
    for (const auto& name : ps.names()) {
        Matrix& g = ps.grad(name);
        for (std::size_t i = 0; i < g.size(); ++i) {
            g.data()[i] *= inv_nb;
            gsq += g.data()[i] * g.data()[i];
        }
    }

    adam_step(ps, opt, cfg);

    WindowMetrics wm;
    std::size_t steps = 0;
    std::size_t map_n = 0, vel_n = 0;
    for (std::size_t e = 0; e < nb; ++e) {
        wm.loss += streams[e].loss_sum * inv_nb;
        wm.map_rmse += streams[e].map_se;
        wm.vel_rmse += streams[e].vel_se;
        steps += batch[e].observations.size();
        map_n += batch[e].observations.size() * est_cfg.h_m;
        vel_n += batch[e].observations.size() * est_cfg.d_vel;
        states_out[e] = std::move(streams[e].states_out);
    }
    wm.map_rmse = std::sqrt(wm.map_rmse / static_cast<double>(map_n));
    wm.vel_rmse = std::sqrt(wm.vel_rmse / static_cast<double>(vel_n));
    wm.grad_norm = std::sqrt(gsq);
    wm.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return wm;
}

TrainResult run_training(ParamStore& ps, OptimizerState& opt,
                         const EstimatorConfig& est_cfg, const TrainConfig& cfg,
                         const std::function<void(const WindowMetrics&)>& on_window) {
    cfg.validate(est_cfg.backbone);
    const std::size_t track_cells = static_cast<std::size_t>(
        std::ceil((3.0 + cfg.protocol.forward_steps * cfg.speed * kCellSize + 3.0) / kCellSize));

    struct EnvStream {
        TraversalEpisode episode;
        std::size_t cursor = 0;
        BackboneState states;
        std::uint64_t next_episode = 0;
    };
    std::vector<EnvStream> envs(cfg.batch_envs);
    auto new_episode = [&](std::size_t e, EnvStream& env) {
        const std::uint64_t ep_seed =
            cfg.seed * 1000003ULL + e * 7919ULL + env.next_episode;
        env.episode = simulate_traversal(
            generate_track(cfg.delta, track_cells, ep_seed),
            cfg.protocol, cfg.speed, ep_seed ^ 0x9e3779b97f4a7c15ULL, est_cfg);
        env.cursor = 0;
        env.states = zero_state(est_cfg.backbone);  // episode boundary resets memory
        env.next_episode += 1;
    };
    for (std::size_t e = 0; e < cfg.batch_envs; ++e) new_episode(e, envs[e]);

    TrainResult result;
    for (std::size_t w = 0; w < cfg.total_windows; ++w) {
        std::vector<WindowBatchEntry> batch(cfg.batch_envs);
        for (std::size_t e = 0; e < cfg.batch_envs; ++e) {
            EnvStream& env = envs[e];
            if (env.cursor >= env.episode.positions.size()) new_episode(e, env);
            const std::size_t remaining = env.episode.positions.size() - env.cursor;
            const std::size_t k = std::min(cfg.window_k, remaining);  // final partial window
            WindowBatchEntry& entry = batch[e];
            entry.states_in = env.states;
            for (std::size_t t = 0; t < k; ++t) {
                entry.observations.push_back(env.episode.observations[env.cursor + t]);
                entry.target_m.push_back(env.episode.target_m[env.cursor + t]);
                entry.target_v.push_back(env.episode.target_v[env.cursor + t]);
            }
            env.cursor += k;
        }
        std::vector<BackboneState> states_out;
        WindowMetrics wm = train_window(ps, batch, states_out, opt, est_cfg, cfg);
        wm.window_index = w;
        for (std::size_t e = 0; e < cfg.batch_envs; ++e) envs[e].states = std::move(states_out[e]);
        if (on_window) on_window(wm);
        result.metrics.push_back(wm);
    }
    return result;
}

// ---- PPO ----

void PpoBatch::validate() const {
    const std::size_t n = logp_old.size();
    detail::require(n > 0, "ppo batch: empty");
    detail::require(logp_new.size() == n && advantages.size() == n && returns.size() == n &&
                        values.size() == n && entropy.size() == n,
                    "ppo batch: field lengths differ");
    detail::require(clip_eps > 0.0 && clip_eps < 1.0, "ppo batch: clip eps must be in (0,1)");
}

GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      double gamma, double lam, double bootstrap_value) {
    detail::require(rewards.size() == values.size(), "compute_gae: length mismatch");
    detail::require(gamma >= 0 && gamma <= 1 && lam >= 0 && lam <= 1,
                    "compute_gae: gamma/lambda must be in [0,1]");
    const std::size_t n = rewards.size();
    GaeResult out;
    out.advantages.assign(n, 0.0);
    out.returns.assign(n, 0.0);
    double gae = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        const double v_next = i + 1 < n ? values[i + 1] : bootstrap_value;
        const double delta = rewards[i] + gamma * v_next - values[i];
        gae = delta + gamma * lam * gae;
        out.advantages[i] = gae;
        out.returns[i] = gae + values[i];
    }
    return out;
}

PpoLosses ppo_losses(const PpoBatch& batch) {
    batch.validate();
    const std::size_t n = batch.logp_old.size();
    PpoLosses out;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = std::exp(batch.logp_new[i] - batch.logp_old[i]);
        const double rc = std::clamp(r, 1.0 - batch.clip_eps, 1.0 + batch.clip_eps);
        const double a = batch.advantages[i];
        out.clip_loss += std::min(r * a, rc * a);
        const double verr = batch.values[i] - batch.returns[i];
        out.value_loss += verr * verr;
        out.entropy_loss += batch.entropy[i];
    }
    const double inv = 1.0 / static_cast<double>(n);
    out.clip_loss *= inv;
    out.value_loss *= inv;
    out.entropy_loss *= inv;
    out.total = -out.clip_loss + batch.c_value * out.value_loss -
                batch.c_entropy * out.entropy_loss;
    return out;
}

} // namespace lf2w
