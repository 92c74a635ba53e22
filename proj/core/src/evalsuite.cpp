#include "lf2w/evalsuite.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "lf2w/threading.hpp"

namespace lf2w {

using json = nlohmann::json;

namespace {

std::size_t track_cells_for(const Protocol& protocol, double speed) {
    return static_cast<std::size_t>(
        std::ceil((3.0 + protocol.forward_steps * speed * kCellSize + 3.0) / kCellSize));
}

struct SeedScore {
    std::vector<double> se_per_step;  // backward phase, mean over map coords
    double rmse = 0;
    double baseline_rmse = 0;
};

SeedScore score_seed(const ParamStore& ps, const EstimatorConfig& est_cfg,
                     const Protocol& protocol, double delta, double speed,
                     std::uint64_t seed) {
    const TerrainTrack track = generate_track(delta, track_cells_for(protocol, speed), seed);
    const TraversalEpisode ep =
        simulate_traversal(track, protocol, speed, seed ^ 0x9e3779b97f4a7c15ULL, est_cfg);

    SeedScore out;
    BackboneState states = zero_state(est_cfg.backbone);
    double se_sum = 0;
    std::size_t se_n = 0;
    double tgt_sum = 0, tgt_sq = 0;
    std::size_t tgt_n = 0;
    for (std::size_t t = 0; t < ep.observations.size(); ++t) {
        const EstimatorOutput o = estimator_step(states, ep.observations[t], ps, est_cfg);
        if (ep.phases[t] != Phase::backward) continue;
        double step_se = 0;
        for (std::size_t i = 0; i < est_cfg.h_m; ++i) {
            const double d = o.m_hat[i] - ep.target_m[t][i];
            step_se += d * d;
            tgt_sum += ep.target_m[t][i];
            tgt_sq += ep.target_m[t][i] * ep.target_m[t][i];
        }
        se_sum += step_se;
        se_n += est_cfg.h_m;
        tgt_n += est_cfg.h_m;
        out.se_per_step.push_back(step_se / static_cast<double>(est_cfg.h_m));
    }
    out.rmse = std::sqrt(se_sum / static_cast<double>(se_n));
    const double mean = tgt_sum / static_cast<double>(tgt_n);
    out.baseline_rmse = std::sqrt(std::max(0.0, tgt_sq / static_cast<double>(tgt_n) - mean * mean));
    return out;
}

} // namespace

RmseEval eval_backward_rmse(const ParamStore& ps, const EstimatorConfig& est_cfg,
                            const Protocol& protocol, double delta,
                            std::size_t n_seeds, std::uint64_t seed0,
                            double threshold, double speed) {
    if (n_seeds == 0) throw std::invalid_argument("eval_backward_rmse: n_seeds must be >= 1");
    std::vector<SeedScore> scores(n_seeds);
    parallel_for(n_seeds, [&](std::size_t i) {
        scores[i] = score_seed(ps, est_cfg, protocol, delta, speed,
                               seed0 + 104729ULL * (i + 1));
    });

    RmseEval out;
    out.protocol = protocol.id;
    out.delta = delta;
    out.seeds = n_seeds;
    out.rmse_trace.assign(protocol.backward_steps, 0.0);
    double rmse_sq = 0, base_sq = 0;
    std::size_t passed = 0;
    for (const SeedScore& s : scores) {
        for (std::size_t t = 0; t < s.se_per_step.size() && t < out.rmse_trace.size(); ++t)
            out.rmse_trace[t] += s.se_per_step[t];
        rmse_sq += s.rmse * s.rmse;
        base_sq += s.baseline_rmse * s.baseline_rmse;
        if (s.rmse < threshold) ++passed;
    }
    for (double& v : out.rmse_trace) v = std::sqrt(v / static_cast<double>(n_seeds));
    out.mean_rmse = std::sqrt(rmse_sq / static_cast<double>(n_seeds));
    out.baseline_rmse = std::sqrt(base_sq / static_cast<double>(n_seeds));
    out.success_rate = static_cast<double>(passed) / static_cast<double>(n_seeds);
    return out;
}

EvalReport eval_protocol_grid(const ParamStore& ps, const EstimatorConfig& est_cfg,
                              const EvalConfig& eval_cfg, std::uint64_t seed0,
                              double speed) {
    EvalReport report;
    report.variant = variant_name(est_cfg.backbone.variant);
    report.rmse_threshold = eval_cfg.rmse_threshold;
    for (const std::string& pname : eval_cfg.protocols) {
        const Protocol protocol = Protocol::from_name(pname);
        for (double delta : eval_cfg.deltas)
            report.cells.push_back(eval_backward_rmse(ps, est_cfg, protocol, delta,
                                                      eval_cfg.seeds, seed0,
                                                      eval_cfg.rmse_threshold, speed));
    }
    return report;
}

void write_report_json(const EvalReport& report, std::ostream& os) {
    json cells = json::array();
    for (const RmseEval& c : report.cells)
        cells.push_back(json{{"protocol", c.protocol},
                             {"delta", c.delta},
                             {"seeds", c.seeds},
                             {"mean_rmse", c.mean_rmse},
                             {"baseline_rmse", c.baseline_rmse},
                             {"success_rate", c.success_rate},
                             {"rmse_trace", c.rmse_trace}});
    os << json{{"variant", report.variant},
               {"rmse_threshold", report.rmse_threshold},
               {"cells", cells}}
              .dump(2)
       << "\n";
}

void write_report_csv(const EvalReport& report, std::ostream& os) {
    os << "variant,protocol,delta,seeds,mean_rmse,baseline_rmse,success_rate\n";
    for (const RmseEval& c : report.cells)
        os << report.variant << ',' << c.protocol << ',' << c.delta << ',' << c.seeds
           << ',' << c.mean_rmse << ',' << c.baseline_rmse << ',' << c.success_rate
           << '\n';
}

double recall_error(const RecallTask& task, Variant variant) {
    if (task.keys.empty()) throw std::invalid_argument("recall_error: empty task");
    const std::size_t d_k = task.keys[0].len();
    const std::size_t d_v = task.values[0].len();
    Matrix s(d_v, d_k);
    for (std::size_t i = 0; i < task.keys.size(); ++i)
        delta_step(s, task.keys[i], task.values[i], /*beta=*/1.0, /*alpha=*/1.0, variant);
    double worst = 0;
    for (std::size_t qi : task.queries) {
        const Vector got = readout(s, task.keys[qi]);
        worst = std::max(worst, max_abs_diff(got, task.values[qi]));
    }
    return worst;
}

LatencyProfile bench_inference(const ParamStore& ps, const EstimatorConfig& est_cfg,
                               std::size_t n_steps, std::uint64_t seed) {
    if (n_steps < 2) throw std::invalid_argument("bench_inference: need >= 2 steps");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Observation obs;
    obs.extero = Vector(est_cfg.h_d);
    obs.proprio = Vector(est_cfg.d_o);

    LatencyProfile out;
    out.step_seconds.reserve(n_steps);
    BackboneState states = zero_state(est_cfg.backbone);
    out.state_bytes_start = state_bytes(states);
    for (std::size_t t = 0; t < n_steps; ++t) {
        for (std::size_t i = 0; i < obs.extero.len(); ++i) obs.extero[i] = u(rng);
        for (std::size_t i = 0; i < obs.proprio.len(); ++i) obs.proprio[i] = u(rng);
        const auto t0 = std::chrono::steady_clock::now();
        (void)estimator_step(states, obs, ps, est_cfg);
        const auto t1 = std::chrono::steady_clock::now();
        out.step_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    out.state_bytes_end = state_bytes(states);

    const double n = static_cast<double>(n_steps);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t t = 0; t < n_steps; ++t) {
        const double x = static_cast<double>(t);
        const double y = out.step_seconds[t];
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    out.mean_seconds = sy / n;
    out.slope_per_step = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return out;
}

} // namespace lf2w
