// lf2w command-line tool: train / eval / check / bench / gen.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include <lf2w/checkpoint.hpp>
#include <lf2w/config.hpp>
#include <lf2w/evalsuite.hpp>

#include "check_suite.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace lf2w;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::string variant;
    std::string protocol;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t chunk_size = 0;
    double delta = 0;
    bool delta_set = false;
    double threshold = 0;
    bool threshold_set = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_task_flags) {
    cmd->add_option("--config", f.config_path, "JSON run configuration file");
    cmd->add_option("--out-dir", f.out_dir, "output directory");
    cmd->add_option("--seed", f.seed, "RNG seed")->each([&](const std::string&) {
        f.seed_set = true;
    });
    if (with_task_flags) {
        cmd->add_option("--variant", f.variant, "memory rule: delta | gated | linear")
            ->check(CLI::IsMember({"delta", "gated", "linear"}));
        cmd->add_option("--chunk-size", f.chunk_size, "chunkwise block length");
        cmd->add_option("--protocol", f.protocol, "traversal protocol id (P1..P5, P5alt)");
        cmd->add_option("--delta", f.delta, "terrain difficulty in (0, 1]")
            ->each([&](const std::string&) { f.delta_set = true; });
        cmd->add_option("--threshold", f.threshold, "success RMSE threshold")
            ->each([&](const std::string&) { f.threshold_set = true; });
    }
}

// Precedence: defaults < config file < flags.
RunConfig resolve_config(const CommonFlags& f) {
    RunConfig cfg = f.config_path.empty() ? RunConfig{} : load_run_config(f.config_path);
    if (!f.variant.empty()) cfg.estimator.backbone.variant = variant_from_name(f.variant);
    if (f.chunk_size > 0) cfg.estimator.backbone.chunk_size = f.chunk_size;
    if (!f.protocol.empty()) cfg.train.protocol = Protocol::from_name(f.protocol);
    if (f.delta_set) cfg.train.delta = f.delta;
    if (f.seed_set) cfg.train.seed = f.seed;
    if (f.threshold_set) cfg.eval.rmse_threshold = f.threshold;
    if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
    cfg.validate();
    return cfg;
}

void ensure_out_dir(const RunConfig& cfg) { fs::create_directories(cfg.out_dir); }

int cmd_train(const CommonFlags& f, const std::string& resume_path) {
    RunConfig cfg = resolve_config(f);

    ParamStore ps;
    OptimizerState opt;
    std::size_t base_window = 0;
    if (!resume_path.empty()) {
        Checkpoint ckpt = load_checkpoint(resume_path);
        RunConfig stored = run_config_from_json(ckpt.config_json);
        stored.train = cfg.train;  // schedule still controlled by flags/config
        stored.out_dir = cfg.out_dir;
        cfg = stored;
        ps = std::move(ckpt.params);
        if (ckpt.optimizer) opt = std::move(*ckpt.optimizer);
        base_window = opt.step;  // metrics indices continue across the resume
    } else {
        std::mt19937_64 rng(cfg.train.seed);
        init_estimator_params(ps, cfg.estimator, rng);
        opt = make_optimizer_state(ps);
    }
    ensure_out_dir(cfg);

    std::ofstream metrics(fs::path(cfg.out_dir) / "metrics.jsonl",
                          base_window > 0 ? std::ios::app : std::ios::trunc);
    const TrainResult result =
        run_training(ps, opt, cfg.estimator, cfg.train, [&](const WindowMetrics& wm) {
            metrics << json{{"window", base_window + wm.window_index},
                            {"loss", wm.loss},
                            {"map_rmse", wm.map_rmse},
                            {"vel_rmse", wm.vel_rmse},
                            {"grad_norm", wm.grad_norm},
                            {"wall_seconds", wm.wall_seconds}}
                           .dump()
                    << "\n";
            metrics.flush();
            std::cout << "window " << base_window + wm.window_index << "  loss " << wm.loss
                      << "  map_rmse " << wm.map_rmse << "\n";
        });

    Checkpoint ckpt;
    ckpt.config_json = run_config_to_json(cfg);
    ckpt.params = ps;
    ckpt.optimizer = opt;
    const std::string ckpt_path = (fs::path(cfg.out_dir) / "model.ckpt").string();
    save_checkpoint(ckpt_path, ckpt);
    std::cout << "trained " << result.metrics.size() << " windows; checkpoint at "
              << ckpt_path << "\n";
    return 0;
}

int cmd_eval(const CommonFlags& f, const std::string& ckpt_path) {
    RunConfig cfg = resolve_config(f);

    ParamStore ps;
    if (!ckpt_path.empty()) {
        Checkpoint ckpt = load_checkpoint(ckpt_path);
        RunConfig stored = run_config_from_json(ckpt.config_json);
        stored.eval = cfg.eval;  // eval grid still controlled by flags/config
        stored.out_dir = cfg.out_dir;
        cfg = stored;
        ps = std::move(ckpt.params);
    } else {
        std::mt19937_64 rng(cfg.train.seed);
        init_estimator_params(ps, cfg.estimator, rng);
    }
    ensure_out_dir(cfg);

    const EvalReport report = eval_protocol_grid(ps, cfg.estimator, cfg.eval,
                                                 cfg.train.seed, cfg.train.speed);
    {
        std::ofstream os(fs::path(cfg.out_dir) / "report.json");
        write_report_json(report, os);
    }
    {
        std::ofstream os(fs::path(cfg.out_dir) / "report.csv");
        write_report_csv(report, os);
    }
    for (const RmseEval& c : report.cells)
        std::cout << c.protocol << " delta=" << c.delta << "  rmse " << c.mean_rmse
                  << " (baseline " << c.baseline_rmse << ")  success "
                  << c.success_rate << "\n";
    std::cout << "report written to " << cfg.out_dir << "\n";
    return 0;
}

int cmd_check(std::uint64_t seed) {
    const std::vector<CheckResult> results = run_check_suite(seed);
    bool all = true;
    for (const CheckResult& r : results) {
        std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << "  (worst "
                  << r.worst << ", tolerance " << r.tolerance << ")\n";
        all = all && r.passed;
    }
    return all ? 0 : 1;
}

int cmd_bench(const CommonFlags& f, std::size_t steps) {
    RunConfig cfg = resolve_config(f);
    ParamStore ps;
    std::mt19937_64 rng(cfg.train.seed);
    init_estimator_params(ps, cfg.estimator, rng);

    const LatencyProfile lat = bench_inference(ps, cfg.estimator, steps, cfg.train.seed);
    json out{{"steps", steps},
             {"mean_step_seconds", lat.mean_seconds},
             {"slope_seconds_per_step", lat.slope_per_step},
             {"state_bytes_start", lat.state_bytes_start},
             {"state_bytes_end", lat.state_bytes_end}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_gen(const CommonFlags& f, std::size_t episodes, double speed) {
    RunConfig cfg = resolve_config(f);
    ensure_out_dir(cfg);
    const Protocol protocol = cfg.train.protocol;
    const std::size_t cells = static_cast<std::size_t>(
        std::ceil((3.0 + protocol.forward_steps * speed * kCellSize + 3.0) / kCellSize));
    for (std::size_t e = 0; e < episodes; ++e) {
        const std::uint64_t seed = cfg.train.seed + e;
        const TraversalEpisode ep =
            simulate_traversal(generate_track(cfg.train.delta, cells, seed), protocol,
                               speed, seed ^ 0x9e3779b97f4a7c15ULL, cfg.estimator);
        const fs::path path =
            fs::path(cfg.out_dir) / ("episode_" + std::to_string(e) + ".jsonl");
        std::ofstream os(path);
        write_episode(ep, os);
        std::cout << "wrote " << path.string() << " (" << ep.positions.size()
                  << " steps)\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"delta-rule terrain memory: training, evaluation, and checks"};
    app.require_subcommand(1);

    CommonFlags train_f, eval_f, bench_f, gen_f;
    std::string ckpt_path, resume_path;
    std::uint64_t check_seed = 0;
    std::size_t bench_steps = 2000;
    std::size_t gen_episodes = 1;
    double gen_speed = 0.25;

    CLI::App* train = app.add_subcommand("train", "supervised rollout-window training");
    add_common(train, train_f, true);
    train->add_option("--resume", resume_path, "checkpoint to resume from");

    CLI::App* eval = app.add_subcommand("eval", "protocol grid evaluation");
    add_common(eval, eval_f, true);
    eval->add_option("--checkpoint", ckpt_path, "checkpoint to evaluate");

    CLI::App* check = app.add_subcommand("check", "numerical self-verification");
    check->add_option("--seed", check_seed, "RNG seed");

    CLI::App* bench = app.add_subcommand("bench", "recurrent inference latency");
    add_common(bench, bench_f, true);
    bench->add_option("--steps", bench_steps, "inference steps to time");

    CLI::App* gen = app.add_subcommand("gen", "generate traversal episodes (JSONL)");
    add_common(gen, gen_f, true);
    gen->add_option("--episodes", gen_episodes, "number of episodes");
    gen->add_option("--speed", gen_speed, "agent speed in cells per step");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(train_f, resume_path);
        if (eval->parsed()) return cmd_eval(eval_f, ckpt_path);
        if (check->parsed()) return cmd_check(check_seed);
        if (bench->parsed()) return cmd_bench(bench_f, bench_steps);
        if (gen->parsed()) return cmd_gen(gen_f, gen_episodes, gen_speed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
