#include "lf2w/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace lf2w {

using json = nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& group,
                const std::set<std::string>& allowed) {
    if (!j.is_object())
        throw config_error("config: '" + group + "' must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key))
            throw config_error("config: unknown key '" + key + "' in " + group);
}

template <typename T>
void get(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void get_variant(const json& j, const char* key, Variant& out) {
    if (j.contains(key)) out = variant_from_name(j.at(key).get<std::string>());
}

void get_protocol(const json& j, const char* key, Protocol& out) {
    if (j.contains(key)) out = Protocol::from_name(j.at(key).get<std::string>());
}

json backbone_to_json(const BackboneConfig& bb) {
    return json{{"n_layers", bb.n_layers},   {"d_model", bb.d_model},
                {"d_k", bb.d_k},             {"d_v", bb.d_v},
                {"n_heads", bb.n_heads},     {"d_ff", bb.d_ff},
                {"chunk_size", bb.chunk_size},
                {"variant", variant_name(bb.variant)}};
}

void backbone_from_json(const json& j, BackboneConfig& bb) {
    check_keys(j, "backbone",
               {"n_layers", "d_model", "d_k", "d_v", "n_heads", "d_ff", "chunk_size",
                "variant"});
    get(j, "n_layers", bb.n_layers);
    get(j, "d_model", bb.d_model);
    get(j, "d_k", bb.d_k);
    get(j, "d_v", bb.d_v);
    get(j, "n_heads", bb.n_heads);
    get(j, "d_ff", bb.d_ff);
    get(j, "chunk_size", bb.chunk_size);
    get_variant(j, "variant", bb.variant);
}

json estimator_to_json(const EstimatorConfig& e) {
    return json{{"h_d", e.h_d},   {"d_o", e.d_o},
                {"h_m", e.h_m},   {"d_vel", e.d_vel},
                {"extero_hidden", e.extero_hidden},
                {"d_d", e.d_d},   {"d_p", e.d_p}};
}

void estimator_from_json(const json& j, EstimatorConfig& e) {
    check_keys(j, "estimator",
               {"h_d", "d_o", "h_m", "d_vel", "extero_hidden", "d_d", "d_p"});
    get(j, "h_d", e.h_d);
    get(j, "d_o", e.d_o);
    get(j, "h_m", e.h_m);
    get(j, "d_vel", e.d_vel);
    get(j, "extero_hidden", e.extero_hidden);
    get(j, "d_d", e.d_d);
    get(j, "d_p", e.d_p);
}

json train_to_json(const TrainConfig& t) {
    return json{{"window_k", t.window_k},
                {"batch_envs", t.batch_envs},
                {"learning_rate", t.learning_rate},
                {"adam_beta1", t.adam_beta1},
                {"adam_beta2", t.adam_beta2},
                {"adam_eps", t.adam_eps},
                {"lambda_m", t.lambda_m},
                {"lambda_v", t.lambda_v},
                {"alpha", t.alpha},
                {"grad_clip", t.grad_clip},
                {"total_windows", t.total_windows},
                {"seed", t.seed},
                {"delta", t.delta},
                {"protocol", t.protocol.id},
                {"speed", t.speed}};
}

void train_from_json(const json& j, TrainConfig& t) {
    check_keys(j, "train",
               {"window_k", "batch_envs", "learning_rate", "adam_beta1", "adam_beta2",
                "adam_eps", "lambda_m", "lambda_v", "alpha", "grad_clip",
                "total_windows", "seed", "delta", "protocol", "speed"});
    get(j, "window_k", t.window_k);
    get(j, "batch_envs", t.batch_envs);
    get(j, "learning_rate", t.learning_rate);
    get(j, "adam_beta1", t.adam_beta1);
    get(j, "adam_beta2", t.adam_beta2);
    get(j, "adam_eps", t.adam_eps);
    get(j, "lambda_m", t.lambda_m);
    get(j, "lambda_v", t.lambda_v);
    get(j, "alpha", t.alpha);
    get(j, "grad_clip", t.grad_clip);
    get(j, "total_windows", t.total_windows);
    get(j, "seed", t.seed);
    get(j, "delta", t.delta);
    get_protocol(j, "protocol", t.protocol);
    get(j, "speed", t.speed);
}

json eval_to_json(const EvalConfig& e) {
    return json{{"protocols", e.protocols},
                {"deltas", e.deltas},
                {"seeds", e.seeds},
                {"rmse_threshold", e.rmse_threshold}};
}

void eval_from_json(const json& j, EvalConfig& e) {
    check_keys(j, "eval", {"protocols", "deltas", "seeds", "rmse_threshold"});
    get(j, "protocols", e.protocols);
    get(j, "deltas", e.deltas);
    get(j, "seeds", e.seeds);
    get(j, "rmse_threshold", e.rmse_threshold);
}

} // namespace

void RunConfig::validate() const {
    estimator.validate();
    train.validate(estimator.backbone);
    if (!(train.delta > 0.0 && train.delta <= 1.0))
        throw config_error("config: train.delta must be in (0, 1]");
    if (eval.rmse_threshold <= 0)
        throw config_error("config: eval.rmse_threshold must be positive");
    if (eval.seeds == 0) throw config_error("config: eval.seeds must be >= 1");
    for (const auto& p : eval.protocols) {
        try {
            Protocol::from_name(p);
        } catch (const std::exception&) {
            throw config_error("config: unknown eval protocol '" + p + "'");
        }
    }
    for (double d : eval.deltas)
        if (!(d > 0.0 && d <= 1.0))
            throw config_error("config: eval.deltas entries must be in (0, 1]");
}

std::string run_config_to_json(const RunConfig& cfg) {
    json j{{"backbone", backbone_to_json(cfg.estimator.backbone)},
           {"estimator", estimator_to_json(cfg.estimator)},
           {"train", train_to_json(cfg.train)},
           {"eval", eval_to_json(cfg.eval)},
           {"out_dir", cfg.out_dir}};
    return j.dump(2);
}

RunConfig run_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("config: invalid JSON: ") + e.what());
    }
    check_keys(j, "top level", {"backbone", "estimator", "train", "eval", "out_dir"});
    RunConfig cfg;
    if (j.contains("backbone")) backbone_from_json(j.at("backbone"), cfg.estimator.backbone);
    if (j.contains("estimator")) estimator_from_json(j.at("estimator"), cfg.estimator);
    if (j.contains("train")) train_from_json(j.at("train"), cfg.train);
    if (j.contains("eval")) eval_from_json(j.at("eval"), cfg.eval);
    get(j, "out_dir", cfg.out_dir);
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error("config: cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return run_config_from_json(ss.str());
}

void save_run_config(const std::string& path, const RunConfig& cfg) {
    std::ofstream os(path);
    if (!os) throw config_error("config: cannot open " + path + " for writing");
    os << run_config_to_json(cfg) << "\n";
}

} // namespace lf2w
