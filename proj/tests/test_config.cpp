#include <doctest.h>

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include <lf2w/config.hpp>

using namespace lf2w;

TEST_SUITE("config") {

TEST_CASE("defaults survive an empty document") {
    const RunConfig cfg = run_config_from_json("{}");
    CHECK(cfg.estimator.backbone.d_model == 128);
    CHECK(cfg.estimator.backbone.variant == Variant::DeltaRule);
    CHECK(cfg.train.window_k == 320);
    CHECK(cfg.eval.protocols.size() == 5);
    CHECK(cfg.eval.rmse_threshold == 0.1);
    CHECK(cfg.out_dir == "out");
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("present keys override defaults, absent keys keep them") {
    const RunConfig cfg = run_config_from_json(R"({
        "backbone": {"d_model": 32, "d_k": 8, "d_v": 8, "variant": "gated"},
        "estimator": {"d_d": 16, "d_p": 16},
        "train": {"window_k": 64},
        "out_dir": "elsewhere"
    })");
    CHECK(cfg.estimator.backbone.d_model == 32);
    CHECK(cfg.estimator.backbone.variant == Variant::GatedDelta);
    CHECK(cfg.estimator.backbone.n_layers == 2);  // untouched default
    CHECK(cfg.train.window_k == 64);
    CHECK(cfg.train.batch_envs == 4);  // untouched default
    CHECK(cfg.out_dir == "elsewhere");
}

TEST_CASE("unknown keys are rejected at every nesting level") {
    CHECK_THROWS_AS((void)run_config_from_json(R"({"bogus": 1})"), config_error);
    CHECK_THROWS_AS((void)run_config_from_json(R"({"backbone": {"d_modle": 32}})"),
                    config_error);
    CHECK_THROWS_AS((void)run_config_from_json(R"({"train": {"windows": 5}})"),
                    config_error);
    CHECK_THROWS_AS((void)run_config_from_json(R"({"eval": {"protocol": "P1"}})"),
                    config_error);
    CHECK_THROWS_AS((void)run_config_from_json("not json at all"), config_error);
}

TEST_CASE("invalid values are rejected") {
    CHECK_THROWS((void)run_config_from_json(R"({"backbone": {"variant": "softmax"}})"));
    CHECK_THROWS((void)run_config_from_json(R"({"train": {"protocol": "P9"}})"));
    CHECK_THROWS_AS((void)run_config_from_json(R"({"train": {"delta": 1.5}})"),
                    config_error);
    CHECK_THROWS_AS((void)run_config_from_json(R"({"eval": {"rmse_threshold": -0.5}})"),
                    config_error);
    CHECK_THROWS_AS((void)run_config_from_json(R"({"eval": {"protocols": ["P1", "P9"]}})"),
                    config_error);
}

TEST_CASE("to_json / from_json round trip preserves every field") {
    RunConfig cfg;
    cfg.estimator.backbone.d_model = 48;
    cfg.estimator.backbone.d_k = 12;
    cfg.estimator.backbone.d_v = 12;
    cfg.estimator.backbone.variant = Variant::LinearAttention;
    cfg.estimator.backbone.chunk_size = 8;
    cfg.estimator.d_d = 24;
    cfg.estimator.d_p = 24;
    cfg.train.window_k = 96;
    cfg.train.learning_rate = 3e-4;
    cfg.train.delta = 0.6;
    cfg.train.protocol = Protocol::from_name("P3");
    cfg.eval.protocols = {"P2", "P3"};
    cfg.eval.deltas = {0.3};
    cfg.eval.seeds = 5;
    cfg.out_dir = "roundtrip";

    const RunConfig back = run_config_from_json(run_config_to_json(cfg));
    CHECK(run_config_to_json(back) == run_config_to_json(cfg));
    CHECK(back.estimator.backbone.variant == Variant::LinearAttention);
    CHECK(back.train.learning_rate == 3e-4);
    CHECK(back.train.protocol.id == "P3");
    CHECK(back.eval.deltas == std::vector<double>{0.3});
}

TEST_CASE("serialized form is valid JSON with the expected groups") {
    const auto j = nlohmann::json::parse(run_config_to_json(RunConfig{}));
    CHECK(j.contains("backbone"));
    CHECK(j.contains("estimator"));
    CHECK(j.contains("train"));
    CHECK(j.contains("eval"));
    CHECK(j.contains("out_dir"));
}

TEST_CASE("file save / load round trip") {
    const std::string path =
        std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") +
        "/lf2w_test_config.json";
    RunConfig cfg;
    cfg.train.seed = 123;
    cfg.train.delta = 0.25;
    save_run_config(path, cfg);
    const RunConfig back = load_run_config(path);
    CHECK(back.train.seed == 123);
    CHECK(back.train.delta == 0.25);
    std::remove(path.c_str());
    CHECK_THROWS_AS((void)load_run_config("/nonexistent/cfg.json"), config_error);
}

} // TEST_SUITE
