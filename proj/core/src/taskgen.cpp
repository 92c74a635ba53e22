#include "lf2w/taskgen.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "json.hpp"

namespace lf2w {

double TerrainTrack::height_at(double pos_units) const {
    if (heights.empty()) return 0.0;
    long idx = std::lround(pos_units / cell_size);
    if (idx < 0) idx = 0;
    if (idx >= static_cast<long>(heights.size())) idx = static_cast<long>(heights.size()) - 1;
    return heights[static_cast<std::size_t>(idx)];
}

Protocol Protocol::from_name(const std::string& name) {
    if (name == "P1") return p1();
    if (name == "P2") return p2();
    if (name == "P3") return p3();
    if (name == "P4") return p4();
    if (name == "P5") return p5();
    if (name == "P5alt") return p5_alt();
    throw std::invalid_argument("unknown protocol: " + name);
}

TerrainTrack generate_track(double delta, std::size_t length_cells, std::uint64_t seed) {
    if (!(delta > 0.0 && delta <= 1.0))
        throw std::invalid_argument("generate_track: delta must be in (0, 1]");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    TerrainTrack track;
    track.heights.assign(length_cells, 0.0);

    const double max_step = 0.8 * delta;  // units
    const double max_gap = 1.1 * delta;   // units
    const std::size_t start_margin = 30;
    const std::size_t end_margin = 40;
    if (length_cells < start_margin + end_margin + 10) return track;  // too short: flat

    double base = 0.0;
    std::size_t pos = start_margin;
    std::size_t written = start_margin;  // heights below `written` are final (gaps aside)

    auto fill_to = [&](std::size_t cell) {
        for (; written < cell && written < length_cells; ++written) track.heights[written] = base;
    };

    while (pos + end_margin < length_cells) {
        const bool is_gap = unit(rng) < 0.4;
        fill_to(pos);
        if (is_gap) {
            const double width = (0.25 + 0.75 * unit(rng)) * max_gap;
            const std::size_t w = static_cast<std::size_t>(std::lround(width / track.cell_size));
            if (w > 0) {
                track.features.push_back({TerrainFeature::Kind::gap, pos, width});
                for (std::size_t i = 0; i < w && pos + i < length_cells; ++i)
                    track.heights[pos + i] = kGapSentinel;
                written = std::min(length_cells, pos + w);
                pos += w;
                // occasional height offset between the two gap edges
                if (unit(rng) < 0.4) {
                    const double off = unit(rng) * 0.7 * delta;
                    base += (unit(rng) < 0.5 ? off : -off);
                }
                pos += 5;  // minimum feature separation
            }
        } else {
            const double mag = (0.25 + 0.75 * unit(rng)) * max_step;
            int dir = unit(rng) < 0.5 ? 1 : -1;
            if (base > 1.5 * max_step) dir = -1;
            if (base < -1.5 * max_step) dir = 1;
            track.features.push_back({TerrainFeature::Kind::step, pos, mag});
            base += dir * mag;
            pos += 5;
        }
        pos += 10 + static_cast<std::size_t>(unit(rng) * 30.0);
    }
    fill_to(length_cells);
    return track;
}

TraversalEpisode simulate_traversal(const TerrainTrack& track, const Protocol& protocol,
                                    double speed, std::uint64_t noise_seed,
                                    const EstimatorConfig& cfg) {
    const double v = speed * track.cell_size;  // units per step
    const double s0 = 3.0;
    const double extero_far = kExteroNear + (cfg.h_d - 1) * track.cell_size;
    const double needed = s0 + protocol.forward_steps * v + extero_far + track.cell_size;
    if (static_cast<double>(track.heights.size()) * track.cell_size < needed)
        throw std::invalid_argument("simulate_traversal: track too short for protocol");

    // The backward leg never drops below this, so every target cell was
    // previewed by some forward-phase extero window.
    const double min_pos = s0 + (kExteroNear - kMapBehind);

    std::mt19937_64 rng(noise_seed);
    std::normal_distribution<double> disp_noise(0.0, 0.01 * track.cell_size);

    TraversalEpisode ep;
    ep.track = track;
    const std::size_t n = protocol.total_steps();
    ep.positions.reserve(n);
    double pos = s0;
    for (std::size_t t = 0; t < n; ++t) {
        const bool fwd = t < protocol.forward_steps;
        const double commanded = fwd ? v : -v;
        double np = pos + commanded;
        if (!fwd && np < min_pos) np = std::min(pos, min_pos);
        const double dpos = np - pos;
        pos = np;

        Observation obs;
        obs.extero = Vector(cfg.h_d);
        for (std::size_t i = 0; i < cfg.h_d; ++i)
            obs.extero[i] = track.height_at(pos + kExteroNear + i * track.cell_size);
        obs.proprio = Vector(cfg.d_o);
        obs.proprio[0] = commanded;
        obs.proprio[1] = dpos + (dpos != 0.0 ? disp_noise(rng) : 0.0);
        if (cfg.d_o > 2) obs.proprio[2] = 1.0;  // facing direction, fixed forward

        Vector m(cfg.h_m);
        for (std::size_t i = 0; i < cfg.h_m; ++i)
            m[i] = track.height_at(pos + kMapBehind + i * track.cell_size);
        Vector vt(cfg.d_vel);
        vt[0] = dpos;

        ep.positions.push_back(pos);
        ep.phases.push_back(fwd ? Phase::forward : Phase::backward);
        ep.observations.push_back(std::move(obs));
        ep.target_m.push_back(std::move(m));
        ep.target_v.push_back(std::move(vt));
    }
    return ep;
}

void write_episode(const TraversalEpisode& ep, std::ostream& os) {
    for (std::size_t t = 0; t < ep.positions.size(); ++t) {
        nlohmann::json j;
        j["position"] = ep.positions[t];
        j["phase"] = ep.phases[t] == Phase::forward ? "forward" : "backward";
        j["extero"] = std::vector<double>(ep.observations[t].extero.data(),
                                          ep.observations[t].extero.data() +
                                              ep.observations[t].extero.len());
        j["proprio"] = std::vector<double>(ep.observations[t].proprio.data(),
                                           ep.observations[t].proprio.data() +
                                               ep.observations[t].proprio.len());
        j["target_m"] = std::vector<double>(ep.target_m[t].data(),
                                            ep.target_m[t].data() + ep.target_m[t].len());
        j["target_v"] = std::vector<double>(ep.target_v[t].data(),
                                            ep.target_v[t].data() + ep.target_v[t].len());
        os << j.dump() << "\n";
    }
}

RecallTask generate_recall_task(std::size_t n_pairs, std::size_t d_key, std::uint64_t seed) {
    if (n_pairs < 1) throw std::invalid_argument("generate_recall_task: n_pairs must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    RecallTask task;
    for (std::size_t i = 0; i < n_pairs; ++i) {
        Vector k(d_key);
        for (std::size_t j = 0; j < d_key; ++j) k[j] = gauss(rng);
        if (n_pairs <= d_key) {
            // Gram-Schmidt against previous keys: orthonormal presentation set
            for (const Vector& prev : task.keys) {
                const double d = dot(k, prev);
                for (std::size_t j = 0; j < d_key; ++j) k[j] -= d * prev[j];
            }
        }
        const double nrm = norm2(k);
        detail::require(nrm > 1e-9, "generate_recall_task: degenerate key draw");
        task.keys.push_back(scale(k, 1.0 / nrm));

        Vector v(d_key);
        for (std::size_t j = 0; j < d_key; ++j) v[j] = gauss(rng);
        task.values.push_back(std::move(v));
    }
    task.queries.resize(n_pairs);
    for (std::size_t i = 0; i < n_pairs; ++i) task.queries[i] = i;
    std::shuffle(task.queries.begin(), task.queries.end(), rng);
    return task;
}

} // namespace lf2w
