#pragma once

// Synthetic 1D terrain tracks and forward/backward traversal episodes:
// write terrain into memory while moving forward, retrieve it while moving
// backward with a forward-only field of view.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "lf2w/estimator.hpp"

namespace lf2w {

inline constexpr double kCellSize = 0.1;      // world units per cell
inline constexpr double kGapSentinel = -1.0;  // untraversable void marker
inline constexpr double kExteroNear = 0.1;    // extero window [near, near + (h_d-1)*cell]
inline constexpr double kMapBehind = -1.0;    // map window [-1.0, -1.0 + (h_m-1)*cell]

struct TerrainFeature {
    enum class Kind { step, gap } kind;
    std::size_t position;  // cell index
    double magnitude;      // step height (units) or gap width (units)
};

struct TerrainTrack {
    double cell_size = kCellSize;
    std::vector<double> heights;  // per-cell elevation; gaps carry the sentinel
    std::vector<TerrainFeature> features;

    double height_at(double pos_units) const;  // nearest-cell sample, clamped
};

struct Protocol {
    std::size_t forward_steps = 500;
    std::size_t backward_steps = 500;
    std::string id = "P1";

    static Protocol p1() { return {500, 500, "P1"}; }
    static Protocol p2() { return {1000, 500, "P2"}; }
    static Protocol p3() { return {1000, 1000, "P3"}; }
    static Protocol p4() { return {1500, 500, "P4"}; }
    // The long-retrieval stress protocol exists in two lengths; p5 is the
    // default and p5_alt the shorter backward-horizon reading.
    static Protocol p5() { return {1500, 1500, "P5"}; }
    static Protocol p5_alt() { return {1500, 1000, "P5alt"}; }
    static Protocol from_name(const std::string& name);

    std::size_t total_steps() const { return forward_steps + backward_steps; }
};

enum class Phase : std::uint8_t { forward, backward };

struct TraversalEpisode {
    TerrainTrack track;
    std::vector<double> positions;      // units, per step
    std::vector<Phase> phases;
    std::vector<Observation> observations;
    std::vector<Vector> target_m;
    std::vector<Vector> target_v;
};

// Feature magnitudes scale linearly with delta: steps up to 0.8*delta units,
// gaps up to 1.1*delta units wide. Deterministic per seed.
TerrainTrack generate_track(double delta, std::size_t length_cells, std::uint64_t seed);

// Walks forward for protocol.forward_steps then backward, emitting aligned
// observations and ground-truth targets. speed is in cells per step.
TraversalEpisode simulate_traversal(const TerrainTrack& track, const Protocol& protocol,
                                    double speed, std::uint64_t noise_seed,
                                    const EstimatorConfig& cfg);

// One JSON object per step: position, phase, extero, proprio, target_m, target_v.
void write_episode(const TraversalEpisode& ep, std::ostream& os);

// ---- associative recall ----

struct RecallTask {
    std::vector<Vector> keys;    // unit-norm; orthonormal when n_pairs <= d_key
    std::vector<Vector> values;
    std::vector<std::size_t> queries;  // indices into keys, in query order
};

RecallTask generate_recall_task(std::size_t n_pairs, std::size_t d_key, std::uint64_t seed);

} // namespace lf2w
