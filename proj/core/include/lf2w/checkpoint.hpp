#pragma once

// Versioned binary checkpoint: magic "LF2W", embedded config JSON, named
// tensors (little-endian raw values), optional optimizer state, and a
// trailing content checksum. Layout is documented in docs/checkpoint.md.

#include <optional>
#include <string>

#include "lf2w/trainer.hpp"

namespace lf2w {

struct Checkpoint {
    std::string config_json;
    ParamStore params;
    std::optional<OptimizerState> optimizer;
    Precision precision = Precision::f64;
};

struct checkpoint_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);

// Verifies magic, version, and checksum; throws checkpoint_error on mismatch.
Checkpoint load_checkpoint(const std::string& path);

std::uint64_t fnv1a64(const void* data, std::size_t len,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

} // namespace lf2w
