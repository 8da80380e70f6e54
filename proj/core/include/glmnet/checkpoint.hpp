#pragma once

#include <filesystem>

#include "glmnet/train.hpp"

namespace glmnet {

/// Binary snapshot of a training run: magic "GLMC", a u16 format version,
/// the config, epoch counter, metric history, every parameter with its
/// optimizer moments (little-endian 64-bit floats), and a trailing checksum.
/// load(save(state)) reproduces forward outputs bit-identically.
void save_checkpoint(const TrainState& state,
                     const std::filesystem::path& path);

TrainState load_checkpoint(const std::filesystem::path& path);

}  // namespace glmnet
