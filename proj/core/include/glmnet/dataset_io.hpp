#pragma once

#include <filesystem>
#include <vector>

#include "glmnet/synth.hpp"

namespace glmnet {

/// Writes the line-delimited GLM1 dataset format. Decimals use the shortest
/// representation that round-trips the exact double, so save -> load -> save
/// is byte-identical.
void save_features(const std::vector<GraphPair>& pairs,
                   const std::filesystem::path& path);

/// Parses a GLM1 file. Malformed text raises ParseError with the line
/// number; a sample that breaks a GraphPair invariant raises ContractError
/// naming the sample id. Nothing is returned on failure.
std::vector<GraphPair> load_features(const std::filesystem::path& path);

}  // namespace glmnet
