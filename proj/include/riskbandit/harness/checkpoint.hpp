#pragma once

#include <filesystem>

#include "json.hpp"

namespace riskbandit::harness {

inline constexpr int kCheckpointVersion = 1;

/// Text file: a header line `riskbandit-checkpoint <version> <fnv1a64 hex>`
/// followed by the JSON payload the checksum covers.
void write_checkpoint(const std::filesystem::path& path, const nlohmann::json& payload);

/// Throws IntegrityError on a missing header, version mismatch, checksum
/// mismatch or unparsable payload.
nlohmann::json read_checkpoint(const std::filesystem::path& path);

}  // namespace riskbandit::harness
