#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "qalign/env/alignment_env.hpp"
#include "qalign/rl/sac.hpp"

namespace qalign::rl {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to resume training or evaluate a policy: the agent
/// (networks, targets, optimizer moments, temperature, generator state),
/// the observation normalization it was trained with, and the step count.
struct AgentCheckpoint {
  SacAgent<float> agent;
  env::ObservationScale scale;
  long long train_step = 0;
};

/// Little-endian binary encoding; layout documented in the README.
std::string serialize_checkpoint(const AgentCheckpoint& ckpt);
/// Throws VersionError on a bad magic, unknown version or truncated data.
AgentCheckpoint deserialize_checkpoint(const std::string& bytes);

/// Atomic write (temporary file + rename).
void save_checkpoint(const std::filesystem::path& path, const AgentCheckpoint& ckpt);
AgentCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace qalign::rl
