#pragma once

#include <string>

#include "alpine/decision.hpp"
#include "alpine/lightae.hpp"

namespace alpine::model_io {

// Versioned binary files: 4-byte magic, u32 version, little-endian fields,
// network parameters as 32-bit floats.

void save_library(const lightae::BlockLibrary& lib, const std::string& path);
lightae::BlockLibrary load_library(const std::string& path);

struct AgentCheckpoint {
  decision::Actor actor;
  decision::RewardParams reward_params;
};

void save_agent(const decision::Actor& actor, const decision::RewardParams& rp,
                const std::string& path);
AgentCheckpoint load_agent(const std::string& path);

}  // namespace alpine::model_io
