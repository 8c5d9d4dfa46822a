#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "iout/nets.hpp"

namespace iout {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Versioned binary checkpoint: shape manifest followed by little-endian
// float64 parameter blobs, one policy per agent.
struct CheckpointMeta {
  std::uint32_t obs_layout_version = 0;
  std::uint64_t config_fingerprint = 0;
  std::uint64_t seed = 0;
};

void save_policies(const std::string& path,
                   const std::vector<GaussianPolicy>& policies,
                   const CheckpointMeta& meta);

struct LoadedPolicies {
  std::vector<GaussianPolicy> policies;
  CheckpointMeta meta;
};

LoadedPolicies load_policies(const std::string& path);

}  // namespace iout
