#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "iout/rng.hpp"

namespace iout {

// One joint environment step: per-agent blocks are concatenated in agent
// order. Payload is float32 so files are bit-exact across platforms.
struct Transition {
  std::vector<float> obs;       // num_agents * obs_dim
  std::vector<float> act;       // num_agents * act_dim, physical units
  std::vector<float> rew;       // num_agents
  std::vector<float> next_obs;  // num_agents * obs_dim
  std::uint8_t done = 0;
};

enum class DatasetErrorCode {
  io,
  bad_magic,
  bad_version,
  layout_mismatch,
  truncated,
  corrupt,
};

struct DatasetError : std::runtime_error {
  DatasetErrorCode code;
  DatasetError(DatasetErrorCode c, const std::string& msg)
      : std::runtime_error(msg), code(c) {}
};

struct DatasetHeader {
  static constexpr char kMagic[8] = {'I', 'O', 'U', 'T', 'D', 'S', '0', '1'};
  std::uint32_t format_version = 1;
  std::uint32_t obs_layout_version = 0;
  std::uint32_t num_agents = 0;
  std::uint32_t obs_dim = 0;
  std::uint32_t act_dim = 0;
  std::uint64_t episode_count = 0;
  std::uint64_t transition_count = 0;
  std::uint64_t config_fingerprint = 0;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;
};

struct Dataset {
  DatasetHeader header;
  std::vector<Transition> transitions;
};

// Fixed-size little-endian header + length-prefixed float32 records.
// Round trips are bit-exact; load validates magic, versions and layout.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path,
                     std::uint32_t expected_layout_version =
                         0 /* 0 = accept any layout */);

// Adds i.i.d. zero-mean Gaussian noise of std sigma to observation entries
// (obs and next_obs only; actions and rewards untouched). sigma == 0 leaves
// the dataset bit-identical. Header records sigma and seed.
void inject_gaussian_noise(Dataset& ds, double sigma, std::uint64_t seed);

// FIFO replay buffer with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

  void push(Transition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t logical_index) const;  // 0 = oldest

  // batch_size independent uniform draws; throws on an empty buffer.
  std::vector<const Transition*> sample(std::size_t batch_size,
                                        Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next overwrite position once full
  std::vector<Transition> data_;
};

}  // namespace iout
