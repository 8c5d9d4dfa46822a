#include "iout/datasets.hpp"

#include <cstring>
#include <fstream>

namespace iout {

namespace {

// All scalar fields are written little-endian.
template <typename T>
void put(std::ostream& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
    std::swap(buf[i], buf[sizeof(T) - 1 - i]);
#endif
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
bool get(std::istream& in, T& v) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) return false;
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
    std::swap(buf[i], buf[sizeof(T) - 1 - i]);
#endif
  std::memcpy(&v, buf, sizeof(T));
  return true;
}

void put_floats(std::ostream& out, const std::vector<float>& v) {
  for (float f : v) put(out, f);
}

bool get_floats(std::istream& in, std::vector<float>& v, std::size_t n) {
  v.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!get(in, v[i])) return false;
  return true;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw DatasetError(DatasetErrorCode::io, "cannot open for write: " + path);
  const DatasetHeader& h = ds.header;
  out.write(DatasetHeader::kMagic, sizeof(DatasetHeader::kMagic));
  put(out, h.format_version);
  put(out, h.obs_layout_version);
  put(out, h.num_agents);
  put(out, h.obs_dim);
  put(out, h.act_dim);
  put(out, h.episode_count);
  put(out, static_cast<std::uint64_t>(ds.transitions.size()));
  put(out, h.config_fingerprint);
  put(out, h.seed);
  put(out, h.noise_sigma);
  put(out, h.noise_seed);

  const std::uint32_t floats_per_record =
      h.num_agents * (2 * h.obs_dim + h.act_dim + 1);
  for (const Transition& t : ds.transitions) {
    put(out, floats_per_record);
    put_floats(out, t.obs);
    put_floats(out, t.act);
    put_floats(out, t.rew);
    put_floats(out, t.next_obs);
    put(out, t.done);
  }
  if (!out)
    throw DatasetError(DatasetErrorCode::io, "write failed: " + path);
}

Dataset load_dataset(const std::string& path,
                     std::uint32_t expected_layout_version) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DatasetError(DatasetErrorCode::io, "cannot open for read: " + path);

  char magic[8];
  if (!in.read(magic, sizeof magic))
    throw DatasetError(DatasetErrorCode::truncated,
                       "file shorter than the magic tag: " + path);
  if (std::memcmp(magic, DatasetHeader::kMagic, sizeof magic) != 0)
    throw DatasetError(DatasetErrorCode::bad_magic,
                       "not a dataset file (bad magic): " + path);

  Dataset ds;
  DatasetHeader& h = ds.header;
  std::uint64_t count = 0;
  if (!(get(in, h.format_version) && get(in, h.obs_layout_version) &&
        get(in, h.num_agents) && get(in, h.obs_dim) && get(in, h.act_dim) &&
        get(in, h.episode_count) && get(in, count) &&
        get(in, h.config_fingerprint) && get(in, h.seed) &&
        get(in, h.noise_sigma) && get(in, h.noise_seed)))
    throw DatasetError(DatasetErrorCode::truncated,
                       "truncated header: " + path);
  if (h.format_version != 1)
    throw DatasetError(DatasetErrorCode::bad_version,
                       "unsupported dataset format version " +
                           std::to_string(h.format_version));
  if (expected_layout_version != 0 &&
      h.obs_layout_version != expected_layout_version)
    throw DatasetError(
        DatasetErrorCode::layout_mismatch,
        "observation layout version mismatch: file has " +
            std::to_string(h.obs_layout_version) + ", expected " +
            std::to_string(expected_layout_version));
  h.transition_count = count;

  const std::uint32_t floats_per_record =
      h.num_agents * (2 * h.obs_dim + h.act_dim + 1);
  ds.transitions.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint32_t len = 0;
    if (!get(in, len))
      throw DatasetError(DatasetErrorCode::truncated,
                         "truncated at record " + std::to_string(i));
    if (len != floats_per_record)
      throw DatasetError(DatasetErrorCode::corrupt,
                         "record length " + std::to_string(len) +
                             " does not match header layout");
    Transition& t = ds.transitions[i];
    const std::size_t per_agent_obs = h.num_agents * h.obs_dim;
    if (!(get_floats(in, t.obs, per_agent_obs) &&
          get_floats(in, t.act, h.num_agents * h.act_dim) &&
          get_floats(in, t.rew, h.num_agents) &&
          get_floats(in, t.next_obs, per_agent_obs) && get(in, t.done)))
      throw DatasetError(DatasetErrorCode::truncated,
                         "truncated at record " + std::to_string(i));
  }
  return ds;
}

void inject_gaussian_noise(Dataset& ds, double sigma, std::uint64_t seed) {
  if (sigma < 0.0)
    throw std::domain_error("inject_gaussian_noise: sigma must be >= 0");
  ds.header.noise_sigma = sigma;
  ds.header.noise_seed = seed;
  if (sigma == 0.0) return;  // bit-identical payload
  Rng rng(seed);
  for (Transition& t : ds.transitions) {
    for (float& x : t.obs)
      x = static_cast<float>(static_cast<double>(x) + sigma * rng.normal());
    for (float& x : t.next_obs)
      x = static_cast<float>(static_cast<double>(x) + sigma * rng.normal());
  }
}

void ReplayBuffer::push(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
  }
}

const Transition& ReplayBuffer::at(std::size_t logical_index) const {
  if (logical_index >= data_.size())
    throw std::out_of_range("ReplayBuffer::at");
  if (data_.size() < capacity_) return data_[logical_index];
  return data_[(head_ + logical_index) % capacity_];
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch_size,
                                                    Rng& rng) const {
  if (data_.empty())
    throw std::runtime_error("ReplayBuffer::sample: buffer is empty");
  std::vector<const Transition*> out(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i)
    out[i] = &data_[rng.uniform_int(data_.size())];
  return out;
}

}  // namespace iout
