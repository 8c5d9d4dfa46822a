#include "iout/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace iout {

namespace {

constexpr char kMagic[8] = {'I', 'O', 'U', 'T', 'C', 'K', '0', '1'};

template <typename T>
void put(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
    std::swap(buf[i], buf[sizeof(T) - 1 - i]);
#endif
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
void get_or_throw(std::istream& in, T& v, const char* what) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T)))
    throw CheckpointError(std::string("checkpoint truncated reading ") + what);
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
    std::swap(buf[i], buf[sizeof(T) - 1 - i]);
#endif
  std::memcpy(&v, buf, sizeof(T));
}

void put_mlp(std::ostream& out, const Mlp& net) {
  put(out, static_cast<std::uint32_t>(net.hidden_act));
  put(out, static_cast<std::uint32_t>(net.layers.size()));
  for (const DenseLayer& l : net.layers) {
    put(out, static_cast<std::uint64_t>(l.in));
    put(out, static_cast<std::uint64_t>(l.out));
    put(out, static_cast<std::uint8_t>(l.b.empty() ? 0 : 1));
    for (double w : l.w) put(out, w);
    for (double b : l.b) put(out, b);
  }
}

Mlp get_mlp(std::istream& in) {
  Mlp net;
  std::uint32_t act = 0, nlayers = 0;
  get_or_throw(in, act, "activation");
  get_or_throw(in, nlayers, "layer count");
  net.hidden_act = static_cast<Activation>(act);
  net.layers.resize(nlayers);
  for (DenseLayer& l : net.layers) {
    std::uint64_t lin = 0, lout = 0;
    std::uint8_t has_bias = 0;
    get_or_throw(in, lin, "layer in");
    get_or_throw(in, lout, "layer out");
    get_or_throw(in, has_bias, "bias flag");
    l.in = lin;
    l.out = lout;
    l.w.resize(l.in * l.out);
    for (double& w : l.w) get_or_throw(in, w, "weights");
    if (has_bias) {
      l.b.resize(l.out);
      for (double& b : l.b) get_or_throw(in, b, "biases");
    }
  }
  return net;
}

}  // namespace

void save_policies(const std::string& path,
                   const std::vector<GaussianPolicy>& policies,
                   const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open for write: " + path);
  out.write(kMagic, sizeof kMagic);
  put(out, meta.obs_layout_version);
  put(out, meta.config_fingerprint);
  put(out, meta.seed);
  put(out, static_cast<std::uint32_t>(policies.size()));
  for (const GaussianPolicy& p : policies) {
    put(out, static_cast<std::uint64_t>(p.action_dim));
    put_mlp(out, p.net);
  }
  if (!out) throw CheckpointError("write failed: " + path);
}

LoadedPolicies load_policies(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open for read: " + path);
  char magic[8];
  if (!in.read(magic, sizeof magic) ||
      std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw CheckpointError("not a checkpoint file (bad magic): " + path);
  LoadedPolicies lp;
  get_or_throw(in, lp.meta.obs_layout_version, "layout version");
  get_or_throw(in, lp.meta.config_fingerprint, "config fingerprint");
  get_or_throw(in, lp.meta.seed, "seed");
  std::uint32_t count = 0;
  get_or_throw(in, count, "policy count");
  lp.policies.resize(count);
  for (GaussianPolicy& p : lp.policies) {
    std::uint64_t ad = 0;
    get_or_throw(in, ad, "action dim");
    p.action_dim = ad;
    p.net = get_mlp(in);
  }
  return lp;
}

}  // namespace iout
