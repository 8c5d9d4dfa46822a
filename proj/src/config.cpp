#include "iout/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace iout {

void TrainConfig::sync_derived() {
  priority.c_max_bits = world.c_max_bits;
  priority.n_max_bps = acoustics.capacity_clamp_bps;
  reward.d_s = world.crash_distance;
}

void TrainConfig::validate() const {
  try {
    acoustics.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (world.num_auvs < 1) throw ConfigError("world.num_auvs must be >= 1");
  if (world.num_devices < 1)
    throw ConfigError("world.num_devices must be >= 1");
  if (!(world.dt > 0.0)) throw ConfigError("world.dt must be > 0");
  if (!(world.field_size > 0.0))
    throw ConfigError("world.field_size must be > 0");
  if (!(world.needing_fraction >= 0.0 && world.needing_fraction <= 1.0))
    throw ConfigError("world.needing_fraction must be in [0,1]");
  if (!(voi.beta >= 0.0 && voi.beta <= 1.0))
    throw ConfigError("voi.beta must be in [0,1]");
  if (!(voi.sigma > 0.0)) throw ConfigError("voi.sigma must be > 0");
  if (!(priority.epsilon > 0.0))
    throw ConfigError("priority.epsilon must be > 0");
  if (!(reward.d_r > 0.0)) throw ConfigError("reward.d_r must be > 0");
  if (!(reward.o > 0.0)) throw ConfigError("reward.o must be > 0");
  if (!(train.gamma > 0.0 && train.gamma < 1.0))
    throw ConfigError("train.gamma must be in (0,1)");
  if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (train.buffer_capacity < 1)
    throw ConfigError("train.buffer_capacity must be >= 1");
  if (cql.num_action_samples < 1)
    throw ConfigError("cql.num_action_samples must be >= 1");
  if (!(cql.alpha_cql >= 0.0)) throw ConfigError("cql.alpha_cql must be >= 0");
  if (mdp.node_slots < 1) throw ConfigError("mdp.node_slots must be >= 1");
  auto check01 = [](double v, const char* name) {
    if (!(v > 0.0 && v < 1.0))
      throw ConfigError(std::string(name) + " must be in (0,1)");
  };
  check01(objective.data, "objective.data");
  check01(objective.capacity, "objective.capacity");
  check01(objective.voi, "objective.voi");
  check01(objective.energy, "objective.energy");
}

namespace {

// Field registry: one entry per (section, key), mapping to a typed slot in
// TrainConfig. Drives parsing, canonical serialization and the fingerprint,
// so the three can never drift apart.
struct FieldRef {
  enum class Type { real, integer, boolean, u64 } type;
  std::function<void(TrainConfig&, double)> set_real;
  std::function<double(const TrainConfig&)> get_real;
  std::function<void(TrainConfig&, std::int64_t)> set_int;
  std::function<std::int64_t(const TrainConfig&)> get_int;
  std::function<void(TrainConfig&, bool)> set_bool;
  std::function<bool(const TrainConfig&)> get_bool;
  std::function<void(TrainConfig&, std::uint64_t)> set_u64;
  std::function<std::uint64_t(const TrainConfig&)> get_u64;
};

using FieldMap = std::map<std::string, std::map<std::string, FieldRef>>;

template <typename Get, typename Set>
FieldRef make_real(Get get, Set set) {
  FieldRef f;
  f.type = FieldRef::Type::real;
  f.get_real = get;
  f.set_real = set;
  return f;
}

template <typename Get, typename Set>
FieldRef make_int(Get get, Set set) {
  FieldRef f;
  f.type = FieldRef::Type::integer;
  f.get_int = get;
  f.set_int = set;
  return f;
}

template <typename Get, typename Set>
FieldRef make_bool(Get get, Set set) {
  FieldRef f;
  f.type = FieldRef::Type::boolean;
  f.get_bool = get;
  f.set_bool = set;
  return f;
}

#define REAL_FIELD(expr)                                             \
  make_real([](const TrainConfig& c) { return c.expr; },            \
            [](TrainConfig& c, double v) { c.expr = v; })
#define INT_FIELD(expr)                                              \
  make_int([](const TrainConfig& c) -> std::int64_t { return c.expr; }, \
           [](TrainConfig& c, std::int64_t v) {                      \
             c.expr = static_cast<int>(v);                           \
           })
#define BOOL_FIELD(expr)                                             \
  make_bool([](const TrainConfig& c) { return c.expr; },             \
            [](TrainConfig& c, bool v) { c.expr = v; })

const FieldMap& field_map() {
  static const FieldMap m = [] {
    FieldMap fm;
    {
      FieldRef seed;
      seed.type = FieldRef::Type::u64;
      seed.get_u64 = [](const TrainConfig& c) { return c.seed; };
      seed.set_u64 = [](TrainConfig& c, std::uint64_t v) { c.seed = v; };
      fm["run"]["seed"] = seed;
    }
    auto& w = fm["world"];
    w["field_size"] = REAL_FIELD(world.field_size);
    w["num_devices"] = INT_FIELD(world.num_devices);
    w["num_auvs"] = INT_FIELD(world.num_auvs);
    w["water_depth"] = REAL_FIELD(world.water_depth);
    w["sailing_depth"] = REAL_FIELD(world.sailing_depth);
    w["comm_distance"] = REAL_FIELD(world.comm_distance);
    w["v_max"] = REAL_FIELD(world.v_max);
    w["accel_max"] = REAL_FIELD(world.accel_max);
    w["ang_vel_max"] = REAL_FIELD(world.ang_vel_max);
    w["dt"] = REAL_FIELD(world.dt);
    w["episode_duration"] = REAL_FIELD(world.episode_duration);
    w["crash_distance"] = REAL_FIELD(world.crash_distance);
    w["c_max_bits"] = REAL_FIELD(world.c_max_bits);
    w["arrival_rate_bps"] = REAL_FIELD(world.arrival_rate_bps);
    w["needing_fraction"] = REAL_FIELD(world.needing_fraction);
    w["initial_voi"] = REAL_FIELD(world.initial_voi);
    w["turbulence"] = BOOL_FIELD(world.turbulence);
    w["num_vortices"] = INT_FIELD(world.num_vortices);
    w["vortex_gamma"] = REAL_FIELD(world.vortex_gamma);
    w["vortex_delta"] = REAL_FIELD(world.vortex_delta);

    auto& a = fm["acoustics"];
    a["center_frequency_khz"] = REAL_FIELD(acoustics.center_frequency_khz);
    a["source_level_db"] = REAL_FIELD(acoustics.source_level_db);
    a["target_strength_db"] = REAL_FIELD(acoustics.target_strength_db);
    a["directivity_index_db"] = REAL_FIELD(acoustics.directivity_index_db);
    a["detection_threshold_db"] = REAL_FIELD(acoustics.detection_threshold_db);
    a["shipping_activity"] = REAL_FIELD(acoustics.shipping_activity);
    a["wind_speed_mps"] = REAL_FIELD(acoustics.wind_speed_mps);
    a["bandwidth_hz"] = REAL_FIELD(acoustics.bandwidth_hz);
    a["capacity_clamp_bps"] = REAL_FIELD(acoustics.capacity_clamp_bps);

    fm["energy"]["hover_power_w"] = REAL_FIELD(hover_power_w);

    auto& p = fm["priority"];
    p["xi"] = REAL_FIELD(priority.xi);
    p["epsilon"] = REAL_FIELD(priority.epsilon);

    auto& v = fm["voi"];
    v["beta"] = REAL_FIELD(voi.beta);
    v["sigma"] = REAL_FIELD(voi.sigma);

    auto& r = fm["reward"];
    r["w_ec"] = REAL_FIELD(reward.w_ec);
    r["w_voi"] = REAL_FIELD(reward.w_voi);
    r["w_dr"] = REAL_FIELD(reward.w_dr);
    r["w_dp"] = REAL_FIELD(reward.w_dp);
    r["w_cs"] = REAL_FIELD(reward.w_cs);
    r["d_r"] = REAL_FIELD(reward.d_r);
    r["o"] = REAL_FIELD(reward.o);

    auto& o = fm["objective"];
    o["data"] = REAL_FIELD(objective.data);
    o["capacity"] = REAL_FIELD(objective.capacity);
    o["voi"] = REAL_FIELD(objective.voi);
    o["energy"] = REAL_FIELD(objective.energy);

    auto& md = fm["mdp"];
    md["node_slots"] = INT_FIELD(mdp.node_slots);
    md["comm_range_auv"] = REAL_FIELD(mdp.comm_range_auv);

    auto& t = fm["train"];
    t["lr"] = REAL_FIELD(train.lr);
    t["lr_alpha"] = REAL_FIELD(train.lr_alpha);
    t["alpha_init"] = REAL_FIELD(train.alpha_init);
    t["tau"] = REAL_FIELD(train.tau);
    t["gamma"] = REAL_FIELD(train.gamma);
    t["epochs"] = INT_FIELD(train.epochs);
    t["batch_size"] = INT_FIELD(train.batch_size);
    t["buffer_capacity"] = INT_FIELD(train.buffer_capacity);
    t["target_entropy_h0"] = REAL_FIELD(train.target_entropy_h0);
    t["target_entropy_sign"] = REAL_FIELD(train.target_entropy_sign);
    t["updates_per_epoch"] = INT_FIELD(train.updates_per_epoch);
    t["hidden1"] = INT_FIELD(train.hidden1);
    t["hidden2"] = INT_FIELD(train.hidden2);

    auto& on = fm["online"];
    on["start_steps"] = INT_FIELD(online.start_steps);
    on["update_after"] = INT_FIELD(online.update_after);
    on["updates_per_step"] = INT_FIELD(online.updates_per_step);
    on["eval_every"] = INT_FIELD(online.eval_every);

    auto& c = fm["cql"];
    c["alpha_cql"] = REAL_FIELD(cql.alpha_cql);
    c["num_action_samples"] = INT_FIELD(cql.num_action_samples);
    return fm;
  }();
  return m;
}

#undef REAL_FIELD
#undef INT_FIELD
#undef BOOL_FIELD

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

TrainConfig parse_config_text(const std::string& text) {
  TrainConfig cfg;
  const FieldMap& fm = field_map();
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) +
                          ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!fm.count(section))
        throw ConfigError("unknown config section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw ConfigError("key '" + key + "' outside any section");
    const auto& sec = fm.at(section);
    const auto it = sec.find(key);
    if (it == sec.end())
      throw ConfigError("unknown key '" + key + "' in section [" + section +
                        "]");
    const FieldRef& f = it->second;
    try {
      switch (f.type) {
        case FieldRef::Type::real:
          f.set_real(cfg, std::stod(value));
          break;
        case FieldRef::Type::integer:
          f.set_int(cfg, std::stoll(value));
          break;
        case FieldRef::Type::u64:
          f.set_u64(cfg, std::stoull(value));
          break;
        case FieldRef::Type::boolean:
          if (value == "true")
            f.set_bool(cfg, true);
          else if (value == "false")
            f.set_bool(cfg, false);
          else
            throw ConfigError("boolean key '" + key +
                              "' must be true or false");
          break;
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("invalid value for '" + section + "." + key +
                        "': " + value);
    }
  }
  cfg.sync_derived();
  cfg.validate();
  return cfg;
}

TrainConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const TrainConfig& cfg) {
  std::ostringstream out;
  char buf[64];
  for (const auto& [section, keys] : field_map()) {
    out << '[' << section << "]\n";
    for (const auto& [key, f] : keys) {
      out << key << " = ";
      switch (f.type) {
        case FieldRef::Type::real:
          std::snprintf(buf, sizeof buf, "%.17g", f.get_real(cfg));
          out << buf;
          break;
        case FieldRef::Type::integer:
          out << f.get_int(cfg);
          break;
        case FieldRef::Type::u64:
          out << f.get_u64(cfg);
          break;
        case FieldRef::Type::boolean:
          out << (f.get_bool(cfg) ? "true" : "false");
          break;
      }
      out << '\n';
    }
    out << '\n';
  }
  return out.str();
}

std::uint64_t fnv1a(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_fingerprint(const TrainConfig& cfg) {
  const std::string s = serialize_config(cfg);
  return fnv1a(s.data(), s.size());
}

}  // namespace iout
