#include "iout/ocean_env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace iout {

Vec2 flow_velocity(std::span<const Vortex> vortices, Vec2 p) {
  Vec2 v;
  for (const Vortex& vx : vortices) {
    const Vec2 d = p - vx.center;
    const double r2 = d.norm_sq();
    if (r2 == 0.0) continue;  // removable singularity at the core
    const double delta2 = vx.radius_delta * vx.radius_delta;
    const double coef = vx.intensity_gamma / (2.0 * M_PI * r2) *
                        (1.0 - std::exp(-r2 / delta2));
    v.x += -coef * d.y;
    v.y += coef * d.x;
  }
  return v;
}

double vorticity(const Vortex& v, Vec2 p) {
  const double r2 = (p - v.center).norm_sq();
  const double delta2 = v.radius_delta * v.radius_delta;
  return v.intensity_gamma / (M_PI * delta2) * std::exp(-r2 / delta2);
}

Vec2 relative_velocity(Vec2 v_cmd, Vec2 p, std::span<const Vortex> vortices) {
  return v_cmd - flow_velocity(vortices, p);
}

AuvState step_kinematics(const AuvState& auv, ControlInput action, double dt,
                         std::span<const Vortex> vortices,
                         const WorldConfig& cfg, bool* clamped) {
  bool was_clamped = false;
  auto clamp_flag = [&](double v, double lim) {
    if (v > lim || v < -lim) {
      was_clamped = true;
      return std::clamp(v, -lim, lim);
    }
    return v;
  };
  const double accel = clamp_flag(action.accel, cfg.accel_max);
  const double ang_vel = clamp_flag(action.ang_vel, cfg.ang_vel_max);

  AuvState next = auv;
  next.heading = wrap_angle(auv.heading + ang_vel * dt);
  next.speed_cmd = std::clamp(auv.speed_cmd + accel * dt, 0.0, cfg.v_max);

  const Vec2 cmd{next.speed_cmd * std::cos(next.heading),
                 next.speed_cmd * std::sin(next.heading)};
  const Vec2 ground = relative_velocity(cmd, auv.position, vortices);
  next.position = auv.position + ground * dt;
  next.position.x = std::clamp(next.position.x, 0.0, cfg.field_size);
  next.position.y = std::clamp(next.position.y, 0.0, cfg.field_size);

  if (clamped) *clamped = was_clamped;
  return next;
}

std::vector<std::pair<int, int>> detect_collisions(
    std::span<const AuvState> auvs, double d_s) {
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i < auvs.size(); ++i)
    for (std::size_t j = i + 1; j < auvs.size(); ++j)
      if (distance(auvs[i].position, auvs[j].position) < d_s)
        pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
  return pairs;
}

namespace {

double nearest_auv_distance(const WorldState& world, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  for (const AuvState& a : world.auvs)
    best = std::min(best, distance(a.position, p));
  return best;
}

}  // namespace

void step_nodes(WorldState& world, const WorldConfig& cfg,
                const AcousticConfig& acfg) {
  for (std::size_t i = 0; i < world.nodes.size(); ++i) {
    NodeState& node = world.nodes[i];

    // Link capacity over the slant range to the relevant AUV: the occupying
    // AUV while claimed, otherwise the nearest one.
    double horiz;
    if (node.occupied_by)
      horiz = distance(world.auvs[*node.occupied_by].position, node.position);
    else
      horiz = nearest_auv_distance(world, node.position);
    node.channel_capacity =
        world.auvs.empty()
            ? 0.0
            : channel_capacity(cfg.slant_range(horiz), acfg);

    if (!node.needs_collection) continue;

    const bool draining =
        node.occupied_by && world.auvs[*node.occupied_by].hovering &&
        distance(world.auvs[*node.occupied_by].position, node.position) <=
            cfg.comm_distance;

    if (draining) {
      const int j = *node.occupied_by;
      if (!node.collection_start_time) {
        node.collection_start_time = world.time;
        world.step_events[j].hover_start_capacity.push_back(
            node.channel_capacity);
      }
      const double drained =
          std::min(node.stored_data, node.channel_capacity * cfg.dt);
      node.stored_data -= drained;
      world.step_events[j].bits_collected += drained;
      if (node.stored_data <= 0.0) {
        node.stored_data = 0.0;
        node.needs_collection = false;
        node.occupied_by.reset();
        world.step_events[j].completed_nodes.push_back(static_cast<int>(i));
        world.auvs[j].target_node.reset();
        world.auvs[j].hovering = false;
      }
    } else {
      node.stored_data = std::min(
          node.stored_data + cfg.arrival_rate_bps * cfg.dt, cfg.c_max_bits);
    }
  }
}

void step_world(WorldState& world, std::span<const ControlInput> controls,
                const WorldConfig& cfg, const AcousticConfig& acfg,
                const EnergyConfig& ecfg) {
  const std::size_t n = world.auvs.size();
  world.step_events.assign(n, StepEvents{});
  world.crash_pairs.clear();

  for (std::size_t j = 0; j < n; ++j) {
    AuvState& auv = world.auvs[j];

    // Hover when the claimed target is within communication distance;
    // idle-hold likewise when no target is available.
    bool hover = !auv.target_node.has_value();
    if (auv.target_node) {
      const NodeState& tgt = world.nodes[*auv.target_node];
      hover = distance(auv.position, tgt.position) <= cfg.comm_distance;
    }

    if (hover) {
      auv.hovering = true;
      auv.speed_cmd = 0.0;
      // Zero commanded velocity: the vehicle still drifts with the flow.
      const Vec2 ground =
          relative_velocity(Vec2{}, auv.position, world.vortices);
      auv.position += ground * cfg.dt;
      auv.position.x = std::clamp(auv.position.x, 0.0, cfg.field_size);
      auv.position.y = std::clamp(auv.position.y, 0.0, cfg.field_size);
    } else {
      auv.hovering = false;
      bool clamped = false;
      auv = step_kinematics(auv, controls[j], cfg.dt, world.vortices, cfg,
                            &clamped);
      world.step_events[j].action_clamped = clamped;
    }

    const double e = step_energy(auv.speed_cmd, auv.hovering, ecfg);
    auv.energy_spent += e;
    world.step_events[j].energy_j = e;
  }

  world.time += cfg.dt;
  step_nodes(world, cfg, acfg);
  world.crash_pairs = detect_collisions(world.auvs, cfg.crash_distance);
}

WorldState make_world(const WorldConfig& cfg, const AcousticConfig& acfg,
                      std::uint64_t seed) {
  WorldState w;
  w.rng.seed(seed);
  w.time = 0.0;

  w.nodes.resize(cfg.num_devices);
  for (NodeState& n : w.nodes) {
    n.position = {w.rng.uniform(0.0, cfg.field_size),
                  w.rng.uniform(0.0, cfg.field_size)};
    n.initial_voi = cfg.initial_voi;
  }
  // Needing subset: seeded shuffle, first round(fraction * count) entries.
  std::vector<int> order(w.nodes.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[w.rng.uniform_int(i)]);
  const int needing = static_cast<int>(
      std::llround(cfg.needing_fraction * cfg.num_devices));
  for (int k = 0; k < cfg.num_devices; ++k) {
    NodeState& n = w.nodes[order[k]];
    if (k < needing) {
      n.needs_collection = true;
      n.stored_data = cfg.c_max_bits * w.rng.uniform(0.5, 1.0);
    } else {
      n.needs_collection = false;
      n.stored_data = cfg.c_max_bits * w.rng.uniform(0.0, 0.2);
    }
  }

  w.auvs.resize(cfg.num_auvs);
  for (AuvState& a : w.auvs) {
    a.position = {w.rng.uniform(0.0, cfg.field_size),
                  w.rng.uniform(0.0, cfg.field_size)};
    a.heading = wrap_angle(w.rng.uniform(-M_PI, M_PI));
  }

  if (cfg.turbulence) {
    w.vortices.resize(cfg.num_vortices);
    for (int k = 0; k < cfg.num_vortices; ++k) {
      Vortex& v = w.vortices[k];
      v.center = {w.rng.uniform(0.2, 0.8) * cfg.field_size,
                  w.rng.uniform(0.2, 0.8) * cfg.field_size};
      v.radius_delta = cfg.vortex_delta;
      v.intensity_gamma = (k % 2 == 0) ? cfg.vortex_gamma : -cfg.vortex_gamma;
    }
  }

  w.step_events.assign(w.auvs.size(), StepEvents{});
  for (NodeState& n : w.nodes) {
    const double horiz = nearest_auv_distance(w, n.position);
    n.channel_capacity = channel_capacity(cfg.slant_range(horiz), acfg);
  }
  return w;
}

bool all_drained(const WorldState& world) {
  return std::none_of(world.nodes.begin(), world.nodes.end(),
                      [](const NodeState& n) { return n.needs_collection; });
}

}  // namespace iout
