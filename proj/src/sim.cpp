#include "lanegnn/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lanegnn {

Control clamp_control(const Control& u, const ControlBounds& bounds) {
  require_finite(u.accel, "Control::accel");
  require_finite(u.steer_rate, "Control::steer_rate");
  Control c;
  c.accel = std::clamp(u.accel, bounds.accel_min, bounds.accel_max);
  c.steer_rate =
      std::clamp(u.steer_rate, -bounds.steer_rate_max, bounds.steer_rate_max);
  return c;
}

int ego_index(const WorldState& world) {
  int found = -1;
  for (std::size_t i = 0; i < world.vehicles.size(); ++i) {
    if (world.vehicles[i].tag == ControllerTag::ego) {
      if (found >= 0) throw std::logic_error("world has more than one ego");
      found = static_cast<int>(i);
    }
  }
  if (found < 0) throw std::logic_error("world has no ego vehicle");
  return found;
}

bool ego_in_collision(const CollisionReport& report, int ego_id) {
  if (report.ego_off_road) return true;
  for (const auto& [a, b] : report.pairs) {
    if (a == ego_id || b == ego_id) return true;
  }
  return false;
}

VehicleState step_single_track(const VehicleState& s, const Control& u,
                               const RoadConfig& road, const VehicleGeom& geom) {
  require_finite(s.x, "VehicleState::x");
  require_finite(s.y, "VehicleState::y");
  require_finite(s.theta, "VehicleState::theta");
  require_finite(s.v, "VehicleState::v");
  require_finite(s.delta, "VehicleState::delta");
  require_finite(u.accel, "Control::accel");
  require_finite(u.steer_rate, "Control::steer_rate");
  const double dt = road.dt;
  VehicleState n = s;
  n.x = s.x + s.v * std::cos(s.theta) * dt;
  n.y = s.y + s.v * std::sin(s.theta) * dt;
  n.theta = wrap_angle(s.theta + s.v / road.wheelbase * std::tan(s.delta) * dt);
  n.v = std::max(0.0, s.v + u.accel * dt);
  n.delta = std::clamp(s.delta + u.steer_rate * dt, -geom.delta_max, geom.delta_max);
  return n;
}

double idm_accel(double v, double v_lead, double gap, const IdmParams& p) {
  double interaction = 0.0;
  if (std::isinf(gap) && gap > 0.0) {
    interaction = 0.0;  // free road
  } else {
    if (!(gap > 0.0)) {
      throw std::domain_error("idm_accel: gap must be positive (or +inf for free road)");
    }
    const double desired =
        p.s0 + std::max(0.0, v * p.T + v * (v - v_lead) / (2.0 * std::sqrt(p.a * p.b)));
    interaction = (desired / gap) * (desired / gap);
  }
  const double ratio = v / p.v0;
  const double acc = p.a * (1.0 - ratio * ratio * ratio * ratio - interaction);
  return std::clamp(acc, -p.emergency_decel, p.a);
}

Control idm_to_control(const WorldState& world, int vehicle_index,
                       const SimConfig& cfg) {
  const Vehicle& self = world.vehicles.at(vehicle_index);
  const int my_lane = self.state.lane_id;

  // Nearest vehicle ahead whose footprint lane matches this vehicle's
  // assigned lane (an ego mid lane change starts to count once its center
  // enters the lane band).
  double best_dx = std::numeric_limits<double>::infinity();
  double lead_v = 0.0;
  for (std::size_t j = 0; j < world.vehicles.size(); ++j) {
    if (static_cast<int>(j) == vehicle_index) continue;
    const Vehicle& other = world.vehicles[j];
    if (cfg.road.lane_of(other.state.y) != my_lane) continue;
    const double dx = other.state.x - self.state.x;
    if (dx > 0.0 && dx < best_dx) {
      best_dx = dx;
      lead_v = other.state.v;
    }
  }

  Control u;
  if (std::isinf(best_dx)) {
    u.accel = idm_accel(self.state.v, 0.0,
                        std::numeric_limits<double>::infinity(), self.idm);
  } else {
    // Bumper-to-bumper gap; overlapping spawns degenerate to a tiny gap,
    // which saturates at the emergency deceleration.
    double gap = best_dx - cfg.geom.length;
    if (gap < 0.1) gap = 0.1;
    u.accel = idm_accel(self.state.v, lead_v, gap, self.idm);
  }

  const double y_err = self.state.y - cfg.road.lane_center(my_lane);
  const double theta_err = self.state.theta;
  u.steer_rate = -cfg.lateral.k_y * y_err - cfg.lateral.k_theta * theta_err;
  return clamp_control(u, cfg.bounds);
}

WorldState generate_scenario(std::uint64_t seed, const ScenarioConfig& scn,
                             const SimConfig& cfg) {
  if (scn.min_vehicles < 1 || scn.max_vehicles < scn.min_vehicles) {
    throw ConfigError("scenario: vehicle count range must satisfy 1 <= min <= max");
  }
  if (!(scn.speed_min <= scn.speed_max) || scn.speed_min < 0.0) {
    throw ConfigError("scenario: speed range must satisfy 0 <= min <= max");
  }
  if (scn.min_gap < 0.0) throw ConfigError("scenario: min_gap must be >= 0");
  if (!(scn.ego_x_min <= scn.ego_x_max)) {
    throw ConfigError("scenario: ego x range must satisfy min <= max");
  }

  Rng rng(seed);
  const int count =
      scn.min_vehicles +
      static_cast<int>(rng.uniform_int(
          static_cast<std::uint64_t>(scn.max_vehicles - scn.min_vehicles + 1)));

  WorldState world;
  world.scenario_seed = seed;

  Vehicle ego;
  ego.id = 0;
  ego.tag = ControllerTag::ego;
  ego.idm = cfg.idm;
  ego.state.lane_id = 0;
  ego.state.x = rng.uniform(scn.ego_x_min, scn.ego_x_max);
  ego.state.y = cfg.road.lane_center(0);
  ego.state.v = rng.uniform(scn.speed_min, scn.speed_max);
  world.vehicles.push_back(ego);

  for (int i = 1; i < count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < scn.max_place_attempts && !placed; ++attempt) {
      const int lane = static_cast<int>(
          rng.uniform_int(static_cast<std::uint64_t>(cfg.road.num_lanes)));
      const double x = rng.uniform(0.0, cfg.road.length);
      bool ok = true;
      for (const Vehicle& other : world.vehicles) {
        if (std::abs(x - other.state.x) < scn.min_gap) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      Vehicle veh;
      veh.id = i;
      veh.tag = ControllerTag::idm;
      veh.idm = cfg.idm;
      veh.state.lane_id = lane;
      veh.state.x = x;
      veh.state.y = cfg.road.lane_center(lane);
      veh.state.v = rng.uniform(scn.speed_min, scn.speed_max);
      world.vehicles.push_back(veh);
      placed = true;
    }
    if (!placed) {
      throw ScenarioError("generate_scenario: could not place vehicle " +
                          std::to_string(i) + " of " + std::to_string(count) +
                          " within " + std::to_string(scn.max_place_attempts) +
                          " attempts (min_gap too large for the road?)");
    }
  }
  return world;
}

namespace {

struct Obb {
  double cx, cy;  // center
  double ux, uy;  // heading unit vector
  double hl, hw;  // half length, half width
};

Obb vehicle_obb(const VehicleState& s, const VehicleGeom& geom) {
  return Obb{s.x, s.y, std::cos(s.theta), std::sin(s.theta),
             geom.length * 0.5, geom.width * 0.5};
}

// Radius of the box projected onto unit axis (ax, ay).
double projected_extent(const Obb& o, double ax, double ay) {
  const double along = std::abs(ax * o.ux + ay * o.uy);
  const double across = std::abs(-ax * o.uy + ay * o.ux);
  return o.hl * along + o.hw * across;
}

bool separated_on(const Obb& a, const Obb& b, double ax, double ay) {
  const double dist = std::abs((b.cx - a.cx) * ax + (b.cy - a.cy) * ay);
  return dist >= projected_extent(a, ax, ay) + projected_extent(b, ax, ay);
}

// Two oriented rectangles overlap iff no face normal of either separates
// them. Exact touching counts as separated.
bool obb_overlap(const Obb& a, const Obb& b) {
  if (separated_on(a, b, a.ux, a.uy)) return false;
  if (separated_on(a, b, -a.uy, a.ux)) return false;
  if (separated_on(a, b, b.ux, b.uy)) return false;
  if (separated_on(a, b, -b.uy, b.ux)) return false;
  return true;
}

}  // namespace

CollisionReport check_collision(const WorldState& world, const SimConfig& cfg) {
  CollisionReport report;
  std::vector<Obb> boxes;
  boxes.reserve(world.vehicles.size());
  for (const Vehicle& v : world.vehicles) {
    boxes.push_back(vehicle_obb(v.state, cfg.geom));
  }
  for (std::size_t i = 0; i < world.vehicles.size(); ++i) {
    for (std::size_t j = i + 1; j < world.vehicles.size(); ++j) {
      if (obb_overlap(boxes[i], boxes[j])) {
        int a = world.vehicles[i].id;
        int b = world.vehicles[j].id;
        report.pairs.emplace_back(std::min(a, b), std::max(a, b));
      }
    }
  }

  const int ei = ego_index(world);
  const Obb& ego = boxes[ei];
  // Lateral offsets of the four footprint corners from the center.
  const double py = ego.uy * ego.hl;
  const double qy = ego.ux * ego.hw;
  const double corner_y[4] = {ego.cy + py + qy, ego.cy + py - qy,
                              ego.cy - py + qy, ego.cy - py - qy};
  for (double y : corner_y) {
    if (y < 0.0 || y > cfg.road.width()) {
      report.ego_off_road = true;
      break;
    }
  }
  return report;
}

StepResult step_world(const WorldState& world, const Control& ego_control,
                      const SimConfig& cfg) {
  if (world.terminal) {
    throw std::logic_error("step_world: world is already terminal");
  }
  const int ei = ego_index(world);

  // Controls for every vehicle from the pre-step world (synchronous update).
  std::vector<Control> controls(world.vehicles.size());
  for (std::size_t i = 0; i < world.vehicles.size(); ++i) {
    if (static_cast<int>(i) == ei) {
      controls[i] = clamp_control(ego_control, cfg.bounds);
    } else {
      controls[i] = idm_to_control(world, static_cast<int>(i), cfg);
    }
  }

  StepResult result;
  result.world = world;
  for (std::size_t i = 0; i < world.vehicles.size(); ++i) {
    result.world.vehicles[i].state =
        step_single_track(world.vehicles[i].state, controls[i], cfg.road, cfg.geom);
  }

  // Scripted traffic leaves the world at the end of the corridor. The ego is
  // never removed; the evaluator ends the episode instead.
  auto& vehicles = result.world.vehicles;
  for (auto it = vehicles.begin(); it != vehicles.end();) {
    if (it->tag != ControllerTag::ego && it->state.x > cfg.road.length) {
      result.events.removed_ids.push_back(it->id);
      it = vehicles.erase(it);
    } else {
      ++it;
    }
  }

  result.world.t = world.t + cfg.road.dt;
  result.world.step_count = world.step_count + 1;
  result.events.collisions = check_collision(result.world, cfg);
  return result;
}

std::uint64_t world_hash(const WorldState& world) {
  std::ostringstream out;
  char buf[64];
  out << world.step_count << ";";
  std::snprintf(buf, sizeof(buf), "%.12g", world.t);
  out << buf << ";";
  for (const Vehicle& v : world.vehicles) {
    out << v.id << "," << v.state.lane_id << ","
        << (v.tag == ControllerTag::ego ? "E" : "I");
    const double fields[5] = {v.state.x, v.state.y, v.state.theta, v.state.v,
                              v.state.delta};
    for (double f : fields) {
      std::snprintf(buf, sizeof(buf), ",%.12g", f);
      out << buf;
    }
    out << ";";
  }
  const std::string s = out.str();
  return fnv1a64(s.data(), s.size());
}

}  // namespace lanegnn
