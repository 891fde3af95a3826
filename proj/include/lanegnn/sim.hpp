#pragma once

// Deterministic highway simulator: kinematic single-track vehicles stepped
// with explicit Euler at a fixed dt, scripted traffic driven by a car
// following model with proportional lane keeping, oriented-rectangle
// collision checks, and seeded scenario sampling.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lanegnn/rng.hpp"
#include "lanegnn/util.hpp"

namespace lanegnn {

struct RoadConfig {
  double lane_width = 3.5;  // m
  int num_lanes = 2;
  double length = 200.0;  // m, driving corridor ends here
  double wheelbase = 2.7;  // m
  double dt = 0.2;  // s

  double width() const { return lane_width * num_lanes; }
  // Lane i is centered at (i + 1/2) * lane_width; lane 0 is the right lane.
  double lane_center(int lane) const { return (lane + 0.5) * lane_width; }
  // Lane whose band contains y, clamped to valid lanes.
  int lane_of(double y) const {
    int lane = static_cast<int>(std::floor(y / lane_width));
    if (lane < 0) lane = 0;
    if (lane >= num_lanes) lane = num_lanes - 1;
    return lane;
  }
};

struct VehicleGeom {
  double length = 4.8;  // m, footprint
  double width = 1.8;   // m
  double delta_max = 0.2;  // rad, steering angle limit
};

struct ControlBounds {
  double accel_min = -5.0;      // m/s^2
  double accel_max = 4.0;       // m/s^2
  double steer_rate_max = 0.2;  // rad/s, symmetric
};

// Ego command: longitudinal acceleration and steering-angle rate.
struct Control {
  double accel = 0.0;
  double steer_rate = 0.0;
};

Control clamp_control(const Control& u, const ControlBounds& bounds);

// Car-following parameters (desired speed, time headway, jam distance,
// comfortable accel/decel, emergency decel cap).
struct IdmParams {
  double v0 = 13.9;  // m/s
  double T = 1.5;    // s
  double s0 = 2.0;   // m
  double a = 1.4;    // m/s^2
  double b = 2.0;    // m/s^2
  double emergency_decel = 8.0;  // m/s^2, magnitude
};

struct LateralGains {
  double k_y = 0.1;      // rad/s per m of lateral error
  double k_theta = 1.0;  // rad/s per rad of heading error
};

struct VehicleState {
  double x = 0.0;      // m, longitudinal position of the center
  double y = 0.0;      // m, lateral position of the center
  double theta = 0.0;  // rad, heading, 0 = along the road, in (-pi, pi]
  double v = 0.0;      // m/s, forward speed, >= 0
  double delta = 0.0;  // rad, steering angle
  int lane_id = 0;     // assigned lane (traffic keeps it for life)
};

enum class ControllerTag { ego, idm };

struct Vehicle {
  int id = 0;  // unique, stable for the vehicle's lifetime
  VehicleState state;
  ControllerTag tag = ControllerTag::idm;
  IdmParams idm;  // per-vehicle so heterogeneous traffic is constructible
};

struct SimConfig {
  RoadConfig road;
  VehicleGeom geom;
  ControlBounds bounds;
  IdmParams idm;
  LateralGains lateral;
};

struct WorldState {
  std::vector<Vehicle> vehicles;  // exactly one tagged ego
  double t = 0.0;
  int step_count = 0;
  bool terminal = false;  // latched by the episode runner once an episode ends
  std::uint64_t scenario_seed = 0;
};

struct CollisionReport {
  std::vector<std::pair<int, int>> pairs;  // colliding vehicle ids, id-ordered
  bool ego_off_road = false;  // ego footprint crossed an outer road boundary
};

struct StepEvents {
  CollisionReport collisions;
  std::vector<int> removed_ids;  // traffic removed past the corridor end
};

struct StepResult {
  WorldState world;
  StepEvents events;
};

struct ScenarioConfig {
  int min_vehicles = 4;   // total including ego
  int max_vehicles = 12;  // total including ego
  double min_gap = 10.0;  // minimum pairwise |dx| at spawn, across all lanes
  double speed_min = 10.0;  // m/s
  double speed_max = 15.0;  // m/s
  double ego_x_min = 5.0;
  double ego_x_max = 30.0;
  int max_place_attempts = 1000;  // per vehicle, before giving up
};

int ego_index(const WorldState& world);  // throws if not exactly locatable
bool ego_in_collision(const CollisionReport& report, int ego_id);

// Explicit Euler update of one kinematic single-track vehicle. Position and
// heading integrate with the pre-update speed/steering; speed is clamped
// non-negative, steering angle to +/- delta_max, heading wrapped to (-pi, pi].
VehicleState step_single_track(const VehicleState& s, const Control& u,
                               const RoadConfig& road, const VehicleGeom& geom);

// Car-following acceleration. gap is the bumper-to-bumper distance and must
// be positive; +infinity means free road. Result is clamped to
// [-emergency_decel, a].
double idm_accel(double v, double v_lead, double gap, const IdmParams& p);

// Full control for a scripted vehicle: car-following accel against the
// nearest leader occupying its lane, proportional steering toward its
// assigned lane center, both clamped to the control bounds.
Control idm_to_control(const WorldState& world, int vehicle_index,
                       const SimConfig& cfg);

// Seeded scenario sampling: ego on the right lane, traffic uniform over
// lanes/positions/speeds, rejection-sampled so every vehicle pair is at
// least min_gap apart longitudinally. Throws ScenarioError when a vehicle
// cannot be placed within max_place_attempts.
WorldState generate_scenario(std::uint64_t seed, const ScenarioConfig& scn,
                             const SimConfig& cfg);

// Separating-axis overlap test over all vehicle pairs plus the ego-vs-road
// boundary check. Exact touching does not count as overlap.
CollisionReport check_collision(const WorldState& world, const SimConfig& cfg);

// Advances every vehicle one dt (controls computed from the pre-step world),
// removes traffic past the corridor end, then reports collisions on the new
// state. Stepping a world already latched terminal is a usage error.
StepResult step_world(const WorldState& world, const Control& ego_control,
                      const SimConfig& cfg);

// Hash of the world's canonical text rendering (12 significant digits), for
// golden regression tests.
std::uint64_t world_hash(const WorldState& world);

}  // namespace lanegnn
