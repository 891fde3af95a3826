#include "lanegnn/evaluator.hpp"

#include <algorithm>
#include <cmath>

namespace lanegnn {

const char* to_string(TerminalStatus s) {
  switch (s) {
    case TerminalStatus::running: return "running";
    case TerminalStatus::collision: return "collision";
    case TerminalStatus::goal_reached: return "goal_reached";
    case TerminalStatus::timeout: return "timeout";
  }
  return "?";
}

TerminalStatus terminal_status_from_string(const std::string& s) {
  if (s == "running") return TerminalStatus::running;
  if (s == "collision") return TerminalStatus::collision;
  if (s == "goal_reached") return TerminalStatus::goal_reached;
  if (s == "timeout") return TerminalStatus::timeout;
  throw ParseError("unknown terminal status '" + s + "'");
}

void GoalSpec::validate() const {
  if (!(x_min <= x_max) || !(y_min <= y_max) || !(v_min <= v_max) ||
      !(heading_min <= heading_max)) {
    throw ConfigError("goal: every range must satisfy min <= max");
  }
  if (!std::isfinite(v_des)) throw ConfigError("goal: v_des must be finite");
}

void RewardWeights::validate() const {
  if (w_goal_dist < 0.0 || w_vel < 0.0 || w_act < 0.0) {
    throw ConfigError("reward weights must be >= 0");
  }
}

bool goal_satisfied(const VehicleState& ego, const GoalSpec& goal) {
  return ego.x >= goal.x_min && ego.x <= goal.x_max && ego.y >= goal.y_min &&
         ego.y <= goal.y_max && ego.v >= goal.v_min && ego.v <= goal.v_max &&
         ego.theta >= goal.heading_min && ego.theta <= goal.heading_max;
}

TerminalStatus check_terminal(const WorldState& world, const StepEvents& events,
                              const GoalSpec& goal, int max_steps,
                              const SimConfig& cfg) {
  const int ei = ego_index(world);
  const Vehicle& ego = world.vehicles[ei];
  if (ego_in_collision(events.collisions, ego.id)) {
    return TerminalStatus::collision;
  }
  if (goal_satisfied(ego.state, goal)) {
    return TerminalStatus::goal_reached;
  }
  if (world.step_count >= max_steps || ego.state.x > cfg.road.length) {
    return TerminalStatus::timeout;
  }
  return TerminalStatus::running;
}

double compute_reward(const WorldState& after, const Control& u,
                      TerminalStatus status, const GoalSpec& goal,
                      const RewardWeights& weights, const ControlBounds& bounds) {
  const int ei = ego_index(after);
  const VehicleState& ego = after.vehicles[ei].state;

  double r = 0.0;
  if (status == TerminalStatus::collision) r -= 1.0;
  if (status == TerminalStatus::goal_reached) r += 1.0;

  const double dx = ego.x - goal.center_x(ego.x);
  const double dy = ego.y - goal.center_y();
  r -= weights.w_goal_dist * (dx * dx + dy * dy);

  const double dv = ego.v - goal.v_des;
  r -= weights.w_vel * dv * dv;

  const double accel_scale =
      std::max(std::abs(bounds.accel_min), std::abs(bounds.accel_max));
  const double an = u.accel / accel_scale;
  const double sn = u.steer_rate / bounds.steer_rate_max;
  r -= weights.w_act * (an * an + sn * sn);
  return r;
}

GoalSpec default_goal(const RoadConfig& road, double v_des,
                      double speed_tolerance, double heading_tolerance) {
  GoalSpec goal;
  const int target_lane = road.num_lanes - 1;  // leftmost lane
  const double center = road.lane_center(target_lane);
  goal.x_min = 0.0;
  goal.x_max = road.length;
  goal.y_min = center - road.lane_width * 0.25;
  goal.y_max = center + road.lane_width * 0.25;
  goal.v_des = v_des;
  goal.v_min = v_des - speed_tolerance;
  goal.v_max = v_des + speed_tolerance;
  goal.heading_min = -heading_tolerance;
  goal.heading_max = heading_tolerance;
  return goal;
}

}  // namespace lanegnn
