#pragma once

// Per-step reward and episode termination.
//
// Reward is a sum of sparse terminal terms (-1 collision, +1 goal) and three
// always-on shaped penalties: squared distance to the goal-region center,
// squared deviation from the desired speed, and the squared bound-normalized
// control effort. The goal-region center follows the ego longitudinally
// (ego x clamped into the goal x window), so inside the window the distance
// term is purely lateral — the distance to the target lane's center line.
//
// Termination precedence: collision > goal > timeout. Timeout covers both
// the step budget and the ego leaving the end of the driving corridor.

#include "lanegnn/sim.hpp"

namespace lanegnn {

enum class TerminalStatus { running, collision, goal_reached, timeout };

const char* to_string(TerminalStatus s);
TerminalStatus terminal_status_from_string(const std::string& s);

// Closed target windows on ego state; reached means all four hold at once.
struct GoalSpec {
  double x_min = 0.0, x_max = 0.0;
  double y_min = 0.0, y_max = 0.0;
  double v_min = 0.0, v_max = 0.0;
  double heading_min = -0.1, heading_max = 0.1;
  double v_des = 12.5;

  double center_x(double ego_x) const {
    return std::clamp(ego_x, x_min, x_max);
  }
  double center_y() const { return 0.5 * (y_min + y_max); }
  void validate() const;
};

struct RewardWeights {
  double w_goal_dist = 0.001;
  double w_vel = 0.01;
  double w_act = 0.05;
  void validate() const;
};

bool goal_satisfied(const VehicleState& ego, const GoalSpec& goal);

// Status after a step, judged on the post-step world and its events.
TerminalStatus check_terminal(const WorldState& world, const StepEvents& events,
                              const GoalSpec& goal, int max_steps,
                              const SimConfig& cfg);

// Reward for the step that produced `after` under control `u`, given the
// step's terminal status. Pure in its inputs.
double compute_reward(const WorldState& after, const Control& u,
                      TerminalStatus status, const GoalSpec& goal,
                      const RewardWeights& weights, const ControlBounds& bounds);

// Default goal for a road: left-lane center band (quarter lane width each
// side), full corridor length, desired speed +/- tolerance, level heading.
GoalSpec default_goal(const RoadConfig& road, double v_des,
                      double speed_tolerance, double heading_tolerance);

}  // namespace lanegnn
