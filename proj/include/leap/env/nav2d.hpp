#pragma once

#include <Eigen/Dense>
#include <vector>

#include "leap/nn/network.hpp"

namespace leap::env {

using Rng = nn::Rng;

struct WallRect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool contains(const Eigen::Vector2d& p) const;
  double distance_to(const Eigen::Vector2d& p) const;
};

struct Box {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool contains(const Eigen::Vector2d& p) const;
};

// Square room with a U-shaped wall. The U's legs rise from the ends of a
// horizontal wall; the start pocket sits between the legs above it and the
// evaluation goal band lies below it, so reaching a goal requires leaving
// the pocket through its opening, away from the goal, and coming around.
struct EnvConfig {
  double room_side = 8.0;
  double wall_thickness = 1.0;
  double agent_radius = 0.5;
  double max_step = 0.15;
  int horizon = 100;  // T_max

  std::vector<WallRect> walls;  // left leg, right leg, horizontal wall
  Box center_box;               // start region inside the pocket
  Box goal_band;                // evaluation goals, directly below the U
  double wall_bottom_y = 0.0;   // lower face of the horizontal wall (success line)

  static EnvConfig nav2d_default();
};

struct NavState {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
};

struct Action {
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
};

enum class ResetRegion { UniformValid, CenterBox };
enum class GoalRegion { UniformValid, BelowWall };

// True iff the agent disc lies inside the room and overlaps no wall.
bool valid_state(const Eigen::Vector2d& position, const EnvConfig& config);

// Deterministic transition. The action is clipped per axis to max_step, then
// applied axis by axis (x first), each axis clipped to the largest motion
// that keeps the disc out of the walls.
NavState step(const NavState& state, const Action& action, const EnvConfig& config);

double distance(const NavState& a, const NavState& b);

// Success per the evaluation protocol: ends below the horizontal wall and
// within a diameter (2 * agent_radius) of the goal.
bool success(const NavState& final_state, const NavState& goal, const EnvConfig& config);

NavState reset(Rng& rng, ResetRegion region, const EnvConfig& config);
NavState sample_goal(Rng& rng, GoalRegion region, const EnvConfig& config);
std::vector<NavState> sample_valid_states(Rng& rng, int n, const EnvConfig& config);

}  // namespace leap::env
