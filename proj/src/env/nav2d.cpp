#include "leap/env/nav2d.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace leap::env {

namespace {
// contact backoff so that a clipped move never lands inside a wall by rounding
constexpr double kContactEps = 1e-9;
constexpr int kMaxRejectionDraws = 10000;
}  // namespace

bool WallRect::contains(const Eigen::Vector2d& p) const {
  return p.x() >= x0 && p.x() <= x1 && p.y() >= y0 && p.y() <= y1;
}

double WallRect::distance_to(const Eigen::Vector2d& p) const {
  const double dx = std::max({x0 - p.x(), p.x() - x1, 0.0});
  const double dy = std::max({y0 - p.y(), p.y() - y1, 0.0});
  return std::hypot(dx, dy);
}

bool Box::contains(const Eigen::Vector2d& p) const {
  return p.x() >= x0 && p.x() <= x1 && p.y() >= y0 && p.y() <= y1;
}

EnvConfig EnvConfig::nav2d_default() {
  EnvConfig c;
  c.room_side = 8.0;
  c.wall_thickness = 1.0;
  c.agent_radius = 0.5;
  c.max_step = 0.15;
  c.horizon = 100;
  // Legs span y in [2, 6]; the horizontal wall joins their lower ends.
  c.walls = {
      {2.0, 2.0, 3.0, 6.0},  // left leg
      {5.0, 2.0, 6.0, 6.0},  // right leg
      {3.0, 2.0, 5.0, 3.0},  // horizontal wall between the legs
  };
  c.wall_bottom_y = 2.0;
  c.center_box = {3.6, 3.6, 4.4, 4.4};
  c.goal_band = {2.0, 0.5, 6.0, 1.5};
  return c;
}

bool valid_state(const Eigen::Vector2d& p, const EnvConfig& config) {
  const double r = config.agent_radius;
  if (p.x() < r || p.x() > config.room_side - r || p.y() < r || p.y() > config.room_side - r)
    return false;
  for (const auto& wall : config.walls)
    if (wall.distance_to(p) < r) return false;
  return true;
}

namespace {

// Open interval of center positions along `axis` blocked by `wall` when the
// orthogonal coordinate is `ortho`: the cross-section of the wall inflated by
// the agent radius (a rounded rectangle).
bool blocked_interval(const WallRect& wall, int axis, double ortho, double radius,
                      double& lo, double& hi) {
  const double o0 = (axis == 0) ? wall.y0 : wall.x0;
  const double o1 = (axis == 0) ? wall.y1 : wall.x1;
  const double d = std::max({o0 - ortho, ortho - o1, 0.0});
  if (d >= radius) return false;
  const double w = std::sqrt(radius * radius - d * d);
  lo = ((axis == 0) ? wall.x0 : wall.y0) - w;
  hi = ((axis == 0) ? wall.x1 : wall.y1) + w;
  return true;
}

double move_axis(const Eigen::Vector2d& p, int axis, double delta, const EnvConfig& config) {
  const double r = config.agent_radius;
  const double cur = p[axis];
  const double ortho = p[1 - axis];
  double target = cur + delta;
  if (delta > 0) {
    double limit = config.room_side - r;
    for (const auto& wall : config.walls) {
      double lo, hi;
      if (blocked_interval(wall, axis, ortho, r, lo, hi) && lo >= cur)
        limit = std::min(limit, lo - kContactEps);
    }
    return std::max(cur, std::min(target, limit));
  }
  if (delta < 0) {
    double limit = r;
    for (const auto& wall : config.walls) {
      double lo, hi;
      if (blocked_interval(wall, axis, ortho, r, lo, hi) && hi <= cur)
        limit = std::max(limit, hi + kContactEps);
    }
    return std::min(cur, std::max(target, limit));
  }
  return cur;
}

}  // namespace

NavState step(const NavState& state, const Action& action, const EnvConfig& config) {
  Eigen::Vector2d v = action.velocity;
  v.x() = std::clamp(v.x(), -config.max_step, config.max_step);
  v.y() = std::clamp(v.y(), -config.max_step, config.max_step);

  Eigen::Vector2d p = state.position;
  p.x() = move_axis(p, 0, v.x(), config);
  p.y() = move_axis(p, 1, v.y(), config);
  return NavState{p};
}

double distance(const NavState& a, const NavState& b) {
  return (a.position - b.position).norm();
}

bool success(const NavState& final_state, const NavState& goal, const EnvConfig& config) {
  return final_state.position.y() < config.wall_bottom_y &&
         distance(final_state, goal) <= 2.0 * config.agent_radius;
}

namespace {

NavState sample_box(Rng& rng, const Box& box) {
  std::uniform_real_distribution<double> ux(box.x0, box.x1);
  std::uniform_real_distribution<double> uy(box.y0, box.y1);
  const double x = ux(rng);
  const double y = uy(rng);
  return NavState{{x, y}};
}

NavState sample_uniform_valid(Rng& rng, const EnvConfig& config) {
  const double r = config.agent_radius;
  std::uniform_real_distribution<double> u(r, config.room_side - r);
  for (int i = 0; i < kMaxRejectionDraws; ++i) {
    const double x = u(rng);
    const double y = u(rng);
    if (valid_state({x, y}, config)) return NavState{{x, y}};
  }
  throw std::runtime_error("rejection sampling exhausted; environment geometry leaves no room");
}

}  // namespace

NavState reset(Rng& rng, ResetRegion region, const EnvConfig& config) {
  switch (region) {
    case ResetRegion::UniformValid: return sample_uniform_valid(rng, config);
    case ResetRegion::CenterBox: {
      NavState s = sample_box(rng, config.center_box);
      if (!valid_state(s.position, config))
        throw std::runtime_error("center box overlaps a wall; geometry misconfigured");
      return s;
    }
  }
  throw std::logic_error("unknown reset region");
}

NavState sample_goal(Rng& rng, GoalRegion region, const EnvConfig& config) {
  switch (region) {
    case GoalRegion::UniformValid: return sample_uniform_valid(rng, config);
    case GoalRegion::BelowWall: {
      NavState g = sample_box(rng, config.goal_band);
      if (!valid_state(g.position, config))
        throw std::runtime_error("goal band overlaps a wall; geometry misconfigured");
      return g;
    }
  }
  throw std::logic_error("unknown goal region");
}

std::vector<NavState> sample_valid_states(Rng& rng, int n, const EnvConfig& config) {
  if (n < 1) throw std::invalid_argument("sample_valid_states: n must be >= 1");
  std::vector<NavState> states;
  states.reserve(n);
  for (int i = 0; i < n; ++i) states.push_back(sample_uniform_valid(rng, config));
  return states;
}

}  // namespace leap::env
