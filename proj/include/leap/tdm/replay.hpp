#pragma once

#include <deque>
#include <utility>
#include <vector>

#include "leap/env/nav2d.hpp"

namespace leap::tdm {

using Rng = nn::Rng;

// One environment step; remaining_horizon counts the steps left after this
// action (0 on the terminal step of a goal-reaching attempt).
struct Transition {
  env::NavState state;
  env::Action action;
  env::NavState next_state;
  env::NavState goal;
  int remaining_horizon = 0;
};

struct Trajectory {
  std::vector<Transition> steps;
};

// Ring of full trajectories; capacity counts transitions. Trajectory
// boundaries are retained so future-state relabeling can stay within one
// trajectory.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 1'000'000) : capacity_(capacity) {}

  void add_trajectory(Trajectory traj);

  std::size_t size() const { return total_steps_; }
  std::size_t num_trajectories() const { return trajectories_.size(); }
  std::size_t capacity() const { return capacity_; }

  const Trajectory& trajectory(std::size_t i) const { return trajectories_[i]; }

  // Uniform over all stored transitions; returns (trajectory, step) indices.
  std::pair<std::size_t, std::size_t> sample_step(Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t total_steps_ = 0;
  std::deque<Trajectory> trajectories_;
  std::vector<std::size_t> cumulative_;  // cumulative step counts, rebuilt on change

  void rebuild_cumulative();
};

// Fractions must sum to 1. TDM mode is (0.2, 0.4, 0.4); HER mode (0.2, 0, 0.8).
struct RelabelStrategy {
  double original = 0.2;
  double buffer_random = 0.4;
  double future = 0.4;

  static RelabelStrategy tdm() { return {0.2, 0.4, 0.4}; }
  static RelabelStrategy her() { return {0.2, 0.0, 0.8}; }
  void validate() const;
};

enum class GoalSource { Original, BufferRandom, Future };

struct RelabeledBatch {
  std::vector<Transition> transitions;
  std::vector<GoalSource> sources;
  std::vector<std::pair<std::size_t, std::size_t>> origin;  // (trajectory, step)
  std::vector<int> future_goal_index;  // state index j > step for Future entries, else -1
};

// Batch of transitions with goals drawn per the strategy fractions. Relabeled
// entries get a fresh remaining horizon uniform in [0, t_max]; future-mode
// goals come from a strictly later state of the same trajectory.
RelabeledBatch sample_relabeled_batch(const ReplayBuffer& buffer, const RelabelStrategy& strategy,
                                      Rng& rng, int batch_size, int t_max);

}  // namespace leap::tdm
