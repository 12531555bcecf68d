#include "leap/tdm/replay.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace leap::tdm {

void ReplayBuffer::rebuild_cumulative() {
  cumulative_.resize(trajectories_.size());
  std::size_t acc = 0;
  for (std::size_t i = 0; i < trajectories_.size(); ++i) {
    acc += trajectories_[i].steps.size();
    cumulative_[i] = acc;
  }
  total_steps_ = acc;
}

void ReplayBuffer::add_trajectory(Trajectory traj) {
  if (traj.steps.empty()) throw std::invalid_argument("cannot add empty trajectory");
  trajectories_.push_back(std::move(traj));
  total_steps_ += trajectories_.back().steps.size();
  while (total_steps_ > capacity_ && trajectories_.size() > 1) {
    total_steps_ -= trajectories_.front().steps.size();
    trajectories_.pop_front();
  }
  rebuild_cumulative();
}

std::pair<std::size_t, std::size_t> ReplayBuffer::sample_step(Rng& rng) const {
  if (total_steps_ == 0) throw std::runtime_error("replay buffer is empty");
  std::uniform_int_distribution<std::size_t> pick(0, total_steps_ - 1);
  const std::size_t flat = pick(rng);
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), flat);
  const std::size_t ti = static_cast<std::size_t>(it - cumulative_.begin());
  const std::size_t before = (ti == 0) ? 0 : cumulative_[ti - 1];
  return {ti, flat - before};
}

void RelabelStrategy::validate() const {
  for (double f : {original, buffer_random, future})
    if (f < 0.0 || f > 1.0) throw std::invalid_argument("relabel fractions must be in [0,1]");
  if (std::abs(original + buffer_random + future - 1.0) > 1e-9)
    throw std::invalid_argument("relabel fractions must sum to 1");
}

RelabeledBatch sample_relabeled_batch(const ReplayBuffer& buffer, const RelabelStrategy& strategy,
                                      Rng& rng, int batch_size, int t_max) {
  strategy.validate();
  if (buffer.num_trajectories() == 0) throw std::runtime_error("cannot sample from empty buffer");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");

  RelabeledBatch batch;
  batch.transitions.reserve(batch_size);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> horizon(0, t_max);

  for (int b = 0; b < batch_size; ++b) {
    const auto [ti, si] = buffer.sample_step(rng);
    const auto& traj = buffer.trajectory(ti);
    Transition t = traj.steps[si];
    const double u = coin(rng);
    GoalSource source;
    int future_index = -1;
    if (u < strategy.original) {
      source = GoalSource::Original;
    } else if (u < strategy.original + strategy.buffer_random) {
      source = GoalSource::BufferRandom;
      const auto [tj, sj] = buffer.sample_step(rng);
      t.goal = buffer.trajectory(tj).steps[sj].next_state;
      t.remaining_horizon = horizon(rng);
    } else {
      source = GoalSource::Future;
      // states of the trajectory are indexed 0..L, state j = steps[j-1].next_state
      const int L = static_cast<int>(traj.steps.size());
      std::uniform_int_distribution<int> future(static_cast<int>(si) + 1, L);
      future_index = future(rng);
      t.goal = traj.steps[future_index - 1].next_state;
      t.remaining_horizon = horizon(rng);
    }
    batch.transitions.push_back(t);
    batch.sources.push_back(source);
    batch.origin.emplace_back(ti, si);
    batch.future_goal_index.push_back(future_index);
  }
  return batch;
}

}  // namespace leap::tdm
