#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "riskbandit/common/random.hpp"

namespace riskbandit::agents {

/// One interaction: context, action, and metrics c0..cM with c0 the reward.
struct Experience {
  Eigen::VectorXd context;
  Eigen::VectorXd action;
  Eigen::VectorXd metrics;
};

/// Column-stacked minibatch.
struct Batch {
  Eigen::MatrixXd contexts;
  Eigen::MatrixXd actions;
  Eigen::MatrixXd metrics;

  Eigen::Index size() const { return contexts.cols(); }
};

Batch make_batch(const std::vector<Experience>& experiences);

/// Fixed-capacity ring of experiences with a uniform sampler.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 2000);

  void push(Experience e);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  /// Storage order; slot `next_slot()` is overwritten next once full.
  const Experience& at(std::size_t i) const { return items_.at(i); }
  std::size_t next_slot() const { return next_; }

  /// Without replacement when size() >= n, with replacement otherwise.
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;
  Batch sample(std::size_t n, Rng& rng) const;

  void restore(std::vector<Experience> items, std::size_t next);

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Experience> items_;
};

}  // namespace riskbandit::agents
