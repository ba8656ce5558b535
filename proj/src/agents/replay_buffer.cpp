#include "riskbandit/agents/replay_buffer.hpp"

#include <numeric>

#include "riskbandit/common/errors.hpp"

namespace riskbandit::agents {

Batch make_batch(const std::vector<Experience>& experiences) {
  if (experiences.empty()) throw ShapeError("empty minibatch");
  const auto n = static_cast<Eigen::Index>(experiences.size());
  const auto& first = experiences.front();
  Batch batch{Eigen::MatrixXd(first.context.size(), n), Eigen::MatrixXd(first.action.size(), n),
              Eigen::MatrixXd(first.metrics.size(), n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& e = experiences[static_cast<std::size_t>(j)];
    batch.contexts.col(j) = e.context;
    batch.actions.col(j) = e.action;
    batch.metrics.col(j) = e.metrics;
  }
  return batch;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("replay buffer capacity must be positive");
  items_.reserve(capacity_);
}

void ReplayBuffer::push(Experience e) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(e));
  } else {
    items_[next_] = std::move(e);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  if (items_.empty()) throw ShapeError("sampling from an empty replay buffer");
  std::vector<std::size_t> out;
  out.reserve(n);
  if (items_.size() >= n) {
    // Partial Fisher-Yates.
    std::vector<std::size_t> pool(items_.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i + uniform_index(rng, pool.size() - i);
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) out.push_back(uniform_index(rng, items_.size()));
  }
  return out;
}

Batch ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  const auto idx = sample_indices(n, rng);
  const auto& first = items_.front();
  const auto cols = static_cast<Eigen::Index>(n);
  Batch batch{Eigen::MatrixXd(first.context.size(), cols),
              Eigen::MatrixXd(first.action.size(), cols),
              Eigen::MatrixXd(first.metrics.size(), cols)};
  for (Eigen::Index j = 0; j < cols; ++j) {
    const auto& e = items_[idx[static_cast<std::size_t>(j)]];
    batch.contexts.col(j) = e.context;
    batch.actions.col(j) = e.action;
    batch.metrics.col(j) = e.metrics;
  }
  return batch;
}

void ReplayBuffer::restore(std::vector<Experience> items, std::size_t next) {
  if (items.size() > capacity_ || (items.size() < capacity_ && next != items.size() % capacity_) ||
      next >= capacity_) {
    throw IntegrityError("replay buffer state inconsistent with capacity");
  }
  items_ = std::move(items);
  items_.reserve(capacity_);
  next_ = next;
}

}  // namespace riskbandit::agents
