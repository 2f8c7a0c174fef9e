#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "fedgrid/rng.hpp"

namespace fedgrid {

struct Transition {
  Eigen::Vector4d state;
  int action = 0;
  double reward = 0.0;
  Eigen::Vector4d next_state;
  bool done = false;
};

/// Fixed-capacity ring buffer with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::runtime_error("replay capacity must be > 0");
    storage_.reserve(capacity_);
  }

  void push(const Transition& t) {
    if (storage_.size() < capacity_) {
      storage_.push_back(t);
    } else {
      storage_[next_] = t;
      next_ = (next_ + 1) % capacity_;
    }
  }

  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return storage_.at(i); }

  std::vector<Transition> sample(std::size_t batch, Rng& rng) const {
    if (storage_.size() < batch || batch == 0) {
      throw std::runtime_error("replay sample: need " + std::to_string(batch) +
                               " transitions, have " + std::to_string(storage_.size()));
    }
    std::uniform_int_distribution<std::size_t> pick(0, storage_.size() - 1);
    std::vector<Transition> out;
    out.reserve(batch);
    for (std::size_t i = 0; i < batch; ++i) out.push_back(storage_[pick(rng)]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;  // eviction cursor once full
  std::vector<Transition> storage_;
};

}  // namespace fedgrid
