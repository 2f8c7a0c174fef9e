#pragma once

#include <atomic>
#include <barrier>
#include <functional>
#include <memory>
#include <vector>

#include "fedgrid/nn.hpp"

namespace fedgrid {

struct FederationSchedule {
  int sync_every_episodes = 5;  // the federation episode length, in episodes
};

/// Elementwise arithmetic mean of shape-identical bundles. Contribution order
/// is fixed by the caller (sorted house index), so the result is
/// deterministic and order-independent across runs.
WeightBundle fed_average(const std::vector<WeightBundle>& contributions);

/// Synchronous gather/average/broadcast point shared by the house workers.
/// Each worker calls exchange() once per federation round; the call blocks
/// until all workers of the round arrive, then returns the global model.
class FederationHub {
 public:
  explicit FederationHub(int houses);

  // Seed a slot before the workers start; not counted as transport.
  void prime(int house_id, WeightBundle bundle);

  WeightBundle exchange(int house_id, WeightBundle local);

  // Permanently withdraw a failed worker so the others cannot deadlock.
  void abandon();

  // One transport event per uploaded bundle; no traffic occurs between syncs.
  long transport_events() const { return transport_events_.load(); }
  long rounds_completed() const { return rounds_.load(); }
  WeightBundle global() const;

 private:
  int houses_;
  std::vector<WeightBundle> slots_;
  WeightBundle global_;
  std::atomic<long> transport_events_{0};
  std::atomic<long> rounds_{0};
  std::unique_ptr<std::barrier<std::function<void()>>> barrier_;
};

}  // namespace fedgrid
