#include "fedgrid/federation.hpp"

#include <stdexcept>

namespace fedgrid {

WeightBundle fed_average(const std::vector<WeightBundle>& contributions) {
  if (contributions.empty()) {
    throw std::runtime_error("fed_average: no contributions");
  }
  const WeightBundle& first = contributions.front();
  for (const WeightBundle& c : contributions) {
    if (!c.same_shape(first)) {
      throw std::runtime_error("fed_average: contribution shape mismatch");
    }
  }
  // Mean computed as first + mean(deviation from first): identical
  // contributions average to the identical bundle bit-for-bit.
  WeightBundle out = first;
  const double inv = 1.0 / static_cast<double>(contributions.size());
  for (std::size_t p = 0; p < out.parts.size(); ++p) {
    for (std::size_t t = 0; t < out.parts[p].tensors.size(); ++t) {
      auto& dst = out.parts[p].tensors[t].values;
      for (std::size_t i = 0; i < dst.size(); ++i) {
        double dev = 0.0;
        for (std::size_t c = 1; c < contributions.size(); ++c) {
          dev += contributions[c].parts[p].tensors[t].values[i] - dst[i];
        }
        dst[i] += dev * inv;
      }
    }
  }
  return out;
}

FederationHub::FederationHub(int houses) : houses_(houses), slots_(houses) {
  if (houses < 1) throw std::runtime_error("FederationHub: need at least 1 house");
  barrier_ = std::make_unique<std::barrier<std::function<void()>>>(
      houses_, std::function<void()>([this] {
        global_ = fed_average(slots_);
        rounds_.fetch_add(1);
      }));
}

void FederationHub::prime(int house_id, WeightBundle bundle) {
  slots_.at(house_id) = std::move(bundle);
}

WeightBundle FederationHub::exchange(int house_id, WeightBundle local) {
  if (house_id < 0 || house_id >= houses_) {
    throw std::runtime_error("FederationHub: bad house id");
  }
  slots_[house_id] = std::move(local);
  transport_events_.fetch_add(1);
  barrier_->arrive_and_wait();
  return global_;
}

void FederationHub::abandon() { barrier_->arrive_and_drop(); }

WeightBundle FederationHub::global() const { return global_; }

}  // namespace fedgrid
