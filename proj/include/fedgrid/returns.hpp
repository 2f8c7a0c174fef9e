#pragma once

#include <span>

namespace fedgrid {

/// Discounted return G = sum_n gamma^n r_n, evaluated back-to-front so it
/// also realizes the recursion G_t = r_t + gamma * G_{t+1}.
inline double discounted_return(std::span<const double> rewards, double gamma) {
  double g = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    g = rewards[i] + gamma * g;
  }
  return g;
}

}  // namespace fedgrid
