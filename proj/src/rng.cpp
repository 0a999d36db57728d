#include "tracegap/rng.hpp"

#include <stdexcept>

namespace tracegap {

std::size_t Rng::weighted_index(const std::vector<double>& weights) {
  double total = 0.0;
  for (const double w : weights) {
    if (w < 0.0) throw std::invalid_argument("negative sampling weight");
    total += w;
  }
  if (total <= 0.0) throw std::invalid_argument("all sampling weights zero");
  double u = next_double() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return i;
  }
  return weights.size() - 1;
}

}  // namespace tracegap
