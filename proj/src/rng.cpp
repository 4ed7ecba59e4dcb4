#include "spo/rng.hpp"

#include <stdexcept>

namespace spo {

std::size_t sample_categorical(std::span<const double> probs, CounterRng& rng) {
  if (probs.empty()) throw std::invalid_argument("sample_categorical: empty distribution");
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last = probs.size();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last = i;
    if (u < acc) return i;
  }
  if (last == probs.size()) throw std::invalid_argument("sample_categorical: no positive mass");
  return last;
}

}  // namespace spo
