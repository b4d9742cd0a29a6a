#include "stirwalk/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace stirwalk {

BernoulliCut::BernoulliCut(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("probability must lie in [0, 1]");
  }
  if (p == 1.0) {
    always_ = true;
    cut_ = ~std::uint64_t{0};
    return;
  }
  // p < 1 so p * 2^64 < 2^64 and the floor fits.
  cut_ = static_cast<std::uint64_t>(std::ldexp(p, 64));
}

}  // namespace stirwalk
