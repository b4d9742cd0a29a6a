#include "stirwalk/lattice.hpp"

#include <algorithm>
#include <stdexcept>

namespace stirwalk {

std::string to_string(LatticePoint p) {
  return "(" + std::to_string(p.x) + "," + std::to_string(p.y) + ")";
}

Arrow arrow_from_char(char c) {
  switch (c) {
    case 'R': return Arrow::Right;
    case 'U': return Arrow::Up;
    case 'L': return Arrow::Left;
    case 'D': return Arrow::Down;
    default: break;
  }
  throw std::invalid_argument(std::string("unknown arrow character '") + c + "'");
}

Window::Window(std::int64_t x0, std::int64_t y0, std::int64_t x1, std::int64_t y1)
    : x0_(x0), y0_(y0), x1_(x1), y1_(y1) {
  if (x1 < x0 || y1 < y0) {
    throw std::invalid_argument("empty window");
  }
}

std::int64_t Window::margin(LatticePoint p) const noexcept {
  return 1 + std::min({p.x - x0_, x1_ - p.x, p.y - y0_, y1_ - p.y});
}

}  // namespace stirwalk
