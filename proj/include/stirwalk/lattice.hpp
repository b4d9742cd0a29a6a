#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

namespace stirwalk {

/// A point of Z^2. The defaulted ordering is lexicographic (x first, then y).
struct LatticePoint {
  std::int64_t x = 0;
  std::int64_t y = 0;

  friend constexpr auto operator<=>(const LatticePoint&, const LatticePoint&) = default;
};

constexpr LatticePoint operator+(LatticePoint a, LatticePoint b) noexcept { return {a.x + b.x, a.y + b.y}; }
constexpr LatticePoint operator-(LatticePoint a, LatticePoint b) noexcept { return {a.x - b.x, a.y - b.y}; }
constexpr LatticePoint operator*(std::int64_t k, LatticePoint a) noexcept { return {k * a.x, k * a.y}; }

constexpr std::int64_t linf_distance(LatticePoint a, LatticePoint b) noexcept {
  const std::int64_t dx = a.x > b.x ? a.x - b.x : b.x - a.x;
  const std::int64_t dy = a.y > b.y ? a.y - b.y : b.y - a.y;
  return dx > dy ? dx : dy;
}

std::string to_string(LatticePoint p);

// Arrow characters double as the field serialization alphabet.
enum class Arrow : char {
  Right = 'R',  // +e1
  Up = 'U',     // +e2
  Left = 'L',   // -e1
  Down = 'D',   // -e2
};

constexpr LatticePoint displacement(Arrow a) noexcept {
  switch (a) {
    case Arrow::Right: return {1, 0};
    case Arrow::Up: return {0, 1};
    case Arrow::Left: return {-1, 0};
    case Arrow::Down: return {0, -1};
  }
  return {0, 0};
}

constexpr bool is_directed(Arrow a) noexcept { return a == Arrow::Right || a == Arrow::Up; }
constexpr char to_char(Arrow a) noexcept { return static_cast<char>(a); }
Arrow arrow_from_char(char c);

/// Axis-aligned rectangle [x0, x1] x [y0, y1], bounds inclusive, never empty.
class Window {
 public:
  Window(std::int64_t x0, std::int64_t y0, std::int64_t x1, std::int64_t y1);

  [[nodiscard]] std::int64_t x0() const noexcept { return x0_; }
  [[nodiscard]] std::int64_t y0() const noexcept { return y0_; }
  [[nodiscard]] std::int64_t x1() const noexcept { return x1_; }
  [[nodiscard]] std::int64_t y1() const noexcept { return y1_; }
  [[nodiscard]] std::int64_t width() const noexcept { return x1_ - x0_ + 1; }
  [[nodiscard]] std::int64_t height() const noexcept { return y1_ - y0_ + 1; }
  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(width() * height()); }

  [[nodiscard]] bool contains(LatticePoint p) const noexcept {
    return p.x >= x0_ && p.x <= x1_ && p.y >= y0_ && p.y <= y1_;
  }
  /// Row-major index with row y0 first.
  [[nodiscard]] std::size_t index(LatticePoint p) const noexcept {
    return static_cast<std::size_t>((p.y - y0_) * width() + (p.x - x0_));
  }
  [[nodiscard]] LatticePoint point(std::size_t i) const noexcept {
    const auto w = static_cast<std::size_t>(width());
    return {x0_ + static_cast<std::int64_t>(i % w), y0_ + static_cast<std::int64_t>(i / w)};
  }
  /// l-infinity distance from p to the nearest point outside the window (p inside).
  [[nodiscard]] std::int64_t margin(LatticePoint p) const noexcept;

  [[nodiscard]] Window translated(LatticePoint d) const { return {x0_ + d.x, y0_ + d.y, x1_ + d.x, y1_ + d.y}; }

  friend bool operator==(const Window&, const Window&) = default;

 private:
  std::int64_t x0_, y0_, x1_, y1_;
};

}  // namespace stirwalk
