#pragma once

// Arrow-field walk systems on a finite window of Z^2.
//
// A field assigns one arrow to every window site; the walk from z follows the
// arrows, so walks through a common point share their future (compatibility).
// Everything here is windowed: a walk that would leave the window stops and
// reports it instead of guessing what lies outside.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stirwalk/lattice.hpp"

namespace stirwalk::walks {

enum class FieldMode { Directed, General };

class ArrowField {
 public:
  /// Throws std::invalid_argument if the arrow count does not match the window
  /// or a directed field carries an arrow outside {Right, Up}.
  ArrowField(Window window, std::vector<Arrow> arrows, FieldMode mode = FieldMode::Directed);

  [[nodiscard]] const Window& window() const noexcept { return window_; }
  [[nodiscard]] FieldMode mode() const noexcept { return mode_; }
  [[nodiscard]] std::span<const Arrow> arrows() const noexcept { return arrows_; }

  [[nodiscard]] bool contains(LatticePoint p) const noexcept { return window_.contains(p); }
  /// Throws std::out_of_range outside the window.
  [[nodiscard]] Arrow at(LatticePoint p) const;
  [[nodiscard]] std::optional<Arrow> find(LatticePoint p) const noexcept;

  friend bool operator==(const ArrowField&, const ArrowField&) = default;

 private:
  Window window_;
  std::vector<Arrow> arrows_;
  FieldMode mode_;
};

/// Each site independently carries Right with probability prob_e1, else Up.
ArrowField iid_field(const Window& window, double prob_e1, std::uint64_t seed);

ArrowField constant_field(const Window& window, Arrow arrow);

/// Arrow values indexed by anti-diagonal d = x + y, starting at `first`.
struct DiagonalBits {
  std::int64_t first = 0;
  std::vector<Arrow> values;

  [[nodiscard]] bool covers(std::int64_t diagonal) const noexcept {
    return diagonal >= first && diagonal < first + static_cast<std::int64_t>(values.size());
  }
  [[nodiscard]] Arrow at(std::int64_t diagonal) const { return values.at(static_cast<std::size_t>(diagonal - first)); }
};

DiagonalBits random_diagonal_bits(std::int64_t first, std::size_t count, double prob_e1, std::uint64_t seed);

/// Field constant on every anti-diagonal x + y = d, equal to bits.at(d).
/// Throws std::invalid_argument if some anti-diagonal meeting the window has no entry.
ArrowField striped_field(const DiagonalBits& bits, const Window& window);

struct WalkTrace {
  LatticePoint start;
  std::vector<LatticePoint> steps;  // steps[0] == start
  bool exited_window = false;

  [[nodiscard]] std::size_t completed_steps() const noexcept { return steps.size() - 1; }
};

/// Follows the arrows from z for k steps. If a step would leave the window the
/// trace holds the in-window prefix and exited_window is set.
WalkTrace walk_iterate(const ArrowField& field, LatticePoint z, std::size_t k);

struct CoalescenceVerdict {
  bool coalesced = false;
  LatticePoint point;  // earliest shared point along x's trace, valid if coalesced
  bool truncated = false;
};

/// Decides whether the walks from x and y share a lattice point within `horizon`
/// steps each. Truncation is flagged when either walk left the window early.
CoalescenceVerdict coalesce_within(const ArrowField& field, LatticePoint x, LatticePoint y, std::size_t horizon);

struct AncestryDepth {
  std::size_t depth = 0;
  bool truncated = false;  // stopped because the next generation lies outside the window
};

/// Length of the longest in-window ancestor chain ending at z, capped at max_depth.
/// Only defined for directed fields.
AncestryDepth biinfinite_depth(const ArrowField& field, LatticePoint z, std::size_t max_depth);

/// The tilted rectangle R = union over i in [0, L) of R_i, where
/// R_i = { anchor + i*u + k*v : k in [-L/2, L/2] }, u = (1,1), v = (-1,1).
class RotatedRect {
 public:
  RotatedRect(std::int64_t side, LatticePoint anchor);

  [[nodiscard]] std::int64_t side() const noexcept { return side_; }
  [[nodiscard]] LatticePoint anchor() const noexcept { return anchor_; }
  /// Sites in row-major order (y ascending, then x ascending).
  [[nodiscard]] const std::vector<LatticePoint>& sites() const noexcept { return sites_; }
  /// Index i of the layer R_i containing p (p must lie in R).
  [[nodiscard]] std::int64_t layer_of(LatticePoint p) const noexcept { return (p.x + p.y - anchor_.x - anchor_.y) / 2; }
  [[nodiscard]] Window bounding_window() const;

 private:
  std::int64_t side_;
  LatticePoint anchor_;
  std::vector<LatticePoint> sites_;
};

/// A field restricted to a RotatedRect; arrows aligned with RotatedRect::sites().
struct RectConfig {
  std::vector<Arrow> arrows;

  [[nodiscard]] std::string serialize() const;
  friend bool operator==(const RectConfig&, const RectConfig&) = default;
};

RectConfig restrict_to(const ArrowField& field, const RotatedRect& rect);

/// Arrows along the spine anchor + i*u, one per layer.
std::vector<Arrow> read_trajectory_bits(const ArrowField& field, const RotatedRect& rect);

/// Rebuilds the restriction to R from one arrow per layer: every site of R_i gets bits[i].
RectConfig reconstruct_from_trajectory(std::span<const Arrow> bits, const RotatedRect& rect);

using FieldSampler = std::function<ArrowField(const Window&, std::uint64_t)>;

FieldSampler iid_sampler(double prob_e1);
FieldSampler striped_sampler(double prob_e1);
FieldSampler constant_sampler(Arrow arrow);

/// Number of distinct restrictions to R over n_samples fields drawn with
/// per-sample seeds derived from `seed`.
std::size_t count_window_configs(const FieldSampler& sampler, const RotatedRect& rect, std::size_t n_samples,
                                 std::uint64_t seed, unsigned threads = 1);

// Text format: header "x0 y0 x1 y1", then one line per row from y1 down to y0,
// one arrow character per site.
std::string serialize_field(const ArrowField& field);
ArrowField parse_field(std::string_view text);

}  // namespace stirwalk::walks
