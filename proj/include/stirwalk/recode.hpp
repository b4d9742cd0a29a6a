#pragma once

// Recoding of an arrow field through a set of marked sites: every site copies
// the arrow of its nearest marked site (l-infinity distance, lexicographic
// minimum on ties). Marked sites keep their own arrow.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stirwalk/lattice.hpp"
#include "stirwalk/walks.hpp"

namespace stirwalk::recode {

class UndefinedInWindow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SiteIndicator {
 public:
  SiteIndicator(Window window, std::vector<bool> marked);

  [[nodiscard]] const Window& window() const noexcept { return window_; }
  [[nodiscard]] bool marked(LatticePoint p) const noexcept { return window_.contains(p) && marked_[window_.index(p)]; }
  [[nodiscard]] std::size_t count() const noexcept;
  [[nodiscard]] const std::vector<bool>& flags() const noexcept { return marked_; }

  friend bool operator==(const SiteIndicator&, const SiteIndicator&) = default;

 private:
  Window window_;
  std::vector<bool> marked_;
};

/// Each site marked independently with probability `density`.
SiteIndicator random_indicator(const Window& window, double density, std::uint64_t seed);

struct NearestMarked {
  LatticePoint site;
  std::int64_t radius = 0;
  // A marked site outside the window could be closer (or tie and be lex-smaller).
  bool boundary_limited = false;
};

/// Nearest marked site to z searching l-infinity shells of radius 0, 1, 2, ...;
/// ties go to the lexicographic minimum. Throws UndefinedInWindow when nothing
/// in the window is marked.
NearestMarked nearest_marked_detail(const SiteIndicator& indicator, LatticePoint z);

inline LatticePoint nearest_marked(const SiteIndicator& indicator, LatticePoint z) {
  return nearest_marked_detail(indicator, z).site;
}

enum class SiteStatus { Exact, BoundaryLimited, Undefined };

struct RecodedField {
  Window window;
  std::vector<std::optional<Arrow>> arrows;
  std::vector<SiteStatus> status;

  [[nodiscard]] std::size_t undefined_count() const noexcept;
  /// Throws UndefinedInWindow if any site is undefined.
  [[nodiscard]] walks::ArrowField to_field(walks::FieldMode mode = walks::FieldMode::Directed) const;

  friend bool operator==(const RecodedField&, const RecodedField&) = default;
};

/// Output arrow at z is the input arrow at nearest_marked(indicator, z).
/// Indicator and field must share a window.
RecodedField recode_field(const walks::ArrowField& field, const SiteIndicator& indicator);

// Same layout as the field format: header "x0 y0 x1 y1", rows from y1 down, '1'/'0' per site.
std::string serialize_indicator(const SiteIndicator& indicator);
SiteIndicator parse_indicator(std::string_view text);

}  // namespace stirwalk::recode
