#include "stirwalk/recode.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "stirwalk/rng.hpp"

namespace stirwalk::recode {

SiteIndicator::SiteIndicator(Window window, std::vector<bool> marked)
    : window_(window), marked_(std::move(marked)) {
  if (marked_.size() != window_.size()) throw std::invalid_argument("indicator size does not match window size");
}

std::size_t SiteIndicator::count() const noexcept {
  return static_cast<std::size_t>(std::count(marked_.begin(), marked_.end(), true));
}

SiteIndicator random_indicator(const Window& window, double density, std::uint64_t seed) {
  const BernoulliCut cut(density);
  std::vector<bool> marked(window.size());
  for (std::size_t i = 0; i < marked.size(); ++i) {
    const LatticePoint p = window.point(i);
    marked[i] = cut(counter_hash(seed, Stream::Marker, p.x, p.y));
  }
  return {window, std::move(marked)};
}

namespace {

// Smallest l-infinity distance from z to a site outside the window.
std::int64_t distance_to_outside(const Window& w, LatticePoint z) {
  if (!w.contains(z)) return 0;
  return w.margin(z);
}

}  // namespace

NearestMarked nearest_marked_detail(const SiteIndicator& indicator, LatticePoint z) {
  const Window& w = indicator.window();
  const std::int64_t max_radius = std::max({std::abs(z.x - w.x0()), std::abs(z.x - w.x1()), std::abs(z.y - w.y0()),
                                            std::abs(z.y - w.y1())});
  for (std::int64_t r = 0; r <= max_radius; ++r) {
    // Shell points in lexicographic order: x ascending, then y ascending. The
    // first marked one is the lexicographic minimum of the shell.
    const std::int64_t xlo = std::max(z.x - r, w.x0());
    const std::int64_t xhi = std::min(z.x + r, w.x1());
    for (std::int64_t x = xlo; x <= xhi; ++x) {
      const bool full_column = (x == z.x - r) || (x == z.x + r);
      const auto hit = [&](std::int64_t y) { return indicator.marked({x, y}); };
      std::optional<std::int64_t> found;
      if (full_column) {
        for (std::int64_t y = std::max(z.y - r, w.y0()); y <= std::min(z.y + r, w.y1()); ++y) {
          if (hit(y)) {
            found = y;
            break;
          }
        }
      } else if (hit(z.y - r)) {
        found = z.y - r;
      } else if (hit(z.y + r)) {
        found = z.y + r;
      }
      if (found) {
        return {{x, *found}, r, r >= distance_to_outside(w, z)};
      }
    }
  }
  throw UndefinedInWindow("no marked site in window");
}

std::size_t RecodedField::undefined_count() const noexcept {
  return static_cast<std::size_t>(std::count(status.begin(), status.end(), SiteStatus::Undefined));
}

walks::ArrowField RecodedField::to_field(walks::FieldMode mode) const {
  std::vector<Arrow> out;
  out.reserve(arrows.size());
  for (const auto& a : arrows) {
    if (!a) throw UndefinedInWindow("recoded field has undefined sites");
    out.push_back(*a);
  }
  return walks::ArrowField(window, std::move(out), mode);
}

RecodedField recode_field(const walks::ArrowField& field, const SiteIndicator& indicator) {
  const Window& w = field.window();
  if (!(indicator.window() == w)) throw std::invalid_argument("indicator window differs from field window");
  RecodedField out{w, std::vector<std::optional<Arrow>>(w.size()), std::vector<SiteStatus>(w.size())};
  if (indicator.count() == 0) {
    std::fill(out.status.begin(), out.status.end(), SiteStatus::Undefined);
    return out;
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    const NearestMarked nm = nearest_marked_detail(indicator, w.point(i));
    out.arrows[i] = field.at(nm.site);
    out.status[i] = nm.boundary_limited ? SiteStatus::BoundaryLimited : SiteStatus::Exact;
  }
  return out;
}

std::string serialize_indicator(const SiteIndicator& indicator) {
  const Window& w = indicator.window();
  std::ostringstream out;
  out << w.x0() << ' ' << w.y0() << ' ' << w.x1() << ' ' << w.y1() << '\n';
  for (std::int64_t y = w.y1(); y >= w.y0(); --y) {
    for (std::int64_t x = w.x0(); x <= w.x1(); ++x) out << (indicator.marked({x, y}) ? '1' : '0');
    out << '\n';
  }
  return out.str();
}

SiteIndicator parse_indicator(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::int64_t x0, y0, x1, y1;
  if (!(in >> x0 >> y0 >> x1 >> y1)) throw std::invalid_argument("indicator header must be 'x0 y0 x1 y1'");
  const Window w(x0, y0, x1, y1);
  std::vector<bool> marked(w.size());
  std::string line;
  std::getline(in, line);
  for (std::int64_t y = w.y1(); y >= w.y0(); --y) {
    if (!std::getline(in, line) || static_cast<std::int64_t>(line.size()) != w.width()) {
      throw std::invalid_argument("indicator row for y=" + std::to_string(y) + " missing or of wrong width");
    }
    for (std::int64_t x = w.x0(); x <= w.x1(); ++x) {
      const char c = line[static_cast<std::size_t>(x - w.x0())];
      if (c != '0' && c != '1') throw std::invalid_argument(std::string("indicator character '") + c + "'");
      marked[w.index({x, y})] = c == '1';
    }
  }
  return {w, std::move(marked)};
}

}  // namespace stirwalk::recode
