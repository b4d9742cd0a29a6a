#include "stirwalk/walks.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "stirwalk/parallel.hpp"
#include "stirwalk/rng.hpp"

namespace stirwalk::walks {

ArrowField::ArrowField(Window window, std::vector<Arrow> arrows, FieldMode mode)
    : window_(window), arrows_(std::move(arrows)), mode_(mode) {
  if (arrows_.size() != window_.size()) {
    throw std::invalid_argument("arrow count does not match window size");
  }
  if (mode_ == FieldMode::Directed &&
      !std::all_of(arrows_.begin(), arrows_.end(), [](Arrow a) { return is_directed(a); })) {
    throw std::invalid_argument("directed field carries a non-directed arrow");
  }
}

Arrow ArrowField::at(LatticePoint p) const {
  if (!window_.contains(p)) throw std::out_of_range("site " + to_string(p) + " outside field window");
  return arrows_[window_.index(p)];
}

std::optional<Arrow> ArrowField::find(LatticePoint p) const noexcept {
  if (!window_.contains(p)) return std::nullopt;
  return arrows_[window_.index(p)];
}

ArrowField iid_field(const Window& window, double prob_e1, std::uint64_t seed) {
  const BernoulliCut cut(prob_e1);
  std::vector<Arrow> arrows(window.size());
  for (std::size_t i = 0; i < arrows.size(); ++i) {
    const LatticePoint p = window.point(i);
    arrows[i] = cut(counter_hash(seed, Stream::Field, p.x, p.y)) ? Arrow::Right : Arrow::Up;
  }
  return ArrowField(window, std::move(arrows));
}

ArrowField constant_field(const Window& window, Arrow arrow) {
  const FieldMode mode = is_directed(arrow) ? FieldMode::Directed : FieldMode::General;
  return ArrowField(window, std::vector<Arrow>(window.size(), arrow), mode);
}

DiagonalBits random_diagonal_bits(std::int64_t first, std::size_t count, double prob_e1, std::uint64_t seed) {
  const BernoulliCut cut(prob_e1);
  DiagonalBits bits{first, std::vector<Arrow>(count)};
  for (std::size_t j = 0; j < count; ++j) {
    const auto d = first + static_cast<std::int64_t>(j);
    bits.values[j] = cut(counter_hash(seed, Stream::Stripe, d, 0)) ? Arrow::Right : Arrow::Up;
  }
  return bits;
}

ArrowField striped_field(const DiagonalBits& bits, const Window& window) {
  const std::int64_t lo = window.x0() + window.y0();
  const std::int64_t hi = window.x1() + window.y1();
  if (!bits.covers(lo) || !bits.covers(hi)) {
    throw std::invalid_argument("diagonal bits do not cover anti-diagonals " + std::to_string(lo) + ".." +
                                std::to_string(hi));
  }
  const FieldMode mode = std::all_of(bits.values.begin(), bits.values.end(), is_directed) ? FieldMode::Directed
                                                                                          : FieldMode::General;
  std::vector<Arrow> arrows(window.size());
  for (std::size_t i = 0; i < arrows.size(); ++i) {
    const LatticePoint p = window.point(i);
    arrows[i] = bits.at(p.x + p.y);
  }
  return ArrowField(window, std::move(arrows), mode);
}

WalkTrace walk_iterate(const ArrowField& field, LatticePoint z, std::size_t k) {
  if (!field.contains(z)) throw std::out_of_range("walk start " + to_string(z) + " outside field window");
  WalkTrace trace{z, {z}, false};
  trace.steps.reserve(k + 1);
  LatticePoint cur = z;
  for (std::size_t j = 0; j < k; ++j) {
    const LatticePoint next = cur + displacement(field.at(cur));
    if (!field.contains(next)) {
      trace.exited_window = true;
      break;
    }
    trace.steps.push_back(next);
    cur = next;
  }
  return trace;
}

CoalescenceVerdict coalesce_within(const ArrowField& field, LatticePoint x, LatticePoint y, std::size_t horizon) {
  const WalkTrace tx = walk_iterate(field, x, horizon);
  const WalkTrace ty = walk_iterate(field, y, horizon);
  CoalescenceVerdict verdict;
  verdict.truncated = tx.exited_window || ty.exited_window;
  const std::set<LatticePoint> on_y(ty.steps.begin(), ty.steps.end());
  for (const LatticePoint& p : tx.steps) {
    if (on_y.contains(p)) {
      verdict.coalesced = true;
      verdict.point = p;
      break;
    }
  }
  return verdict;
}

AncestryDepth biinfinite_depth(const ArrowField& field, LatticePoint z, std::size_t max_depth) {
  if (field.mode() != FieldMode::Directed) throw std::invalid_argument("ancestry depth requires a directed field");
  if (!field.contains(z)) throw std::out_of_range("site " + to_string(z) + " outside field window");

  // Directed ancestors of b: b - e1 if it points Right, b - e2 if it points Up.
  // Each generation lies on the next lower anti-diagonal, so no site is seen twice.
  std::vector<LatticePoint> generation{z};
  AncestryDepth result;
  while (result.depth < max_depth) {
    std::vector<LatticePoint> parents;
    bool outside = false;
    for (const LatticePoint& b : generation) {
      const LatticePoint from_left = b - LatticePoint{1, 0};
      const LatticePoint from_below = b - LatticePoint{0, 1};
      if (auto a = field.find(from_left)) {
        if (*a == Arrow::Right) parents.push_back(from_left);
      } else {
        outside = true;
      }
      if (auto a = field.find(from_below)) {
        if (*a == Arrow::Up) parents.push_back(from_below);
      } else {
        outside = true;
      }
    }
    if (parents.empty()) {
      result.truncated = outside;
      break;
    }
    std::sort(parents.begin(), parents.end());
    parents.erase(std::unique(parents.begin(), parents.end()), parents.end());
    generation = std::move(parents);
    ++result.depth;
  }
  return result;
}

RotatedRect::RotatedRect(std::int64_t side, LatticePoint anchor) : side_(side), anchor_(anchor) {
  if (side <= 0 || side % 2 != 0) throw std::invalid_argument("rotated rectangle side must be even and positive");
  const LatticePoint u{1, 1};
  const LatticePoint v{-1, 1};
  sites_.reserve(static_cast<std::size_t>(side * (side + 1)));
  for (std::int64_t i = 0; i < side; ++i) {
    for (std::int64_t k = -side / 2; k <= side / 2; ++k) {
      sites_.push_back(anchor + i * u + k * v);
    }
  }
  std::sort(sites_.begin(), sites_.end(), [](LatticePoint a, LatticePoint b) {
    return a.y != b.y ? a.y < b.y : a.x < b.x;
  });
}

Window RotatedRect::bounding_window() const {
  std::int64_t x0 = sites_.front().x, x1 = x0, y0 = sites_.front().y, y1 = y0;
  for (const LatticePoint& p : sites_) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  return {x0, y0, x1, y1};
}

std::string RectConfig::serialize() const {
  std::string out(arrows.size(), ' ');
  std::transform(arrows.begin(), arrows.end(), out.begin(), to_char);
  return out;
}

RectConfig restrict_to(const ArrowField& field, const RotatedRect& rect) {
  RectConfig config;
  config.arrows.reserve(rect.sites().size());
  for (const LatticePoint& p : rect.sites()) config.arrows.push_back(field.at(p));
  return config;
}

std::vector<Arrow> read_trajectory_bits(const ArrowField& field, const RotatedRect& rect) {
  std::vector<Arrow> bits;
  bits.reserve(static_cast<std::size_t>(rect.side()));
  for (std::int64_t i = 0; i < rect.side(); ++i) bits.push_back(field.at(rect.anchor() + i * LatticePoint{1, 1}));
  return bits;
}

RectConfig reconstruct_from_trajectory(std::span<const Arrow> bits, const RotatedRect& rect) {
  if (static_cast<std::int64_t>(bits.size()) != rect.side()) {
    throw std::invalid_argument("trajectory length " + std::to_string(bits.size()) + " does not match side " +
                                std::to_string(rect.side()));
  }
  RectConfig config;
  config.arrows.reserve(rect.sites().size());
  for (const LatticePoint& p : rect.sites()) config.arrows.push_back(bits[static_cast<std::size_t>(rect.layer_of(p))]);
  return config;
}

FieldSampler iid_sampler(double prob_e1) {
  return [prob_e1](const Window& w, std::uint64_t seed) { return iid_field(w, prob_e1, seed); };
}

FieldSampler striped_sampler(double prob_e1) {
  return [prob_e1](const Window& w, std::uint64_t seed) {
    const std::int64_t lo = w.x0() + w.y0();
    const auto count = static_cast<std::size_t>(w.x1() + w.y1() - lo + 1);
    return striped_field(random_diagonal_bits(lo, count, prob_e1, seed), w);
  };
}

FieldSampler constant_sampler(Arrow arrow) {
  return [arrow](const Window& w, std::uint64_t) { return constant_field(w, arrow); };
}

std::size_t count_window_configs(const FieldSampler& sampler, const RotatedRect& rect, std::size_t n_samples,
                                 std::uint64_t seed, unsigned threads) {
  if (n_samples == 0) throw std::invalid_argument("n_samples must be positive");
  const Window window = rect.bounding_window();
  const std::size_t chunks = std::max(1u, threads);
  std::vector<std::unordered_set<std::string>> partial(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    for (std::size_t s = c; s < n_samples; s += chunks) {
      const ArrowField field = sampler(window, derive_seed(seed, Stream::Sample, static_cast<std::int64_t>(s)));
      partial[c].insert(restrict_to(field, rect).serialize());
    }
  });
  std::unordered_set<std::string> all;
  for (auto& set : partial) all.merge(set);
  return all.size();
}

std::string serialize_field(const ArrowField& field) {
  const Window& w = field.window();
  std::ostringstream out;
  out << w.x0() << ' ' << w.y0() << ' ' << w.x1() << ' ' << w.y1() << '\n';
  for (std::int64_t y = w.y1(); y >= w.y0(); --y) {
    for (std::int64_t x = w.x0(); x <= w.x1(); ++x) out << to_char(field.at({x, y}));
    out << '\n';
  }
  return out.str();
}

ArrowField parse_field(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::int64_t x0, y0, x1, y1;
  if (!(in >> x0 >> y0 >> x1 >> y1)) throw std::invalid_argument("field header must be 'x0 y0 x1 y1'");
  const Window w(x0, y0, x1, y1);
  std::vector<Arrow> arrows(w.size());
  bool directed = true;
  std::string line;
  std::getline(in, line);
  for (std::int64_t y = w.y1(); y >= w.y0(); --y) {
    if (!std::getline(in, line) || static_cast<std::int64_t>(line.size()) != w.width()) {
      throw std::invalid_argument("field row for y=" + std::to_string(y) + " missing or of wrong width");
    }
    for (std::int64_t x = w.x0(); x <= w.x1(); ++x) {
      const Arrow a = arrow_from_char(line[static_cast<std::size_t>(x - w.x0())]);
      directed = directed && is_directed(a);
      arrows[w.index({x, y})] = a;
    }
  }
  return ArrowField(w, std::move(arrows), directed ? FieldMode::Directed : FieldMode::General);
}

}  // namespace stirwalk::walks
