#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>

#include "stirwalk/walks.hpp"

using namespace stirwalk;
using namespace stirwalk::walks;

namespace {

DiagonalBits alternating_bits(std::int64_t first, std::size_t count) {
  DiagonalBits bits{first, {}};
  for (std::size_t i = 0; i < count; ++i) bits.values.push_back(i % 2 == 0 ? Arrow::Right : Arrow::Up);
  return bits;
}

}  // namespace

TEST_CASE("iid_field degenerate and fair") {
  const Window w(-3, -3, 3, 3);
  const auto ones = iid_field(w, 1.0, 5), zeros = iid_field(w, 0.0, 5);
  for (Arrow a : ones.arrows()) CHECK(a == Arrow::Right);
  for (Arrow a : zeros.arrows()) CHECK(a == Arrow::Up);

  const Window big(0, 0, 99, 99);
  const auto f = iid_field(big, 0.5, 42);
  std::size_t right = 0;
  for (Arrow a : f.arrows()) right += a == Arrow::Right ? 1 : 0;
  CHECK(std::abs(static_cast<double>(right) / 1e4 - 0.5) < 5 * 0.5 / 100);
  CHECK(iid_field(big, 0.5, 42) == f);
  CHECK_FALSE(iid_field(big, 0.5, 43) == f);
}

TEST_CASE("directed fields reject other arrows") {
  const Window w(0, 0, 0, 1);
  CHECK_THROWS_AS(ArrowField(w, {Arrow::Right, Arrow::Left}), std::invalid_argument);
  CHECK_NOTHROW(ArrowField(w, {Arrow::Right, Arrow::Left}, FieldMode::General));
  CHECK_THROWS_AS(ArrowField(w, {Arrow::Right}), std::invalid_argument);
}

TEST_CASE("striped_field") {
  const Window w(0, 0, 5, 5);
  const auto all_right = striped_field(DiagonalBits{0, std::vector<Arrow>(11, Arrow::Right)}, w);
  CHECK(all_right == constant_field(w, Arrow::Right));

  const auto alt = striped_field(alternating_bits(0, 11), w);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto z = w.point(i);
    CHECK(alt.at(z) == ((z.x + z.y) % 2 == 0 ? Arrow::Right : Arrow::Up));
  }
  CHECK_THROWS_AS(striped_field(alternating_bits(0, 10), w), std::invalid_argument);
  CHECK_THROWS_AS(striped_field(alternating_bits(1, 11), w), std::invalid_argument);
}

TEST_CASE("striped walks on one anti-diagonal never meet") {
  const Window w(0, 0, 40, 40);
  const auto field = striped_field(random_diagonal_bits(0, 81, 0.5, 9), w);
  const auto a = walk_iterate(field, {0, 6}, 30);
  const auto b = walk_iterate(field, {6, 0}, 30);
  std::set<LatticePoint> seen(a.steps.begin(), a.steps.end());
  for (const auto& q : b.steps) CHECK_FALSE(seen.contains(q));
  CHECK_FALSE(coalesce_within(field, {0, 6}, {6, 0}, 30).coalesced);
}

TEST_CASE("walk_iterate") {
  const Window w(-1, -1, 10, 10);
  const auto right = constant_field(w, Arrow::Right);
  const auto trace = walk_iterate(right, {0, 0}, 5);
  REQUIRE(trace.steps.size() == 6);
  for (std::int64_t i = 0; i <= 5; ++i) CHECK(trace.steps[static_cast<std::size_t>(i)] == LatticePoint{i, 0});
  CHECK_FALSE(trace.exited_window);

  const auto still = walk_iterate(right, {3, 3}, 0);
  CHECK(still.steps == std::vector<LatticePoint>{{3, 3}});

  const auto alt = striped_field(alternating_bits(-2, 23), w);
  const auto zig = walk_iterate(alt, {0, 0}, 4);
  CHECK(zig.steps == std::vector<LatticePoint>{{0, 0}, {1, 0}, {1, 1}, {2, 1}, {2, 2}});
}

TEST_CASE("walk_iterate stops at the window edge") {
  const auto right = constant_field(Window(0, 0, 4, 0), Arrow::Right);
  const auto trace = walk_iterate(right, {2, 0}, 10);
  CHECK(trace.exited_window);
  CHECK(trace.completed_steps() == 2);
  CHECK(trace.steps.back() == LatticePoint{4, 0});
}

TEST_CASE("walks are compatible") {
  const Window w(0, 0, 30, 30);
  const auto field = iid_field(w, 0.5, 77);
  for (std::int64_t i = 0; i < 50; ++i) {
    const LatticePoint z{i % 10, (i * 7) % 10};
    const auto full = walk_iterate(field, z, 12);
    const auto tail = walk_iterate(field, z + displacement(field.at(z)), 11);
    CHECK(std::vector<LatticePoint>(full.steps.begin() + 1, full.steps.end()) == tail.steps);
  }
}

TEST_CASE("coalesce_within") {
  const Window w(-1, -1, 30, 5);
  const auto right = constant_field(w, Arrow::Right);
  const auto v = coalesce_within(right, {0, 0}, {3, 0}, 10);
  CHECK(v.coalesced);
  CHECK(v.point == LatticePoint{3, 0});
  CHECK_FALSE(v.truncated);
  for (std::size_t h : {0u, 1u, 5u, 20u}) CHECK_FALSE(coalesce_within(right, {0, 0}, {0, 1}, h).coalesced);
  CHECK(coalesce_within(right, {2, 0}, {2, 0}, 0).coalesced);
}

TEST_CASE("coalescence is monotone in the horizon and symmetric") {
  const Window w(0, 0, 80, 80);
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto field = iid_field(w, 0.5, s);
    bool before = false;
    for (std::size_t h = 0; h <= 60; h += 5) {
      const auto v = coalesce_within(field, {2, 2}, {4, 1}, h);
      CHECK(v.coalesced == coalesce_within(field, {4, 1}, {2, 2}, h).coalesced);
      if (before) CHECK(v.coalesced);
      before = v.coalesced;
    }
  }
}

TEST_CASE("biinfinite_depth") {
  const Window w(-5, -5, 5, 5);
  const auto right = constant_field(w, Arrow::Right);
  CHECK(biinfinite_depth(right, {0, 0}, 5).depth == 5);
  const auto capped = biinfinite_depth(right, {0, 0}, 20);
  CHECK(capped.depth == 5);
  CHECK(capped.truncated);

  // Neither candidate ancestor points at z.
  std::vector<Arrow> arrows(w.size(), Arrow::Right);
  arrows[w.index({-1, 0})] = Arrow::Up;
  arrows[w.index({0, -1})] = Arrow::Right;
  const auto none = biinfinite_depth(ArrowField(w, arrows), {0, 0}, 5);
  CHECK(none.depth == 0);
  CHECK_FALSE(none.truncated);

  const Window big(0, 0, 20, 20);
  const auto striped = striped_field(random_diagonal_bits(0, 41, 0.5, 3), big);
  CHECK(biinfinite_depth(striped, {10, 10}, 10).depth == 10);
}

TEST_CASE("rotated rectangle geometry") {
  const RotatedRect r(4, {0, 0});
  CHECK(r.sites().size() == 20);
  std::set<LatticePoint> unique(r.sites().begin(), r.sites().end());
  CHECK(unique.size() == 20);
  for (std::int64_t i = 0; i < 4; ++i) CHECK(r.layer_of(LatticePoint{i, i}) == i);
  const Window b = r.bounding_window();
  for (const auto& z : r.sites()) CHECK(b.contains(z));
}

TEST_CASE("trajectory reconstruction") {
  const RotatedRect rect(4, {0, 0});
  const Window w = rect.bounding_window();
  const auto right = constant_field(w, Arrow::Right);
  const std::vector<Arrow> ones(4, Arrow::Right);
  CHECK(reconstruct_from_trajectory(ones, rect) == restrict_to(right, rect));

  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto f = striped_sampler(0.5)(w, s);
    CHECK(reconstruct_from_trajectory(read_trajectory_bits(f, rect), rect) == restrict_to(f, rect));
  }
}

TEST_CASE("reconstruction is injective for small L") {
  for (std::int64_t L : {2, 4, 6}) {
    const RotatedRect rect(L, {0, 0});
    std::set<std::string> seen;
    for (unsigned mask = 0; mask < (1u << L); ++mask) {
      std::vector<Arrow> bits;
      for (std::int64_t i = 0; i < L; ++i) bits.push_back(((mask >> i) & 1u) ? Arrow::Up : Arrow::Right);
      seen.insert(reconstruct_from_trajectory(bits, rect).serialize());
    }
    CHECK(seen.size() == (std::size_t{1} << L));
  }
}

TEST_CASE("count_window_configs") {
  const RotatedRect rect(4, {0, 0});
  const auto striped = count_window_configs(striped_sampler(0.5), rect, 10000, 1);
  CHECK(striped <= 16);
  CHECK(striped == 16);
  CHECK(count_window_configs(constant_sampler(Arrow::Up), rect, 1000, 1) == 1);
  CHECK(count_window_configs(iid_sampler(0.5), rect, 10000, 1) > 1000);
  CHECK(count_window_configs(iid_sampler(0.5), rect, 2000, 1, 4) ==
        count_window_configs(iid_sampler(0.5), rect, 2000, 1, 1));
}

TEST_CASE("field text round-trip") {
  const Window w(-2, 3, 4, 6);
  const auto f = iid_field(w, 0.4, 8);
  CHECK(parse_field(serialize_field(f)) == f);
  CHECK_THROWS(parse_field("0 0 1 1\nRR\nR\n"));
}
