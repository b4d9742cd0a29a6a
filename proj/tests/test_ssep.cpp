#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>

#include "stirwalk/ssep.hpp"

using namespace stirwalk;
using namespace stirwalk::ssep;

namespace {

// Reference winner test: scan the maximal fired run containing e.
bool stirs_reference(const StirringRealization& real, Site e, Time t) {
  if (!real.fires(e, t)) return false;
  const std::int64_t W = real.width();
  std::vector<Site> run{e};
  for (Site f = e - 1; real.fires(f, t) && (W == 0 || static_cast<std::int64_t>(run.size()) < W); --f) run.push_back(f);
  for (Site f = e + 1; real.fires(f, t) && (W == 0 || static_cast<std::int64_t>(run.size()) < W); ++f) run.push_back(f);
  Site best = run.front();
  for (Site f : run) {
    const auto kf = real.tiekey(f, t), kb = real.tiekey(best, t);
    if (kf < kb || (kf == kb && real.wrap(f) < real.wrap(best))) best = f;
  }
  return real.wrap(best) == real.wrap(e);
}

}  // namespace

TEST_CASE("no firing means no matching") {
  const auto real = StirringRealization::torus(1, 0.0, 16, 0, 10);
  for (Time t = 0; t < 10; ++t) CHECK(winners_at(real, t).empty());
}

TEST_CASE("winners follow the run rule") {
  for (double p : {0.3, 0.6, 0.95}) {
    const auto torus = StirringRealization::torus(3, p, 9, 0, 200);
    const auto line = StirringRealization::line(3, p, 0, 200);
    for (Time t = 0; t < 200; ++t) {
      for (Site e = 0; e < 9; ++e) CHECK(torus.stirs(e, t) == stirs_reference(torus, e, t));
      for (Site e = -20; e < 20; ++e) CHECK(line.stirs(e, t) == stirs_reference(line, e, t));
    }
  }
}

TEST_CASE("single fired edge and two-edge runs") {
  const auto real = StirringRealization::line(17, 0.3, 0, 500);
  int singles = 0, pairs = 0;
  for (Time t = 0; t < 500; ++t) {
    for (Site e = 0; e < 50; ++e) {
      const bool f = real.fires(e, t), l = real.fires(e - 1, t), r = real.fires(e + 1, t);
      if (f && !l && !r) {
        CHECK(real.stirs(e, t));
        ++singles;
      }
      if (f && r && !l && !real.fires(e + 2, t)) {
        CHECK(real.stirs(e, t) != real.stirs(e + 1, t));
        CHECK(real.stirs(e, t) == (real.tiekey(e, t) < real.tiekey(e + 1, t)));
        ++pairs;
      }
    }
  }
  CHECK(singles > 100);
  CHECK(pairs > 10);
}

TEST_CASE("matchings are vertex disjoint") {
  for (std::int64_t W : {2, 3, 5, 8, 33}) {
    const auto real = StirringRealization::torus(W, 0.9, W, 0, 300);
    for (Time t = 0; t < 300; ++t) {
      const auto m = winners_at(real, t);
      std::set<Site> sites;
      for (Site e : m.edges) {
        CHECK(sites.insert(e).second);
        CHECK(sites.insert((e + 1) % W).second);
      }
      // A fully fired ring is one run with one winner.
      bool all = true;
      for (Site e = 0; e < W; ++e) all = all && real.fires(e, t);
      if (all) CHECK(m.edges.size() == 1);
    }
  }
  const auto line = StirringRealization::line(5, 0.9, 0, 100);
  for (Time t = 0; t < 100; ++t) {
    const auto m = winners_at(line, t, -30, 30);
    for (std::size_t i = 1; i < m.edges.size(); ++i) CHECK(m.edges[i] >= m.edges[i - 1] + 2);
  }
}

TEST_CASE("realization argument checks") {
  CHECK_THROWS_AS(StirringRealization::torus(1, 1.0, 8, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(StirringRealization::torus(1, -0.1, 8, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(StirringRealization::torus(1, 0.3, 1, 0, 1), std::invalid_argument);
}

TEST_CASE("step_row examples") {
  const auto row = ParticleRow::from_string("101");
  CHECK(step_row(row, Matching{{0}}).to_string() == "011");
  CHECK(step_row(row, Matching{{2}}).to_string() == "101");
  const auto empty = ParticleRow::from_string("000000");
  const auto full = ParticleRow::from_string("111111");
  for (const Matching& m : {Matching{{0, 2, 4}}, Matching{{1, 3, 5}}, Matching{{5}}}) {
    CHECK(step_row(empty, m) == empty);
    CHECK(step_row(full, m) == full);
  }
  CHECK_THROWS_AS(step_row(ParticleRow::from_string("1000"), Matching{{0, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(step_row(ParticleRow::from_string("1000"), Matching{{4}}), std::out_of_range);
  CHECK_THROWS(ParticleRow::from_string("10a"));
}

TEST_CASE("evolve_block") {
  const auto frozen = StirringRealization::torus(2, 0.0, 12, 0, 20);
  const auto init = bernoulli_row(12, 0.5, 7);
  for (const auto& r : evolve_block(init, frozen, 0, 20).rows) CHECK(r == init);

  const auto small = StirringRealization::torus(9, 0.5, 3, 0, 1);
  const auto row = ParticleRow::from_string("101");
  const auto block = evolve_block(row, small, 0, 1);
  REQUIRE(block.rows.size() == 2);
  CHECK(block.rows[1] == step_row(row, winners_at(small, 0)));

  const auto real = StirringRealization::torus(4, 0.3, 64, 0, 1000);
  const auto start = bernoulli_row(64, 0.5, 8);
  const auto big = evolve_block(start, real, 0, 1000);
  for (const auto& r : big.rows) CHECK(r.count() == start.count());
  CHECK(evolve_row(start, real, 0, 1000) == big.rows.back());
  CHECK(big.at(1000) == big.rows.back());

  CHECK_THROWS(evolve_block(bernoulli_row(10, 0.5, 1), real, 0, 10));
  CHECK_THROWS(evolve_block(start, real, 5, 5));
  CHECK_THROWS(evolve_block(start, real, 0, 1001));
}

TEST_CASE("line evolution has finite speed") {
  const Time T = 30;
  const auto real = StirringRealization::line(21, 0.4, 0, T);
  const auto narrow = evolve_row(bernoulli_row(40 + 2 * T, 0.5, 3, false, -T), real, 0, T);
  const auto wide = evolve_row(bernoulli_row(40 + 6 * T, 0.5, 3, false, -3 * T), real, 0, T);
  for (std::int64_t x = 0; x < 40; ++x) CHECK(narrow.occupied(x + T) == wide.occupied(x + 3 * T));
}

TEST_CASE("particles ride the stirring paths") {
  const auto real = StirringRealization::torus(12, 0.3, 16, 0, 50);
  const auto init = bernoulli_row(16, 0.5, 13);
  const auto final_row = evolve_row(init, real, 0, 50);
  for (Site x = 0; x < 16; ++x) {
    const auto path = track_forward(real, x, 0, 50);
    REQUIRE(path.size() == 51);
    CHECK(path.front() == x);
    CHECK(final_row.occupied(path.back()) == init.occupied(x));
  }
}

TEST_CASE("track_forward basics") {
  const auto frozen = StirringRealization::line(1, 0.0, 0, 20);
  for (Site s : track_forward(frozen, 5, 0, 20)) CHECK(s == 5);
  for (Site s : track_backward(frozen, 5, 20, 0)) CHECK(s == 5);

  const auto real = StirringRealization::line(33, 0.3, 0, 100);
  const auto path = track_forward(real, 0, 0, 100);
  for (Time t = 0; t < 100; ++t) {
    const auto i = static_cast<std::size_t>(t);
    CHECK(path[i + 1] == real.move(path[i], t));
    if (real.stirs(path[i], t)) CHECK(path[i + 1] == path[i] + 1);
  }
}

TEST_CASE("forward and backward tracking agree") {
  const auto real = StirringRealization::torus(5, 0.4, 16, 0, 8);
  for (Time t = 1; t <= 8; ++t) {
    for (Site x = 0; x < 16; ++x) {
      const auto fwd = track_forward(real, x, 0, t);
      const auto back = track_backward(real, fwd.back(), t, 0);
      REQUIRE(back.size() == fwd.size());
      for (std::size_t i = 0; i < fwd.size(); ++i) CHECK(back[i] == fwd[fwd.size() - 1 - i]);
    }
  }
}

TEST_CASE("stirring increments are symmetric") {
  const int walkers = 400;
  const Time T = 10000;
  double sum = 0, sq = 0;
  for (int i = 0; i < walkers; ++i) {
    const auto real = StirringRealization::line(1000 + static_cast<std::uint64_t>(i), 0.3, 0, T);
    const double d = static_cast<double>(track_forward(real, 0, 0, T).back());
    sum += d;
    sq += d * d;
  }
  const double mean = sum / walkers;
  const double sd = std::sqrt(sq / walkers - mean * mean);
  CHECK(std::abs(mean) < 5 * sd / std::sqrt(walkers));
}

TEST_CASE("trajectory symbols") {
  CHECK(trajectory_symbols({4, 4, 4}) == std::vector<Step>{Step::Stay, Step::Stay});
  CHECK(trajectory_symbols({4, 5, 4}) == std::vector<Step>{Step::Right, Step::Left});
  CHECK(trajectory_symbols({7, 0, 7}, 8) == std::vector<Step>{Step::Right, Step::Left});
  CHECK_THROWS_AS(trajectory_symbols({0, 2}), std::invalid_argument);
  const auto real = StirringRealization::line(2, 0.3, 0, 300);
  const auto path = track_forward(real, 3, 0, 300);
  CHECK(compose_path(3, trajectory_symbols(path)) == path);
  CHECK(trajectory_csv({4, 5, 4}, 10) == "t,site,symbol\n10,4,1\n11,5,-1\n12,4,\n");
}

TEST_CASE("coupling preconditions and frozen case") {
  CHECK_THROWS_AS(coupled_evolve({{}, 3, 3}, 0.3, 1, 10), std::invalid_argument);
  CHECK_THROWS_AS(coupled_evolve({{}, 0, 2}, 0.5, 1, 10), std::invalid_argument);
  CHECK_THROWS_AS(coupled_evolve({{1}, 1, 2}, 0.3, 1, 10), std::invalid_argument);
  const auto frozen = coupled_evolve({{5, 9}, 0, 2}, 0.0, 1, 100);
  CHECK_FALSE(frozen.merge_time);
  for (const auto& s : frozen.path) CHECK(s == CouplingState{{5, 9}, 0, 2});
}

TEST_CASE("coupling matches ordinary stirring away from the shared edge") {
  const auto real = StirringRealization::line(8, 0.3, 0, 2000);
  CouplingState s{{-3, 6}, 0, 2};
  for (Time t = 0; t < 2000 && !s.merged(); ++t) {
    const auto next = coupled_step(real, s, t);
    for (std::size_t i = 0; i < s.common.size(); ++i) {
      CHECK(std::find(next.common.begin(), next.common.end(), real.move(s.common[i], t)) != next.common.end());
    }
    const bool shared = std::abs(s.alpha - s.beta) == 1;
    const Site e = std::min(s.alpha, s.beta);
    if (!shared || real.fires(e - 1, t) || real.fires(e + 1, t)) {
      CHECK(next.alpha == real.move(s.alpha, t));
      CHECK(next.beta == real.move(s.beta, t));
    } else {
      const auto draw = shared_edge_draw(real.seed(), real.p(), e, t);
      CHECK(next.merged() == (draw != SharedEdge::Still));
    }
    s = next;
  }
}

TEST_CASE("shared edge draw frequencies") {
  int a = 0, b = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto d = shared_edge_draw(4, 0.3, i, 0);
    a += d == SharedEdge::AlphaJumps ? 1 : 0;
    b += d == SharedEdge::BetaJumps ? 1 : 0;
  }
  const double sigma = std::sqrt(n * 0.3 * 0.7);
  CHECK(std::abs(a - 0.3 * n) < 5 * sigma);
  CHECK(std::abs(b - 0.3 * n) < 5 * sigma);
}

TEST_CASE("coupled pairs merge") {
  int merged = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto run = coupled_evolve({{}, 0, 2}, 0.3, s, 100000, {false, true});
    if (run.merge_time) {
      ++merged;
      CHECK(run.final_state.merged());
    }
  }
  CHECK(merged >= 90);
}

TEST_CASE("block serialization") {
  const auto real = StirringRealization::torus(1, 0.3, 4, 0, 2);
  const auto block = evolve_block(ParticleRow::from_string("1100"), real, 0, 2);
  const auto text = serialize_block(block);
  CHECK(text.rfind("4 0 2 0.3 1\n", 0) == 0);
  CHECK(text.substr(text.size() - 5) == "1100\n");
}

TEST_CASE("bernoulli rows") {
  const auto row = bernoulli_row(100000, 0.3, 5);
  const double sigma = std::sqrt(100000 * 0.3 * 0.7);
  CHECK(std::abs(static_cast<double>(row.count()) - 30000) < 5 * sigma);
  CHECK(bernoulli_row(10, 1.0, 5).count() == 10);
  CHECK(bernoulli_row(10, 0.0, 5).count() == 0);
  // A line row reads the same coordinates whatever its origin.
  const auto a = bernoulli_row(20, 0.5, 9, false, 0);
  const auto b = bernoulli_row(30, 0.5, 9, false, -10);
  for (std::int64_t i = 0; i < 20; ++i) CHECK(a.occupied(i) == b.occupied(i + 10));
}
