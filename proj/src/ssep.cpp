#include "stirwalk/ssep.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "stirwalk/format.hpp"

namespace stirwalk::ssep {

StirringRealization::StirringRealization(std::uint64_t seed, double p, Topology topology, std::int64_t width, Time t0,
                                         Time t1)
    : seed_(seed), p_(p), topology_(topology), width_(width), t0_(t0), t1_(t1) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("firing probability must lie in [0, 1)");
  if (t1 < t0) throw std::invalid_argument("realization time range is reversed");
  cut_ = BernoulliCut(p);
}

StirringRealization StirringRealization::torus(std::uint64_t seed, double p, std::int64_t width, Time t0, Time t1) {
  if (width < 2) throw std::invalid_argument("torus width must be at least 2");
  return {seed, p, Topology::Torus, width, t0, t1};
}

StirringRealization StirringRealization::line(std::uint64_t seed, double p, Time t0, Time t1) {
  return {seed, p, Topology::Line, 0, t0, t1};
}

Site StirringRealization::wrap(Site x) const noexcept {
  if (topology_ == Topology::Line) return x;
  const Site r = x % width_;
  return r < 0 ? r + width_ : r;
}

bool StirringRealization::fires(Site edge, Time t) const noexcept {
  return cut_(counter_hash(seed_, Stream::Fire, wrap(edge), t));
}

std::uint64_t StirringRealization::tiekey(Site edge, Time t) const noexcept {
  return counter_hash(seed_, Stream::TieKey, wrap(edge), t);
}

namespace {

struct Candidate {
  std::uint64_t key;
  Site edge;
  bool operator<(const Candidate& o) const noexcept { return key != o.key ? key < o.key : edge < o.edge; }
};

}  // namespace

bool StirringRealization::stirs(Site edge, Time t) const {
  const Site e = wrap(edge);
  if (!fires(e, t)) return false;
  Candidate best{tiekey(e, t), e};
  if (topology_ == Topology::Torus) {
    std::int64_t len = 1;
    for (Site j = wrap(e - 1); len < width_ && fires(j, t); j = wrap(j - 1), ++len) {
      best = std::min(best, Candidate{tiekey(j, t), j});
    }
    if (len < width_) {
      for (Site j = wrap(e + 1); fires(j, t); j = wrap(j + 1)) best = std::min(best, Candidate{tiekey(j, t), j});
    }
  } else {
    for (Site j = e - 1; fires(j, t); --j) best = std::min(best, Candidate{tiekey(j, t), j});
    for (Site j = e + 1; fires(j, t); ++j) best = std::min(best, Candidate{tiekey(j, t), j});
  }
  return best.edge == e;
}

Site StirringRealization::move(Site x, Time t) const {
  const Site s = wrap(x);
  if (stirs(s, t)) return wrap(s + 1);
  if (stirs(s - 1, t)) return wrap(s - 1);
  return s;
}

Matching winners_at(const StirringRealization& real, Time t) {
  if (real.topology() != Topology::Torus) throw std::invalid_argument("whole-ring matching needs a torus");
  const std::int64_t w = real.width();
  std::vector<std::uint8_t> fired(static_cast<std::size_t>(w));
  Site unfired = -1;
  for (Site e = 0; e < w; ++e) {
    fired[static_cast<std::size_t>(e)] = real.fires(e, t) ? 1 : 0;
    if (!fired[static_cast<std::size_t>(e)]) unfired = e;
  }
  Matching m;
  if (unfired < 0) {
    Candidate best{real.tiekey(0, t), 0};
    for (Site e = 1; e < w; ++e) best = std::min(best, Candidate{real.tiekey(e, t), e});
    m.edges.push_back(best.edge);
    return m;
  }
  // Walk once around the ring starting just after an unfired edge, so no run
  // is split.
  std::optional<Candidate> best;
  for (std::int64_t i = 1; i <= w; ++i) {
    const Site e = (unfired + i) % w;
    if (fired[static_cast<std::size_t>(e)]) {
      const Candidate c{real.tiekey(e, t), e};
      if (!best || c < *best) best = c;
    } else if (best) {
      m.edges.push_back(best->edge);
      best.reset();
    }
  }
  std::sort(m.edges.begin(), m.edges.end());
  return m;
}

Matching winners_at(const StirringRealization& real, Time t, Site lo, Site hi) {
  if (real.topology() == Topology::Torus) {
    if (lo < 0 || hi > real.width() || lo > hi) throw std::out_of_range("edge range outside torus");
    Matching all = winners_at(real, t);
    std::erase_if(all.edges, [&](Site e) { return e < lo || e >= hi; });
    return all;
  }
  Matching m;
  Site e = lo;
  if (lo < hi && real.fires(lo, t)) {
    while (real.fires(e - 1, t)) --e;
  }
  while (e < hi) {
    if (!real.fires(e, t)) {
      ++e;
      continue;
    }
    Candidate best{real.tiekey(e, t), e};
    while (real.fires(e + 1, t)) {
      ++e;
      best = std::min(best, Candidate{real.tiekey(e, t), e});
    }
    if (best.edge >= lo && best.edge < hi) m.edges.push_back(best.edge);
    ++e;
  }
  return m;
}

ParticleRow::ParticleRow(std::vector<std::uint8_t> occupancy, bool periodic, Site origin)
    : occ_(std::move(occupancy)), periodic_(periodic), origin_(periodic ? 0 : origin) {
  if (occ_.empty()) throw std::invalid_argument("particle row must have at least one site");
  if (periodic_ && occ_.size() < 2) throw std::invalid_argument("periodic row needs at least 2 sites");
  for (auto& v : occ_) {
    if (v > 1) throw std::invalid_argument("occupancy values must be 0 or 1");
  }
}

ParticleRow ParticleRow::from_string(std::string_view bits, bool periodic, Site origin) {
  std::vector<std::uint8_t> occ;
  occ.reserve(bits.size());
  for (char c : bits) {
    if (c != '0' && c != '1') throw std::invalid_argument(std::string("row character '") + c + "'");
    occ.push_back(c == '1' ? 1 : 0);
  }
  return ParticleRow(std::move(occ), periodic, origin);
}

std::size_t ParticleRow::count() const noexcept {
  return static_cast<std::size_t>(std::count(occ_.begin(), occ_.end(), std::uint8_t{1}));
}

std::string ParticleRow::to_string() const {
  std::string s(occ_.size(), '0');
  for (std::size_t i = 0; i < occ_.size(); ++i) {
    if (occ_[i]) s[i] = '1';
  }
  return s;
}

ParticleRow bernoulli_row(std::int64_t width, double rho, std::uint64_t seed, bool periodic, Site origin) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("density must lie in [0, 1]");
  if (width < 1) throw std::invalid_argument("row width must be positive");
  const BernoulliCut cut(rho);
  const Site base = periodic ? 0 : origin;
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(width));
  for (std::int64_t i = 0; i < width; ++i) {
    occ[static_cast<std::size_t>(i)] = cut(counter_hash(seed, Stream::Occupancy, base + i, 0)) ? 1 : 0;
  }
  return ParticleRow(std::move(occ), periodic, origin);
}

namespace {

void check_disjoint(std::vector<Site> edges, bool periodic, std::int64_t width) {
  std::sort(edges.begin(), edges.end());
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i] - edges[i - 1] < 2) throw std::invalid_argument("matching edges overlap");
  }
  if (periodic && edges.size() >= 2 && edges.front() + width - edges.back() < 2) {
    throw std::invalid_argument("matching edges overlap across the ring seam");
  }
}

void apply_in_place(std::vector<std::uint8_t>& occ, const Matching& m, bool periodic, Site origin) {
  const auto w = static_cast<std::int64_t>(occ.size());
  for (Site e : m.edges) {
    if (periodic) {
      std::swap(occ[static_cast<std::size_t>(e)], occ[static_cast<std::size_t>((e + 1) % w)]);
    } else {
      const Site a = e - origin;
      if (a >= 0 && a + 1 < w) std::swap(occ[static_cast<std::size_t>(a)], occ[static_cast<std::size_t>(a + 1)]);
    }
  }
}

void check_block_args(const ParticleRow& initial, const StirringRealization& real, Time t0, Time t1) {
  if (!(t0 < t1)) throw std::invalid_argument("evolution needs t0 < t1");
  if (t0 < real.t0() || t1 > real.t1()) throw std::out_of_range("time range outside the realization");
  if (initial.periodic()) {
    if (real.topology() != Topology::Torus || real.width() != initial.width()) {
      throw std::invalid_argument("periodic row needs a torus realization of the same width");
    }
  } else if (real.topology() != Topology::Line) {
    throw std::invalid_argument("line row needs a line realization");
  }
}

Matching step_matching(const ParticleRow& row, const StirringRealization& real, Time t) {
  if (row.periodic()) return winners_at(real, t);
  return winners_at(real, t, row.origin(), row.origin() + row.width() - 1);
}

}  // namespace

ParticleRow step_row(const ParticleRow& row, const Matching& matching) {
  if (row.periodic()) {
    for (Site e : matching.edges) {
      if (e < 0 || e >= row.width()) throw std::out_of_range("matching edge " + std::to_string(e) + " outside ring");
    }
  }
  check_disjoint(matching.edges, row.periodic(), row.width());
  std::vector<std::uint8_t> occ = row.data();
  apply_in_place(occ, matching, row.periodic(), row.origin());
  return ParticleRow(std::move(occ), row.periodic(), row.origin());
}

SpaceTimeBlock evolve_block(const ParticleRow& initial, const StirringRealization& real, Time t0, Time t1) {
  check_block_args(initial, real, t0, t1);
  SpaceTimeBlock block{t0, t1, {}, real.seed(), real.p()};
  block.rows.reserve(static_cast<std::size_t>(t1 - t0 + 1));
  block.rows.push_back(initial);
  for (Time t = t0; t < t1; ++t) block.rows.push_back(step_row(block.rows.back(), step_matching(initial, real, t)));
  return block;
}

ParticleRow evolve_row(const ParticleRow& initial, const StirringRealization& real, Time t0, Time t1) {
  check_block_args(initial, real, t0, t1);
  std::vector<std::uint8_t> occ = initial.data();
  for (Time t = t0; t < t1; ++t) apply_in_place(occ, step_matching(initial, real, t), initial.periodic(), initial.origin());
  return ParticleRow(std::move(occ), initial.periodic(), initial.origin());
}

std::vector<Site> track_forward(const StirringRealization& real, Site x, Time t0, Time t1) {
  if (t1 < t0) throw std::invalid_argument("track_forward needs t0 <= t1");
  if (t0 < real.t0() || t1 > real.t1()) throw std::out_of_range("time range outside the realization");
  std::vector<Site> path;
  path.reserve(static_cast<std::size_t>(t1 - t0 + 1));
  Site cur = real.wrap(x);
  path.push_back(cur);
  for (Time t = t0; t < t1; ++t) {
    cur = real.move(cur, t);
    path.push_back(cur);
  }
  return path;
}

std::vector<Site> track_backward(const StirringRealization& real, Site y, Time t, Time t0) {
  if (t < t0) throw std::invalid_argument("track_backward needs t0 <= t");
  if (t0 < real.t0() || t > real.t1()) throw std::out_of_range("time range outside the realization");
  std::vector<Site> path;
  path.reserve(static_cast<std::size_t>(t - t0 + 1));
  Site cur = real.wrap(y);
  path.push_back(cur);
  // Each step is an involution on sites, so it is its own inverse.
  for (Time s = t; s > t0; --s) {
    cur = real.move(cur, s - 1);
    path.push_back(cur);
  }
  return path;
}

std::vector<Step> trajectory_symbols(const std::vector<Site>& path, std::int64_t width) {
  std::vector<Step> out;
  if (path.size() < 2) return out;
  out.reserve(path.size() - 1);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    Site d = path[i + 1] - path[i];
    if (width > 2) {
      if (d == width - 1) d = -1;
      if (d == -(width - 1)) d = 1;
    }
    if (d < -1 || d > 1) {
      throw std::invalid_argument("path jumps " + std::to_string(d) + " sites at step " + std::to_string(i));
    }
    out.push_back(static_cast<Step>(d));
  }
  return out;
}

std::vector<Site> compose_path(Site start, const std::vector<Step>& symbols) {
  std::vector<Site> path{start};
  path.reserve(symbols.size() + 1);
  for (Step s : symbols) path.push_back(path.back() + static_cast<Site>(s));
  return path;
}

SharedEdge shared_edge_draw(std::uint64_t seed, double p, Site edge, Time t) {
  const std::uint64_t u = counter_hash(seed, Stream::Coupling, edge, t);
  if (BernoulliCut(p)(u)) return SharedEdge::AlphaJumps;
  if (BernoulliCut(2 * p)(u)) return SharedEdge::BetaJumps;
  return SharedEdge::Still;
}

CouplingState coupled_step(const StirringRealization& real, const CouplingState& s, Time t) {
  CouplingState next;
  next.common.reserve(s.common.size());
  for (Site c : s.common) next.common.push_back(real.move(c, t));
  std::sort(next.common.begin(), next.common.end());

  const Site d = s.beta - s.alpha;
  if (d == 1 || d == -1) {
    const Site e = std::min(s.alpha, s.beta);
    if (!real.fires(e - 1, t) && !real.fires(e + 1, t)) {
      switch (shared_edge_draw(real.seed(), real.p(), e, t)) {
        case SharedEdge::AlphaJumps: next.alpha = next.beta = s.beta; break;
        case SharedEdge::BetaJumps: next.alpha = next.beta = s.alpha; break;
        case SharedEdge::Still:
          next.alpha = s.alpha;
          next.beta = s.beta;
          break;
      }
      return next;
    }
  }
  next.alpha = real.move(s.alpha, t);
  next.beta = real.move(s.beta, t);
  return next;
}

CouplingRun coupled_evolve(const CouplingState& start, double p, std::uint64_t seed, Time T,
                           const CouplingOptions& options) {
  if (!(p >= 0.0 && p < 0.5)) throw std::invalid_argument("coupling needs 0 <= p < 1/2");
  if (T < 0) throw std::invalid_argument("coupling horizon must be nonnegative");
  if (start.alpha == start.beta) throw std::invalid_argument("alpha and beta must start apart");
  CouplingState state = start;
  std::sort(state.common.begin(), state.common.end());
  if (std::adjacent_find(state.common.begin(), state.common.end()) != state.common.end()) {
    throw std::invalid_argument("common set has repeated sites");
  }
  if (std::binary_search(state.common.begin(), state.common.end(), state.alpha) ||
      std::binary_search(state.common.begin(), state.common.end(), state.beta)) {
    throw std::invalid_argument("alpha and beta must lie outside the common set");
  }

  const auto real = StirringRealization::line(seed, p, 0, T);
  CouplingRun run;
  if (options.record_path) run.path.push_back(state);
  for (Time t = 0; t < T; ++t) {
    state = coupled_step(real, state, t);
    if (options.record_path) run.path.push_back(state);
    if (!run.merge_time && state.merged()) {
      run.merge_time = t + 1;
      if (options.stop_at_merge) break;
    }
  }
  run.final_state = state;
  return run;
}

std::string serialize_block(const SpaceTimeBlock& block) {
  std::ostringstream out;
  const std::int64_t w = block.rows.empty() ? 0 : block.rows.front().width();
  out << w << ' ' << block.t0 << ' ' << block.t1 << ' ' << format_double(block.p) << ' ' << block.seed << '\n';
  for (auto it = block.rows.rbegin(); it != block.rows.rend(); ++it) out << it->to_string() << '\n';
  return out.str();
}

std::string trajectory_csv(const std::vector<Site>& path, Time t0, std::int64_t width) {
  const std::vector<Step> symbols = trajectory_symbols(path, width);
  std::ostringstream out;
  out << "t,site,symbol\n";
  for (std::size_t i = 0; i < path.size(); ++i) {
    out << t0 + static_cast<Time>(i) << ',' << path[i] << ',';
    if (i < symbols.size()) out << static_cast<int>(symbols[i]);
    out << '\n';
  }
  return out.str();
}

}  // namespace stirwalk::ssep
