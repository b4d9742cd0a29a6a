#pragma once

// Discrete-time symmetric simple exclusion with tie-breaking.
//
// Edge x joins sites x and x+1 (mod W on a torus). At each time step every
// edge fires independently with probability p; within every maximal run of
// fired edges exactly one edge, the one with the smallest tie key, stirs and
// swaps its endpoints. All firing bits and keys are pure functions of
// (seed, edge, time), so a realization can be queried in any order.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stirwalk/rng.hpp"

namespace stirwalk::ssep {

using Site = std::int64_t;
using Time = std::int64_t;

enum class Topology { Torus, Line };

class StirringRealization {
 public:
  /// Periodic ring of `width` sites (width >= 2).
  static StirringRealization torus(std::uint64_t seed, double p, std::int64_t width, Time t0, Time t1);
  /// The whole line Z.
  static StirringRealization line(std::uint64_t seed, double p, Time t0, Time t1);

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] double p() const noexcept { return p_; }
  [[nodiscard]] Topology topology() const noexcept { return topology_; }
  [[nodiscard]] std::int64_t width() const noexcept { return width_; }
  [[nodiscard]] Time t0() const noexcept { return t0_; }
  [[nodiscard]] Time t1() const noexcept { return t1_; }
  /// Steps t in [t0, t1) are defined; step t maps time t to t + 1.
  [[nodiscard]] bool has_step(Time t) const noexcept { return t >= t0_ && t < t1_; }

  /// Canonical edge label: reduced mod W on the torus, unchanged on the line.
  [[nodiscard]] Site wrap(Site x) const noexcept;

  [[nodiscard]] bool fires(Site edge, Time t) const noexcept;
  [[nodiscard]] std::uint64_t tiekey(Site edge, Time t) const noexcept;
  /// Fires and wins the tie-break of its maximal fired run.
  [[nodiscard]] bool stirs(Site edge, Time t) const;
  /// Position at t + 1 of the stirring particle sitting at x at time t.
  [[nodiscard]] Site move(Site x, Time t) const;

 private:
  StirringRealization(std::uint64_t seed, double p, Topology topology, std::int64_t width, Time t0, Time t1);

  std::uint64_t seed_;
  double p_;
  BernoulliCut cut_;
  Topology topology_;
  std::int64_t width_;
  Time t0_, t1_;
};

/// Sorted, pairwise vertex-disjoint stirred edges.
struct Matching {
  std::vector<Site> edges;

  [[nodiscard]] bool empty() const noexcept { return edges.empty(); }
  friend bool operator==(const Matching&, const Matching&) = default;
};

/// Stirred edges at time t whose label lies in [lo, hi). On the torus the range
/// must lie within [0, W). On the line, runs crossing the range ends are
/// resolved with their full extent.
Matching winners_at(const StirringRealization& real, Time t, Site lo, Site hi);
/// Every stirred edge of a torus at time t.
Matching winners_at(const StirringRealization& real, Time t);

class ParticleRow {
 public:
  /// periodic: a ring of occupancy.size() sites. Otherwise the sites
  /// origin .. origin + size - 1 of the line.
  explicit ParticleRow(std::vector<std::uint8_t> occupancy, bool periodic = true, Site origin = 0);
  static ParticleRow from_string(std::string_view bits, bool periodic = true, Site origin = 0);

  [[nodiscard]] std::int64_t width() const noexcept { return static_cast<std::int64_t>(occ_.size()); }
  [[nodiscard]] bool periodic() const noexcept { return periodic_; }
  [[nodiscard]] Site origin() const noexcept { return origin_; }
  /// Occupancy of the i-th site of the row (0-based, from the origin).
  [[nodiscard]] bool occupied(std::int64_t i) const noexcept { return occ_[static_cast<std::size_t>(i)] != 0; }
  [[nodiscard]] const std::vector<std::uint8_t>& data() const noexcept { return occ_; }
  [[nodiscard]] std::size_t count() const noexcept;
  [[nodiscard]] std::string to_string() const;

  friend bool operator==(const ParticleRow&, const ParticleRow&) = default;

 private:
  std::vector<std::uint8_t> occ_;
  bool periodic_;
  Site origin_;
};

/// Product Bernoulli(rho) row; site i uses coordinate origin + i.
ParticleRow bernoulli_row(std::int64_t width, double rho, std::uint64_t seed, bool periodic = true, Site origin = 0);

/// Swaps occupancy across every matching edge. Periodic rows accept edges in
/// [0, W). Line rows swap edges with both endpoints inside and ignore edges
/// reaching outside. Throws std::invalid_argument on overlapping edges and
/// std::out_of_range on torus edges out of range.
ParticleRow step_row(const ParticleRow& row, const Matching& matching);

struct SpaceTimeBlock {
  Time t0 = 0;
  Time t1 = 0;
  std::vector<ParticleRow> rows;  // rows[i] is the configuration at time t0 + i
  std::uint64_t seed = 0;
  double p = 0;

  [[nodiscard]] const ParticleRow& at(Time t) const { return rows.at(static_cast<std::size_t>(t - t0)); }
};

/// rows[t + 1] = step_row(rows[t], winners_at(real, t, ...)) for t in [t0, t1).
/// A periodic row needs a torus of the same width. A line row evolves with the
/// matching restricted to its inner edges, so sites within (t1 - t0) of either
/// end may be affected by the cut; use a buffer that wide for boundary-free data.
SpaceTimeBlock evolve_block(const ParticleRow& initial, const StirringRealization& real, Time t0, Time t1);
/// Same evolution keeping only the final row.
ParticleRow evolve_row(const ParticleRow& initial, const StirringRealization& real, Time t0, Time t1);

/// Z_x(t0), ..., Z_x(t1).
std::vector<Site> track_forward(const StirringRealization& real, Site x, Time t0, Time t1);
/// M_{y,t}(t), M_{y,t}(t - 1), ..., M_{y,t}(t0): the backward path from (y, t).
std::vector<Site> track_backward(const StirringRealization& real, Site y, Time t, Time t0);

enum class Step : std::int8_t { Left = -1, Stay = 0, Right = 1 };

/// Per-step displacement of a path. With width > 0 the path is read on a ring
/// of that width, so a wrap from W-1 to 0 counts as a right step.
/// Throws std::invalid_argument on a jump longer than one site.
std::vector<Step> trajectory_symbols(const std::vector<Site>& path, std::int64_t width = 0);

/// Inverse of trajectory_symbols on the line.
std::vector<Site> compose_path(Site start, const std::vector<Step>& symbols);

struct CouplingState {
  std::vector<Site> common;  // sorted
  Site alpha = 0;
  Site beta = 0;

  [[nodiscard]] bool merged() const noexcept { return alpha == beta; }
  friend bool operator==(const CouplingState&, const CouplingState&) = default;
};

struct CouplingOptions {
  bool record_path = true;
  bool stop_at_merge = false;
};

struct CouplingRun {
  std::vector<CouplingState> path;  // states at times 0..T when recorded
  std::optional<Time> merge_time;
  CouplingState final_state;
};

/// Outcome of the auxiliary variable on an isolated shared edge.
enum class SharedEdge { AlphaJumps, BetaJumps, Still };

/// xi* for edge e at time t: AlphaJumps and BetaJumps with probability p each.
SharedEdge shared_edge_draw(std::uint64_t seed, double p, Site edge, Time t);

/// One step of the coupled pair on the line.
///
/// C, alpha and beta all follow the stirring realization, except when alpha
/// and beta are neighbours across edge e and neither neighbouring edge of e
/// fires. Then the firing of e is replaced by xi*(e): AlphaJumps moves alpha
/// onto beta, BetaJumps moves beta onto alpha, Still leaves both in place.
/// Seen from (C, alpha) alone, e fires with probability p and alpha crosses it,
/// so the marginal law is the ordinary one; the same holds for (C, beta).
CouplingState coupled_step(const StirringRealization& real, const CouplingState& state, Time t);

/// Runs coupled_step for t = 0 .. T-1 on a line realization derived from seed.
/// Throws std::invalid_argument if p >= 1/2, alpha == beta, or alpha/beta lie in C.
CouplingRun coupled_evolve(const CouplingState& start, double p, std::uint64_t seed, Time T,
                           const CouplingOptions& options = {});

// Header "W t0 t1 p seed", then one line per time from t1 down to t0.
std::string serialize_block(const SpaceTimeBlock& block);
// Columns t,site,symbol; symbol is the step taken from t to t + 1 (empty on the last row).
std::string trajectory_csv(const std::vector<Site>& path, Time t0, std::int64_t width = 0);

}  // namespace stirwalk::ssep
