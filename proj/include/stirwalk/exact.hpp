#pragma once

// Exact enumeration on small periodic rings with rational arithmetic.
//
// Configurations, site sets and edge sets of a ring of n sites are bitmasks:
// bit x of a configuration is the occupancy of site x, bit e of an edge set
// is edge e = (e, e + 1 mod n).

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <gmpxx.h>

namespace stirwalk::exact {

using Rational = mpq_class;
using Mask = std::uint32_t;

inline constexpr int kMaxMatchingRing = 12;
inline constexpr int kMaxKernelRing = 8;
inline constexpr int kMaxDualityRing = 6;
inline constexpr int kMaxDualitySteps = 4;
inline constexpr int kMaxPkRing = 20;

/// Accepts "a/b", integers and plain decimals such as "0.3".
Rational parse_rational(std::string_view text);
std::string to_string(const Rational& q);

/// Probability of every stirred-edge set of a ring, indexed by edge mask.
struct MatchingDistribution {
  int n = 0;
  Rational p;
  std::vector<Rational> prob;  // size 2^n; zero off the support

  [[nodiscard]] const Rational& probability(Mask edges) const { return prob.at(edges); }
  [[nodiscard]] Rational total() const;
  /// Edge masks with nonzero probability, ascending.
  [[nodiscard]] std::vector<Mask> support() const;
};

/// 2 <= n <= 12, 0 <= p < 1. Throws std::invalid_argument otherwise.
MatchingDistribution matchings_distribution(int n, const Rational& p);

/// One fired pattern together with one tie-break outcome.
struct FiringOutcome {
  Mask fired;
  Mask stirred;
  Rational weight;
};

/// Every (fired pattern, winner choice) pair with its probability.
std::vector<FiringOutcome> firing_outcomes(int n, const Rational& p);

/// Swaps the bits of `config` across every edge in `edges` (which must be disjoint).
Mask apply_matching(Mask config, Mask edges, int n) noexcept;

/// Probability that a given edge stirs. Equal for every edge.
Rational edge_stir_probability(const MatchingDistribution& dist, int edge);

class RingKernel {
 public:
  using Row = std::vector<std::pair<Mask, Rational>>;  // sorted by target

  RingKernel(int n, Rational p, std::vector<Row> rows) : n_(n), p_(std::move(p)), rows_(std::move(rows)) {}

  [[nodiscard]] int n() const noexcept { return n_; }
  [[nodiscard]] const Rational& p() const noexcept { return p_; }
  [[nodiscard]] std::size_t states() const noexcept { return rows_.size(); }
  [[nodiscard]] const Row& row(Mask from) const { return rows_.at(from); }
  [[nodiscard]] Rational at(Mask from, Mask to) const;
  /// mu K for a measure given as a dense vector over configurations.
  [[nodiscard]] std::vector<Rational> push(const std::vector<Rational>& mu) const;
  /// Sparse triples "eta,eta_next,num,den" with a header line.
  [[nodiscard]] std::string to_csv() const;

 private:
  int n_;
  Rational p_;
  std::vector<Row> rows_;
};

/// 2 <= n <= 8.
RingKernel config_kernel(int n, const Rational& p);

std::vector<Rational> bernoulli_measure(int n, const Rational& rho);
/// Uniform on configurations with exactly k particles.
std::vector<Rational> sector_uniform_measure(int n, int k);

/// max over eta' of |(mu K)(eta') - mu(eta')|.
Rational invariance_deviation(const RingKernel& kernel, const std::vector<Rational>& mu);
Rational bernoulli_invariance_deviation(int n, const Rational& p, const Rational& rho);

struct DualityResult {
  Rational lhs;
  Rational rhs;
  Rational difference;  // lhs - rhs
};

/// lhs = P(eta_t is 1 on all of A) from t kernel steps started at eta.
/// rhs = E[prod over x in A_t of eta(x)] with A_t the backward-traced set of
/// A through t independent matchings. n <= 6, t <= 4.
DualityResult duality_check(int n, const Rational& p, Mask eta, Mask A, int t);

struct ExhaustiveDuality {
  Rational max_difference;
  std::size_t cases = 0;
};

/// duality_check over every eta, every A and every t <= t_max, sharing one kernel.
ExhaustiveDuality duality_exhaustive(int n, const Rational& p, int t_max);

/// Law of the backward-traced set A_t as a dense vector over site masks.
std::vector<Rational> dual_set_law(int n, const Rational& p, Mask A, int t);

struct HatMuResult {
  Rational mu_hat;     // mu_t(eta = 1 on A)
  Rational reference;  // rho^|A|
  Rational difference;
};

/// Bernoulli(rho) evolved t steps, then evaluated on "all of A occupied".
HatMuResult hat_mu_invariance(int n, const Rational& p, const Rational& rho, Mask A, int t);

/// Probability that exactly the free particles in stir_subset stir (and the
/// other free ones do not) during one step on a ring of n sites.
/// free_positions must be pairwise at ring distance >= 4; n <= 20.
Rational pk_exact(int n, const Rational& p, const std::vector<int>& free_positions, const std::vector<int>& stir_subset);

/// Closed-form bounds for r free particles of which k stir:
/// lower (2p(1-p)^2)^k ((1-p)^2)^(r-k), upper (p(2-p))^k.
std::pair<Rational, Rational> pk_bounds(const Rational& p, int r, int k);

/// Compares the (C', alpha') and (C', beta') marginals of one coupled step
/// against the uncoupled stirring law; returns the larger max deviation.
/// Requires 3 <= n <= 6, p < 1/2, alpha != beta, alpha and beta outside C.
Rational coupling_marginal_deviation(int n, const Rational& p, Mask C, int alpha, int beta);
/// Maximum of the above over every admissible (C, alpha, beta).
Rational coupling_marginal_deviation(int n, const Rational& p);

}  // namespace stirwalk::exact
