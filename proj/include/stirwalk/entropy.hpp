#pragma once

// Plug-in entropy estimators over counted blocks, natural logarithms.
//
// A block is encoded as an integer code. Space-time blocks of m columns and n
// rows put site (row, col) at bit row * m + col, with row 0 the earliest time,
// so the first k rows of a block are its low k * m bits. Symbol blocks use
// base 3 with the earliest symbol in the lowest digit.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stirwalk/ssep.hpp"

namespace stirwalk::entropy {

using BlockCode = std::uint64_t;

inline constexpr int kMaxBlockSites = 24;

class EmpiricalBlockDistribution {
 public:
  EmpiricalBlockDistribution() = default;

  void add(BlockCode code, std::uint64_t count = 1);
  void merge(const EmpiricalBlockDistribution& other);

  [[nodiscard]] std::uint64_t total() const noexcept { return total_; }
  [[nodiscard]] std::size_t support() const noexcept { return counts_.size(); }
  [[nodiscard]] std::uint64_t count(BlockCode code) const;
  [[nodiscard]] double probability(BlockCode code) const;
  /// (code, count) pairs in ascending code order.
  [[nodiscard]] std::vector<std::pair<BlockCode, std::uint64_t>> sorted() const;
  /// Image under a code map, e.g. dropping the last row of every block.
  [[nodiscard]] EmpiricalBlockDistribution project(const std::function<BlockCode(BlockCode)>& f) const;
  /// "code,count" lines in ascending code order with a header.
  [[nodiscard]] std::string to_csv(const std::function<std::string(BlockCode)>& label) const;

 private:
  std::unordered_map<BlockCode, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

/// Count tables from independent replicas (or segments), pooled for the point
/// estimate and resampled for the bootstrap error bar.
class ReplicatedCounts {
 public:
  explicit ReplicatedCounts(std::vector<EmpiricalBlockDistribution> replicas);

  [[nodiscard]] std::size_t replicas() const noexcept { return replicas_.size(); }
  [[nodiscard]] const EmpiricalBlockDistribution& replica(std::size_t i) const { return replicas_.at(i); }
  [[nodiscard]] const EmpiricalBlockDistribution& pooled() const noexcept { return pooled_; }

 private:
  std::vector<EmpiricalBlockDistribution> replicas_;
  EmpiricalBlockDistribution pooled_;
};

enum class Estimator { PlugIn, BiasCorrected };

std::string to_string(Estimator e);

struct EntropyEstimate {
  double value = 0;      // nats
  double std_error = 0;  // nats; 0 when fewer than two replicas
  Estimator estimator = Estimator::PlugIn;
  std::uint64_t samples = 0;
  std::size_t support = 0;
  bool insufficient = false;  // too few samples for the block size
};

struct BootstrapOptions {
  std::size_t resamples = 200;
  std::uint64_t seed = 0;
};

/// -sum q log q over a count table.
double plugin_entropy(const EmpiricalBlockDistribution& dist);

/// Plug-in entropy of the pooled counts, plus (support - 1) / (2 N) when bias
/// corrected. The error bar resamples whole replicas with replacement.
EntropyEstimate block_entropy(const ReplicatedCounts& counts, Estimator estimator = Estimator::PlugIn,
                              const BootstrapOptions& boot = {});

/// H(joint) - H(f(joint)) on the same counts, where f drops the extension
/// (for nested blocks, the conditioning block is f of the larger block).
EntropyEstimate entropy_difference(const ReplicatedCounts& joint, const std::function<BlockCode(BlockCode)>& f,
                                   Estimator estimator = Estimator::PlugIn, const BootstrapOptions& boot = {});

/// H(B_{m,n+1} | B_{m,n}) from counts of (n+1)-row blocks of width m.
EntropyEstimate conditional_entropy(const ReplicatedCounts& joint, int m, int n,
                                    Estimator estimator = Estimator::PlugIn, const BootstrapOptions& boot = {});

/// Fraction of samples whose empirical block probability q satisfies
/// exp(-(h_ref + eps) sites) < q < exp(-(h_ref - eps) sites).
double aep_fraction(const EmpiricalBlockDistribution& dist, int sites, double h_ref, double eps);
/// Same band test with a model log-probability in place of the empirical one.
double aep_fraction(const EmpiricalBlockDistribution& dist, int sites, double h_ref, double eps,
                    const std::function<double(BlockCode)>& log_prob);

// ---- space-time blocks -------------------------------------------------

/// Code of the m x n block with lower-left corner (x, t): rows t .. t + n - 1,
/// columns x .. x + m - 1 (wrapping on periodic rows).
BlockCode block_code(const ssep::SpaceTimeBlock& block, ssep::Time t, std::int64_t x, int m, int n);
BlockCode block_code(const std::vector<const ssep::ParticleRow*>& rows, std::int64_t x, int m);

/// Occupied with three empty sites on each side. Periodic rows test every
/// position; other rows only those with both neighbourhoods inside.
std::vector<std::int64_t> free_positions(const ssep::ParticleRow& row);
/// Free sites of row `row` of an m-column code, positions 3 .. m - 4.
int free_count_in_code(BlockCode code, int m, int row);

struct FreeSiteStats {
  std::vector<std::vector<std::int64_t>> positions;  // per row, in time order
  double density = 0;                                // mean free fraction of eligible positions
};

/// Throws std::invalid_argument for rows narrower than 7.
FreeSiteStats free_site_stats(const ssep::SpaceTimeBlock& block);

struct BlockSamplingParams {
  std::int64_t width = 64;
  double p = 0.3;
  double rho = 0.5;
  int m = 8;
  int rows = 3;  // rows per sampled block
  std::uint64_t samples = 1000;
  std::size_t replicas = 10;
  ssep::Time burn_in = 0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Stationary torus runs (Bernoulli(rho) start), one per replica, each sampling
/// blocks at column offsets k (m + 4) and time stride rows + 4.
ReplicatedCounts sample_ssep_blocks(const BlockSamplingParams& params);

/// -sum_k C(r, k) q_k log q_k with q_k the probability that a given k of r
/// free particles stir. pk_by_r[r][k] holds q_k.
double free_row_entropy(const std::vector<std::vector<double>>& pk_by_r, int r);

/// Mean of free_row_entropy over sampled blocks, with r the number of free
/// sites on the last conditioning row (row n - 1) of each (n+1)-row block.
double free_row_contribution(const EmpiricalBlockDistribution& joint, int m, int n,
                             const std::vector<std::vector<double>>& pk_by_r);

// ---- symbol trajectories -----------------------------------------------

/// Sliding-window codes of length-len symbol blocks, split into `segments`
/// consecutive pieces (each its own count table).
ReplicatedCounts symbol_block_counts(const std::vector<ssep::Step>& symbols, int len, std::size_t segments);

/// H(len-blocks) - H((len-1)-prefixes): the per-symbol entropy rate estimate.
/// Flags insufficient data when the sequence is shorter than len * 3^len.
EntropyEstimate trajectory_entropy_rate(const std::vector<ssep::Step>& symbols, int block_len,
                                        std::size_t segments = 20, Estimator estimator = Estimator::BiasCorrected,
                                        const BootstrapOptions& boot = {});

struct PredictableSet {
  std::size_t size = 0;   // blocks needed to cover 1 - eps of the mass
  double covered = 0;     // mass they cover
  double budget = 0;      // (1 + eps)^m
  [[nodiscard]] bool within_budget() const noexcept { return static_cast<double>(size) <= budget; }
};

/// Smallest set of length-m blocks (most frequent first) holding 1 - eps of
/// the empirical mass over all given sequences. m <= 24.
PredictableSet predictable_fraction(const std::vector<std::vector<ssep::Step>>& sequences, int m, double eps);

}  // namespace stirwalk::entropy
