#include "stirwalk/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "stirwalk/parallel.hpp"
#include "stirwalk/rng.hpp"

namespace stirwalk::entropy {

void EmpiricalBlockDistribution::add(BlockCode code, std::uint64_t count) {
  if (count == 0) return;
  counts_[code] += count;
  total_ += count;
}

void EmpiricalBlockDistribution::merge(const EmpiricalBlockDistribution& other) {
  for (const auto& [code, c] : other.counts_) counts_[code] += c;
  total_ += other.total_;
}

std::uint64_t EmpiricalBlockDistribution::count(BlockCode code) const {
  const auto it = counts_.find(code);
  return it == counts_.end() ? 0 : it->second;
}

double EmpiricalBlockDistribution::probability(BlockCode code) const {
  return total_ == 0 ? 0.0 : static_cast<double>(count(code)) / static_cast<double>(total_);
}

std::vector<std::pair<BlockCode, std::uint64_t>> EmpiricalBlockDistribution::sorted() const {
  std::vector<std::pair<BlockCode, std::uint64_t>> out(counts_.begin(), counts_.end());
  std::sort(out.begin(), out.end());
  return out;
}

EmpiricalBlockDistribution EmpiricalBlockDistribution::project(const std::function<BlockCode(BlockCode)>& f) const {
  EmpiricalBlockDistribution out;
  for (const auto& [code, c] : counts_) out.add(f(code), c);
  return out;
}

std::string EmpiricalBlockDistribution::to_csv(const std::function<std::string(BlockCode)>& label) const {
  std::ostringstream out;
  out << "block,count\n";
  for (const auto& [code, c] : sorted()) out << label(code) << ',' << c << '\n';
  return out.str();
}

ReplicatedCounts::ReplicatedCounts(std::vector<EmpiricalBlockDistribution> replicas) : replicas_(std::move(replicas)) {
  for (const auto& r : replicas_) pooled_.merge(r);
}

std::string to_string(Estimator e) { return e == Estimator::PlugIn ? "plug-in" : "bias-corrected"; }

namespace {

// Entropy from a list of counts. Terms are grouped by count value and summed
// in ascending count order, so equal count multisets give identical doubles.
class CountEntropy {
 public:
  double operator()(const std::vector<std::uint64_t>& counts, std::uint64_t total, std::size_t* support = nullptr) {
    std::uint64_t max_count = 0;
    for (std::uint64_t c : counts) max_count = std::max(max_count, c);
    hist_.assign(static_cast<std::size_t>(max_count) + 1, 0);
    std::size_t nonzero = 0;
    for (std::uint64_t c : counts) {
      if (c == 0) continue;
      ++hist_[static_cast<std::size_t>(c)];
      ++nonzero;
    }
    if (support) *support = nonzero;
    if (total == 0) return 0.0;
    const auto n = static_cast<double>(total);
    double h = 0;
    for (std::size_t c = 1; c < hist_.size(); ++c) {
      if (hist_[c] == 0) continue;
      const double q = static_cast<double>(c) / n;
      h += static_cast<double>(hist_[c]) * q * std::log(n / static_cast<double>(c));
    }
    return h;
  }

 private:
  std::vector<std::uint64_t> hist_;
};

double correction(Estimator e, std::size_t support, std::uint64_t total) {
  if (e != Estimator::BiasCorrected || total == 0 || support == 0) return 0.0;
  return static_cast<double>(support - 1) / (2.0 * static_cast<double>(total));
}

// Pooled codes in ascending order and each replica as (dense index, count).
struct Dense {
  std::vector<BlockCode> codes;
  std::vector<std::vector<std::pair<std::uint32_t, std::uint64_t>>> replicas;
};

Dense densify(const ReplicatedCounts& rc) {
  Dense d;
  const auto pooled = rc.pooled().sorted();
  d.codes.reserve(pooled.size());
  for (const auto& [code, c] : pooled) d.codes.push_back(code);
  d.replicas.resize(rc.replicas());
  for (std::size_t r = 0; r < rc.replicas(); ++r) {
    for (const auto& [code, c] : rc.replica(r).sorted()) {
      const auto it = std::lower_bound(d.codes.begin(), d.codes.end(), code);
      d.replicas[r].emplace_back(static_cast<std::uint32_t>(it - d.codes.begin()), c);
    }
  }
  return d;
}

// Estimator value H(counts) - H(projected counts) (projection optional).
struct DifferenceFunctional {
  const std::vector<std::uint32_t>* proj = nullptr;  // dense index -> projected dense index
  std::size_t proj_size = 0;
  Estimator estimator = Estimator::PlugIn;
  CountEntropy entropy;
  std::vector<std::uint64_t> proj_counts;

  double operator()(const std::vector<std::uint64_t>& counts, std::uint64_t total, std::size_t* support = nullptr) {
    std::size_t s_joint = 0;
    double v = entropy(counts, total, &s_joint) + correction(estimator, s_joint, total);
    if (support) *support = s_joint;
    if (proj) {
      proj_counts.assign(proj_size, 0);
      for (std::size_t i = 0; i < counts.size(); ++i) proj_counts[(*proj)[i]] += counts[i];
      std::size_t s_proj = 0;
      v -= entropy(proj_counts, total, &s_proj) + correction(estimator, s_proj, total);
    }
    return v;
  }
};

EntropyEstimate estimate(const ReplicatedCounts& rc, const std::function<BlockCode(BlockCode)>* f, Estimator estimator,
                         const BootstrapOptions& boot) {
  const Dense d = densify(rc);
  std::vector<std::uint32_t> proj;
  DifferenceFunctional fn;
  fn.estimator = estimator;
  if (f) {
    std::vector<BlockCode> image(d.codes.size());
    for (std::size_t i = 0; i < d.codes.size(); ++i) image[i] = (*f)(d.codes[i]);
    std::vector<BlockCode> uniq = image;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    proj.resize(image.size());
    for (std::size_t i = 0; i < image.size(); ++i) {
      proj[i] = static_cast<std::uint32_t>(std::lower_bound(uniq.begin(), uniq.end(), image[i]) - uniq.begin());
    }
    fn.proj = &proj;
    fn.proj_size = uniq.size();
  }

  std::vector<std::uint64_t> counts(d.codes.size(), 0);
  for (const auto& rep : d.replicas) {
    for (const auto& [i, c] : rep) counts[i] += c;
  }
  EntropyEstimate est;
  est.estimator = estimator;
  est.samples = rc.pooled().total();
  est.value = fn(counts, est.samples, &est.support);

  const std::size_t R = d.replicas.size();
  if (R >= 2 && boot.resamples >= 2) {
    std::vector<double> values;
    values.reserve(boot.resamples);
    std::vector<std::uint64_t> weight(R);
    for (std::size_t b = 0; b < boot.resamples; ++b) {
      std::fill(weight.begin(), weight.end(), 0);
      for (std::size_t i = 0; i < R; ++i) {
        const std::uint64_t u = counter_hash(boot.seed, Stream::Bootstrap, static_cast<std::int64_t>(b),
                                             static_cast<std::int64_t>(i));
        ++weight[static_cast<std::size_t>(u % R)];
      }
      std::fill(counts.begin(), counts.end(), 0);
      std::uint64_t total = 0;
      for (std::size_t r = 0; r < R; ++r) {
        if (weight[r] == 0) continue;
        for (const auto& [i, c] : d.replicas[r]) counts[i] += weight[r] * c;
        total += weight[r] * rc.replica(r).total();
      }
      values.push_back(fn(counts, total));
    }
    double mean = 0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0;
    for (double v : values) ss += (v - mean) * (v - mean);
    est.std_error = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return est;
}

}  // namespace

double plugin_entropy(const EmpiricalBlockDistribution& dist) {
  std::vector<std::uint64_t> counts;
  counts.reserve(dist.support());
  for (const auto& [code, c] : dist.sorted()) counts.push_back(c);
  CountEntropy h;
  return h(counts, dist.total());
}

EntropyEstimate block_entropy(const ReplicatedCounts& counts, Estimator estimator, const BootstrapOptions& boot) {
  return estimate(counts, nullptr, estimator, boot);
}

EntropyEstimate entropy_difference(const ReplicatedCounts& joint, const std::function<BlockCode(BlockCode)>& f,
                                   Estimator estimator, const BootstrapOptions& boot) {
  return estimate(joint, &f, estimator, boot);
}

EntropyEstimate conditional_entropy(const ReplicatedCounts& joint, int m, int n, Estimator estimator,
                                    const BootstrapOptions& boot) {
  if (m < 1 || n < 0 || m * (n + 1) > kMaxBlockSites) {
    throw std::invalid_argument("block shape " + std::to_string(m) + "x" + std::to_string(n + 1) +
                                " outside 1 <= m*(n+1) <= 24");
  }
  const BlockCode mask = (BlockCode{1} << (m * n)) - 1;
  const BlockCode full = (BlockCode{1} << (m * (n + 1))) - 1;
  for (const auto& [code, c] : joint.pooled().sorted()) {
    if ((code & ~full) != 0) throw std::invalid_argument("block code wider than the declared shape");
  }
  return entropy_difference(joint, [mask](BlockCode c) { return c & mask; }, estimator, boot);
}

double aep_fraction(const EmpiricalBlockDistribution& dist, int sites, double h_ref, double eps,
                    const std::function<double(BlockCode)>& log_prob) {
  if (h_ref < 0 || !(eps > 0)) throw std::invalid_argument("aep_fraction needs h_ref >= 0 and eps > 0");
  if (dist.total() == 0) return 0.0;
  const double lo = -(h_ref + eps) * sites;
  const double hi = -(h_ref - eps) * sites;
  std::uint64_t inside = 0;
  for (const auto& [code, c] : dist.sorted()) {
    const double lq = log_prob(code);
    if (lq > lo && lq < hi) inside += c;
  }
  return static_cast<double>(inside) / static_cast<double>(dist.total());
}

double aep_fraction(const EmpiricalBlockDistribution& dist, int sites, double h_ref, double eps) {
  const double n = static_cast<double>(dist.total());
  return aep_fraction(dist, sites, h_ref, eps,
                      [&](BlockCode code) { return std::log(static_cast<double>(dist.count(code)) / n); });
}

BlockCode block_code(const std::vector<const ssep::ParticleRow*>& rows, std::int64_t x, int m) {
  if (m < 1 || static_cast<int>(rows.size()) * m > 64) throw std::invalid_argument("block does not fit 64 bits");
  BlockCode code = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const ssep::ParticleRow& row = *rows[r];
    const std::int64_t w = row.width();
    for (int c = 0; c < m; ++c) {
      std::int64_t i = x + c;
      if (row.periodic()) {
        i %= w;
        if (i < 0) i += w;
      } else if (i < 0 || i >= w) {
        throw std::out_of_range("block column outside row");
      }
      if (row.occupied(i)) code |= BlockCode{1} << (r * static_cast<std::size_t>(m) + static_cast<std::size_t>(c));
    }
  }
  return code;
}

BlockCode block_code(const ssep::SpaceTimeBlock& block, ssep::Time t, std::int64_t x, int m, int n) {
  std::vector<const ssep::ParticleRow*> rows;
  for (int r = 0; r < n; ++r) rows.push_back(&block.at(t + r));
  return block_code(rows, x, m);
}

std::vector<std::int64_t> free_positions(const ssep::ParticleRow& row) {
  const std::int64_t w = row.width();
  if (w < 7) throw std::invalid_argument("free sites need rows of width >= 7");
  const auto occ = [&](std::int64_t i) { return row.occupied(((i % w) + w) % w); };
  std::vector<std::int64_t> out;
  const std::int64_t lo = row.periodic() ? 0 : 3;
  const std::int64_t hi = row.periodic() ? w - 1 : w - 4;
  for (std::int64_t x = lo; x <= hi; ++x) {
    if (!occ(x)) continue;
    bool free = true;
    for (int d = 1; d <= 3 && free; ++d) free = !occ(x - d) && !occ(x + d);
    if (free) out.push_back(x);
  }
  return out;
}

int free_count_in_code(BlockCode code, int m, int row) {
  const auto bit = [&](int c) { return ((code >> (row * m + c)) & 1u) != 0; };
  int count = 0;
  for (int x = 3; x <= m - 4; ++x) {
    if (!bit(x)) continue;
    bool free = true;
    for (int d = 1; d <= 3 && free; ++d) free = !bit(x - d) && !bit(x + d);
    if (free) ++count;
  }
  return count;
}

FreeSiteStats free_site_stats(const ssep::SpaceTimeBlock& block) {
  FreeSiteStats stats;
  double sum = 0;
  for (const auto& row : block.rows) {
    stats.positions.push_back(free_positions(row));
    const std::int64_t eligible = row.periodic() ? row.width() : row.width() - 6;
    sum += static_cast<double>(stats.positions.back().size()) / static_cast<double>(eligible);
  }
  if (!block.rows.empty()) stats.density = sum / static_cast<double>(block.rows.size());
  return stats;
}

ReplicatedCounts sample_ssep_blocks(const BlockSamplingParams& prm) {
  if (prm.m < 1 || prm.rows < 1 || prm.m * prm.rows > kMaxBlockSites) {
    throw std::invalid_argument("block shape must satisfy 1 <= m*rows <= 24");
  }
  if (prm.replicas == 0) throw std::invalid_argument("need at least one replica");
  const std::int64_t per_slice = prm.width / (prm.m + 4);
  if (per_slice < 1) throw std::invalid_argument("torus narrower than one block plus spacing");
  const ssep::Time stride = prm.rows + 4;

  std::vector<EmpiricalBlockDistribution> tables(prm.replicas);
  parallel_for(prm.replicas, prm.threads, [&](std::size_t r) {
    const std::uint64_t want = prm.samples / prm.replicas + (r < prm.samples % prm.replicas ? 1 : 0);
    const std::uint64_t seed = derive_seed(prm.seed, Stream::Replica, static_cast<std::int64_t>(r));
    const auto slices = static_cast<ssep::Time>((want + per_slice - 1) / per_slice);
    const ssep::Time horizon = prm.burn_in + slices * stride;
    const auto real = ssep::StirringRealization::torus(seed, prm.p, prm.width, 0, std::max<ssep::Time>(horizon, 1));
    ssep::ParticleRow row = ssep::bernoulli_row(prm.width, prm.rho, derive_seed(seed, Stream::Occupancy, 0));
    for (ssep::Time t = 0; t < prm.burn_in; ++t) row = ssep::step_row(row, ssep::winners_at(real, t));

    std::vector<ssep::ParticleRow> window;
    std::uint64_t taken = 0;
    ssep::Time t = prm.burn_in;
    for (ssep::Time s = 0; s < slices; ++s) {
      const ssep::Time start = prm.burn_in + s * stride;
      while (t < start) row = ssep::step_row(row, ssep::winners_at(real, t++));
      window.clear();
      window.push_back(row);
      for (int k = 1; k < prm.rows; ++k) {
        row = ssep::step_row(row, ssep::winners_at(real, t++));
        window.push_back(row);
      }
      std::vector<const ssep::ParticleRow*> ptrs;
      for (const auto& w : window) ptrs.push_back(&w);
      for (std::int64_t k = 0; k < per_slice && taken < want; ++k, ++taken) {
        tables[r].add(block_code(ptrs, k * (prm.m + 4), prm.m));
      }
    }
  });
  return ReplicatedCounts(std::move(tables));
}

double free_row_entropy(const std::vector<std::vector<double>>& pk_by_r, int r) {
  if (r == 0) return 0.0;
  if (r < 0 || static_cast<std::size_t>(r) >= pk_by_r.size() || pk_by_r[static_cast<std::size_t>(r)].size() <
                                                                      static_cast<std::size_t>(r) + 1) {
    throw std::out_of_range("no stirring probabilities for " + std::to_string(r) + " free sites");
  }
  double h = 0;
  double binom = 1;
  for (int k = 0; k <= r; ++k) {
    const double q = pk_by_r[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)];
    if (q > 0) h -= binom * q * std::log(q);
    binom = binom * (r - k) / (k + 1);
  }
  return h;
}

double free_row_contribution(const EmpiricalBlockDistribution& joint, int m, int n,
                             const std::vector<std::vector<double>>& pk_by_r) {
  if (n < 1) throw std::invalid_argument("conditioning block needs at least one row");
  if (joint.total() == 0) return 0.0;
  double acc = 0;
  for (const auto& [code, c] : joint.sorted()) {
    acc += static_cast<double>(c) * free_row_entropy(pk_by_r, free_count_in_code(code, m, n - 1));
  }
  return acc / static_cast<double>(joint.total());
}

namespace {

BlockCode pow3(int k) {
  BlockCode v = 1;
  for (int i = 0; i < k; ++i) v *= 3;
  return v;
}

void count_windows(const std::vector<ssep::Step>& symbols, std::size_t begin, std::size_t end, int len,
                   EmpiricalBlockDistribution& out) {
  const BlockCode top = pow3(len - 1);
  if (end - begin < static_cast<std::size_t>(len)) return;
  BlockCode code = 0;
  // Earliest symbol in the lowest digit: code = sum d_j 3^j over the window.
  for (int j = len - 1; j >= 0; --j) code = code * 3 + static_cast<BlockCode>(static_cast<int>(symbols[begin + j]) + 1);
  out.add(code);
  for (std::size_t i = begin + 1; i + len <= end; ++i) {
    code = code / 3 + top * static_cast<BlockCode>(static_cast<int>(symbols[i + len - 1]) + 1);
    out.add(code);
  }
}

}  // namespace

ReplicatedCounts symbol_block_counts(const std::vector<ssep::Step>& symbols, int len, std::size_t segments) {
  if (len < 1 || len > kMaxBlockSites) throw std::invalid_argument("symbol block length must lie in [1, 24]");
  if (segments == 0) throw std::invalid_argument("need at least one segment");
  segments = std::max<std::size_t>(1, std::min(segments, symbols.size() / static_cast<std::size_t>(len)));
  std::vector<EmpiricalBlockDistribution> tables(segments);
  for (std::size_t s = 0; s < segments; ++s) {
    const std::size_t begin = symbols.size() * s / segments;
    const std::size_t end = symbols.size() * (s + 1) / segments;
    count_windows(symbols, begin, end, len, tables[s]);
  }
  return ReplicatedCounts(std::move(tables));
}

EntropyEstimate trajectory_entropy_rate(const std::vector<ssep::Step>& symbols, int block_len, std::size_t segments,
                                        Estimator estimator, const BootstrapOptions& boot) {
  const ReplicatedCounts counts = symbol_block_counts(symbols, block_len, segments);
  const BlockCode prefix = pow3(block_len - 1);
  EntropyEstimate est = entropy_difference(counts, [prefix](BlockCode c) { return c % prefix; }, estimator, boot);
  est.insufficient = static_cast<double>(symbols.size()) < block_len * std::pow(3.0, block_len);
  return est;
}

PredictableSet predictable_fraction(const std::vector<std::vector<ssep::Step>>& sequences, int m, double eps) {
  if (m < 1 || m > kMaxBlockSites) throw std::invalid_argument("predictable_fraction needs 1 <= m <= 24");
  if (!(eps >= 0 && eps < 1)) throw std::invalid_argument("eps must lie in [0, 1)");
  EmpiricalBlockDistribution dist;
  for (const auto& s : sequences) count_windows(s, 0, s.size(), m, dist);
  PredictableSet out;
  out.budget = std::pow(1.0 + eps, m);
  if (dist.total() == 0) return out;
  auto entries = dist.sorted();
  std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  const double n = static_cast<double>(dist.total());
  std::uint64_t mass = 0;
  for (const auto& [code, c] : entries) {
    if (static_cast<double>(mass) >= (1.0 - eps) * n) break;
    mass += c;
    ++out.size;
  }
  out.covered = static_cast<double>(mass) / n;
  return out;
}

}  // namespace stirwalk::entropy
