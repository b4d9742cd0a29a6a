#include "stirwalk/exact.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <map>
#include <sstream>
#include <stdexcept>

namespace stirwalk::exact {

namespace {

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c) != 0; });
}

void check_ring(int n, int lo, int hi, const char* what) {
  if (n < lo || n > hi) {
    throw std::invalid_argument(std::string(what) + " needs " + std::to_string(lo) + " <= n <= " + std::to_string(hi) +
                                ", got " + std::to_string(n));
  }
}

void check_probability(const Rational& p) {
  if (p < 0 || p >= 1) throw std::invalid_argument("p must lie in [0, 1), got " + to_string(p));
}

Mask full_mask(int n) { return n >= 32 ? ~Mask{0} : (Mask{1} << n) - 1; }

bool has(Mask m, int i) { return ((m >> i) & 1u) != 0; }

// Calls fn(start, len) for every maximal run of fired edges; the run holds
// edges start, start + 1, ..., start + len - 1 (mod n). A fully fired ring is
// one run of length n starting at 0.
template <typename Fn>
void for_each_run(Mask fired, int n, Fn&& fn) {
  if (fired == full_mask(n)) {
    fn(0, n);
    return;
  }
  int s = 0;
  while (has(fired, s)) ++s;
  int start = -1, len = 0;
  for (int i = 1; i <= n; ++i) {
    const int e = (s + i) % n;
    if (has(fired, e)) {
      if (len == 0) start = e;
      ++len;
    } else if (len > 0) {
      fn(start, len);
      len = 0;
    }
  }
}

std::vector<Rational> powers(const Rational& base, int n) {
  std::vector<Rational> out(static_cast<std::size_t>(n) + 1);
  out[0] = 1;
  for (int i = 1; i <= n; ++i) out[static_cast<std::size_t>(i)] = out[static_cast<std::size_t>(i) - 1] * base;
  return out;
}

int site_move(int x, Mask edges, int n) {
  if (has(edges, x)) return (x + 1) % n;
  const int left = (x + n - 1) % n;
  if (has(edges, left)) return left;
  return x;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  const std::string original(text);
  bool negative = false;
  if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  Rational q;
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    const auto num = text.substr(0, slash), den = text.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den)) throw std::invalid_argument("not a rational: '" + original + "'");
    q = Rational(mpz_class(std::string(num)), mpz_class(std::string(den)));
    if (q.get_den() == 0) throw std::invalid_argument("zero denominator in '" + original + "'");
  } else if (const auto dot = text.find('.'); dot != std::string_view::npos) {
    const auto whole = text.substr(0, dot), frac = text.substr(dot + 1);
    if ((!whole.empty() && !all_digits(whole)) || (!frac.empty() && !all_digits(frac)) || (whole.empty() && frac.empty())) {
      throw std::invalid_argument("not a rational: '" + original + "'");
    }
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, frac.size());
    const mpz_class w = whole.empty() ? mpz_class(0) : mpz_class(std::string(whole));
    const mpz_class f = frac.empty() ? mpz_class(0) : mpz_class(std::string(frac));
    q = Rational(w * scale + f, scale);
  } else {
    if (!all_digits(text)) throw std::invalid_argument("not a rational: '" + original + "'");
    q = Rational(mpz_class(std::string(text)));
  }
  q.canonicalize();
  return negative ? Rational(-q) : q;
}

std::string to_string(const Rational& q) { return q.get_str(); }

Rational MatchingDistribution::total() const {
  Rational sum = 0;
  for (const auto& v : prob) sum += v;
  return sum;
}

std::vector<Mask> MatchingDistribution::support() const {
  std::vector<Mask> out;
  for (std::size_t m = 0; m < prob.size(); ++m) {
    if (prob[m] != 0) out.push_back(static_cast<Mask>(m));
  }
  return out;
}

std::vector<FiringOutcome> firing_outcomes(int n, const Rational& p) {
  check_ring(n, 2, kMaxMatchingRing, "firing_outcomes");
  check_probability(p);
  const auto pw = powers(p, n);
  const auto qw = powers(Rational(1 - p), n);
  std::vector<FiringOutcome> out;
  for (Mask fired = 0; fired <= full_mask(n); ++fired) {
    const int f = std::popcount(fired);
    const Rational w = pw[static_cast<std::size_t>(f)] * qw[static_cast<std::size_t>(n - f)];
    if (w == 0) continue;
    std::vector<std::pair<int, int>> runs;
    for_each_run(fired, n, [&](int start, int len) { runs.emplace_back(start, len); });
    long combos = 1;
    for (const auto& r : runs) combos *= r.second;
    const Rational each = w / Rational(combos);
    // Odometer over one winner per run.
    std::vector<int> choice(runs.size(), 0);
    for (long c = 0; c < combos; ++c) {
      Mask stirred = 0;
      for (std::size_t i = 0; i < runs.size(); ++i) stirred |= Mask{1} << ((runs[i].first + choice[i]) % n);
      out.push_back({fired, stirred, each});
      for (std::size_t i = 0; i < runs.size(); ++i) {
        if (++choice[i] < runs[i].second) break;
        choice[i] = 0;
      }
    }
  }
  return out;
}

MatchingDistribution matchings_distribution(int n, const Rational& p) {
  check_ring(n, 2, kMaxMatchingRing, "matchings_distribution");
  check_probability(p);
  MatchingDistribution dist{n, p, std::vector<Rational>(std::size_t{1} << n)};
  for (const auto& o : firing_outcomes(n, p)) dist.prob[o.stirred] += o.weight;
  return dist;
}

Mask apply_matching(Mask config, Mask edges, int n) noexcept {
  for (int e = 0; e < n; ++e) {
    if (!has(edges, e)) continue;
    const int f = (e + 1) % n;
    const bool a = has(config, e), b = has(config, f);
    if (a != b) config ^= (Mask{1} << e) | (Mask{1} << f);
  }
  return config;
}

Rational edge_stir_probability(const MatchingDistribution& dist, int edge) {
  if (edge < 0 || edge >= dist.n) throw std::out_of_range("edge outside ring");
  Rational sum = 0;
  for (std::size_t m = 0; m < dist.prob.size(); ++m) {
    if (has(static_cast<Mask>(m), edge)) sum += dist.prob[m];
  }
  return sum;
}

Rational RingKernel::at(Mask from, Mask to) const {
  const Row& r = rows_.at(from);
  const auto it = std::lower_bound(r.begin(), r.end(), to, [](const auto& e, Mask v) { return e.first < v; });
  return (it != r.end() && it->first == to) ? it->second : Rational(0);
}

std::vector<Rational> RingKernel::push(const std::vector<Rational>& mu) const {
  if (mu.size() != rows_.size()) throw std::invalid_argument("measure size does not match kernel");
  std::vector<Rational> out(rows_.size());
  for (std::size_t from = 0; from < rows_.size(); ++from) {
    if (mu[from] == 0) continue;
    for (const auto& [to, k] : rows_[from]) out[to] += mu[from] * k;
  }
  return out;
}

std::string RingKernel::to_csv() const {
  std::ostringstream out;
  out << "eta,eta_next,num,den\n";
  for (std::size_t from = 0; from < rows_.size(); ++from) {
    for (const auto& [to, k] : rows_[from]) {
      out << from << ',' << to << ',' << k.get_num().get_str() << ',' << k.get_den().get_str() << '\n';
    }
  }
  return out.str();
}

RingKernel config_kernel(int n, const Rational& p) {
  check_ring(n, 2, kMaxKernelRing, "config_kernel");
  const MatchingDistribution dist = matchings_distribution(n, p);
  const std::vector<Mask> support = dist.support();
  const std::size_t states = std::size_t{1} << n;
  std::vector<RingKernel::Row> rows(states);
  std::vector<Rational> dense(states);
  for (std::size_t from = 0; from < states; ++from) {
    for (Mask m : support) dense[apply_matching(static_cast<Mask>(from), m, n)] += dist.prob[m];
    for (std::size_t to = 0; to < states; ++to) {
      if (dense[to] != 0) {
        rows[from].emplace_back(static_cast<Mask>(to), dense[to]);
        dense[to] = 0;
      }
    }
  }
  return {n, p, std::move(rows)};
}

std::vector<Rational> bernoulli_measure(int n, const Rational& rho) {
  if (rho < 0 || rho > 1) throw std::invalid_argument("rho must lie in [0, 1], got " + to_string(rho));
  const auto pw = powers(rho, n);
  const auto qw = powers(Rational(1 - rho), n);
  std::vector<Rational> mu(std::size_t{1} << n);
  for (std::size_t c = 0; c < mu.size(); ++c) {
    const int k = std::popcount(static_cast<Mask>(c));
    mu[c] = pw[static_cast<std::size_t>(k)] * qw[static_cast<std::size_t>(n - k)];
  }
  return mu;
}

std::vector<Rational> sector_uniform_measure(int n, int k) {
  if (k < 0 || k > n) throw std::invalid_argument("particle count outside [0, n]");
  mpz_class binom;
  mpz_bin_uiui(binom.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
  const Rational each(mpz_class(1), binom);
  std::vector<Rational> mu(std::size_t{1} << n);
  for (std::size_t c = 0; c < mu.size(); ++c) {
    if (std::popcount(static_cast<Mask>(c)) == k) mu[c] = each;
  }
  return mu;
}

Rational invariance_deviation(const RingKernel& kernel, const std::vector<Rational>& mu) {
  const std::vector<Rational> next = kernel.push(mu);
  Rational worst = 0;
  for (std::size_t c = 0; c < mu.size(); ++c) worst = std::max(worst, Rational(abs(next[c] - mu[c])));
  return worst;
}

Rational bernoulli_invariance_deviation(int n, const Rational& p, const Rational& rho) {
  return invariance_deviation(config_kernel(n, p), bernoulli_measure(n, rho));
}

namespace {

void check_duality_args(int n, Mask eta, Mask A, int t) {
  check_ring(n, 2, kMaxDualityRing, "duality");
  if (t < 0 || t > kMaxDualitySteps) throw std::invalid_argument("duality needs 0 <= t <= 4");
  if ((A & ~full_mask(n)) != 0) throw std::invalid_argument("site set A is not contained in the ring");
  if ((eta & ~full_mask(n)) != 0) throw std::invalid_argument("configuration does not fit the ring");
}

}  // namespace

std::vector<Rational> dual_set_law(int n, const Rational& p, Mask A, int t) {
  check_duality_args(n, 0, A, t);
  const MatchingDistribution dist = matchings_distribution(n, p);
  const std::vector<Mask> support = dist.support();
  std::vector<Rational> law(std::size_t{1} << n);
  law[A] = 1;
  // Tracing A back through step t, then t - 1, and so on: each step maps the
  // current set through an independent matching.
  for (int s = 0; s < t; ++s) {
    std::vector<Rational> next(law.size());
    for (std::size_t set = 0; set < law.size(); ++set) {
      if (law[set] == 0) continue;
      for (Mask m : support) next[apply_matching(static_cast<Mask>(set), m, n)] += law[set] * dist.prob[m];
    }
    law = std::move(next);
  }
  return law;
}

DualityResult duality_check(int n, const Rational& p, Mask eta, Mask A, int t) {
  check_duality_args(n, eta, A, t);
  const RingKernel kernel = config_kernel(n, p);
  std::vector<Rational> dist(std::size_t{1} << n);
  dist[eta] = 1;
  for (int s = 0; s < t; ++s) dist = kernel.push(dist);
  DualityResult r;
  r.lhs = 0;
  for (std::size_t c = 0; c < dist.size(); ++c) {
    if ((static_cast<Mask>(c) & A) == A) r.lhs += dist[c];
  }
  const std::vector<Rational> law = dual_set_law(n, p, A, t);
  r.rhs = 0;
  for (std::size_t set = 0; set < law.size(); ++set) {
    if ((static_cast<Mask>(set) & eta) == set) r.rhs += law[set];
  }
  r.difference = r.lhs - r.rhs;
  return r;
}

ExhaustiveDuality duality_exhaustive(int n, const Rational& p, int t_max) {
  check_duality_args(n, 0, 0, t_max);
  const RingKernel kernel = config_kernel(n, p);
  const std::size_t states = std::size_t{1} << n;
  const auto steps = static_cast<std::size_t>(t_max) + 1;
  // lhs[(eta * steps + t) * states + A]
  std::vector<Rational> lhs(states * steps * states);
  for (std::size_t eta = 0; eta < states; ++eta) {
    std::vector<Rational> dist(states);
    dist[eta] = 1;
    for (std::size_t t = 0; t < steps; ++t) {
      if (t > 0) dist = kernel.push(dist);
      for (std::size_t a = 0; a < states; ++a) {
        Rational& cell = lhs[(eta * steps + t) * states + a];
        for (std::size_t c = 0; c < states; ++c) {
          if ((c & a) == a && dist[c] != 0) cell += dist[c];
        }
      }
    }
  }
  ExhaustiveDuality out;
  out.max_difference = 0;
  for (std::size_t a = 0; a < states; ++a) {
    for (std::size_t t = 0; t < steps; ++t) {
      const std::vector<Rational> law = dual_set_law(n, p, static_cast<Mask>(a), static_cast<int>(t));
      for (std::size_t eta = 0; eta < states; ++eta) {
        Rational rhs = 0;
        for (std::size_t set = 0; set < states; ++set) {
          if ((set & eta) == set && law[set] != 0) rhs += law[set];
        }
        out.max_difference = std::max(out.max_difference, Rational(abs(lhs[(eta * steps + t) * states + a] - rhs)));
        ++out.cases;
      }
    }
  }
  return out;
}

HatMuResult hat_mu_invariance(int n, const Rational& p, const Rational& rho, Mask A, int t) {
  check_duality_args(n, 0, A, t);
  const RingKernel kernel = config_kernel(n, p);
  std::vector<Rational> mu = bernoulli_measure(n, rho);
  for (int s = 0; s < t; ++s) mu = kernel.push(mu);
  HatMuResult r;
  r.mu_hat = 0;
  for (std::size_t c = 0; c < mu.size(); ++c) {
    if ((static_cast<Mask>(c) & A) == A) r.mu_hat += mu[c];
  }
  r.reference = 1;
  for (int i = 0; i < std::popcount(A); ++i) r.reference *= rho;
  r.difference = r.mu_hat - r.reference;
  return r;
}

Rational pk_exact(int n, const Rational& p, const std::vector<int>& free_positions,
                  const std::vector<int>& stir_subset) {
  check_ring(n, 3, kMaxPkRing, "pk_exact");
  check_probability(p);
  std::vector<int> free_index(static_cast<std::size_t>(n), -1);
  for (std::size_t i = 0; i < free_positions.size(); ++i) {
    const int x = free_positions[i];
    if (x < 0 || x >= n) throw std::invalid_argument("free position " + std::to_string(x) + " outside ring");
    if (free_index[static_cast<std::size_t>(x)] >= 0) throw std::invalid_argument("repeated free position");
    free_index[static_cast<std::size_t>(x)] = static_cast<int>(i);
  }
  for (std::size_t i = 0; i < free_positions.size(); ++i) {
    for (std::size_t j = i + 1; j < free_positions.size(); ++j) {
      const int d = std::abs(free_positions[i] - free_positions[j]);
      if (std::min(d, n - d) < 4) throw std::invalid_argument("free positions must be at ring distance >= 4");
    }
  }
  std::vector<char> in_subset(free_positions.size(), 0);
  for (int x : stir_subset) {
    const int i = (x >= 0 && x < n) ? free_index[static_cast<std::size_t>(x)] : -1;
    if (i < 0) throw std::invalid_argument("stir subset site " + std::to_string(x) + " is not a free position");
    in_subset[static_cast<std::size_t>(i)] = 1;
  }
  const int want = static_cast<int>(std::count(in_subset.begin(), in_subset.end(), 1));

  // Edge e touches sites e and e + 1; record which free particle (if any)
  // each endpoint carries.
  std::vector<Rational> by_fired(static_cast<std::size_t>(n) + 1);
  std::vector<int> hits(free_positions.size());
  for (Mask fired = 0; fired <= full_mask(n); ++fired) {
    long num = 1, den = 1;
    int satisfied = 0;
    for_each_run(fired, n, [&](int start, int len) {
      if (num == 0) return;
      std::fill(hits.begin(), hits.end(), 0);
      std::vector<int> touched;
      for (int i = 0; i < len; ++i) {
        const int e = (start + i) % n;
        for (int site : {e, (e + 1) % n}) {
          const int j = free_index[static_cast<std::size_t>(site)];
          if (j < 0) continue;
          if (hits[static_cast<std::size_t>(j)]++ == 0) touched.push_back(j);
        }
      }
      int chosen = -1, in_count = 0, adjacent = 0;
      for (int j : touched) {
        adjacent += hits[static_cast<std::size_t>(j)];
        if (in_subset[static_cast<std::size_t>(j)]) {
          chosen = j;
          ++in_count;
        }
      }
      den *= len;
      if (in_count >= 2) {
        num = 0;  // one winner cannot stir two separated particles
      } else if (in_count == 1) {
        num *= hits[static_cast<std::size_t>(chosen)];
        ++satisfied;
      } else {
        num *= len - adjacent;
      }
    });
    if (num == 0 || satisfied != want) continue;
    Rational term{mpz_class(num), mpz_class(den)};
    term.canonicalize();
    by_fired[static_cast<std::size_t>(std::popcount(fired))] += term;
  }
  const auto pw = powers(p, n);
  const auto qw = powers(Rational(1 - p), n);
  Rational total = 0;
  for (int f = 0; f <= n; ++f) {
    const auto i = static_cast<std::size_t>(f);
    if (by_fired[i] != 0) total += by_fired[i] * pw[i] * qw[static_cast<std::size_t>(n - f)];
  }
  total.canonicalize();
  return total;
}

std::pair<Rational, Rational> pk_bounds(const Rational& p, int r, int k) {
  if (k < 0 || r < k) throw std::invalid_argument("pk_bounds needs 0 <= k <= r");
  const Rational q = 1 - p;
  const Rational one_side = 2 * p * q * q;
  const Rational quiet = q * q;
  const Rational either = p * (2 - p);
  Rational lower = 1, upper = 1;
  for (int i = 0; i < k; ++i) {
    lower *= one_side;
    upper *= either;
  }
  for (int i = k; i < r; ++i) lower *= quiet;
  return {lower, upper};
}

namespace {

Rational coupling_deviation_with(int n, const Rational& p, const std::vector<FiringOutcome>& outcomes, Mask C,
                                 int alpha, int beta) {
  using Key = std::uint64_t;
  const auto key = [](Mask c, int x) { return (Key{c} << 8) | static_cast<Key>(x); };
  std::map<Key, Rational> coupled_a, coupled_b, plain_a, plain_b;

  int shared = -1;
  if ((alpha + 1) % n == beta) shared = alpha;
  if ((beta + 1) % n == alpha) shared = beta;

  for (const FiringOutcome& o : outcomes) {
    const Mask c_next = apply_matching(C, o.stirred, n);
    const int a_move = site_move(alpha, o.stirred, n);
    const int b_move = site_move(beta, o.stirred, n);
    plain_a[key(c_next, a_move)] += o.weight;
    plain_b[key(c_next, b_move)] += o.weight;
    const bool isolated =
        shared >= 0 && !has(o.fired, (shared + n - 1) % n) && !has(o.fired, (shared + 1) % n);
    if (isolated) {
      // xi*: alpha jumps onto beta (p), beta jumps onto alpha (p), neither (1 - 2p).
      coupled_a[key(c_next, beta)] += o.weight * p;
      coupled_a[key(c_next, alpha)] += o.weight * (1 - p);
      coupled_b[key(c_next, alpha)] += o.weight * p;
      coupled_b[key(c_next, beta)] += o.weight * (1 - p);
    } else {
      coupled_a[key(c_next, a_move)] += o.weight;
      coupled_b[key(c_next, b_move)] += o.weight;
    }
  }
  Rational worst = 0;
  const auto compare = [&](const std::map<Key, Rational>& x, const std::map<Key, Rational>& y) {
    std::map<Key, Rational> diff = x;
    for (const auto& [k, v] : y) diff[k] -= v;
    for (const auto& [k, v] : diff) worst = std::max(worst, Rational(abs(v)));
  };
  compare(coupled_a, plain_a);
  compare(coupled_b, plain_b);
  return worst;
}

void check_coupling_ring(int n, const Rational& p) {
  check_ring(n, 3, kMaxDualityRing, "coupling_marginal_deviation");
  if (p < 0 || p * 2 >= 1) throw std::invalid_argument("coupling needs 0 <= p < 1/2, got " + to_string(p));
}

}  // namespace

Rational coupling_marginal_deviation(int n, const Rational& p, Mask C, int alpha, int beta) {
  check_coupling_ring(n, p);
  if (alpha < 0 || alpha >= n || beta < 0 || beta >= n) throw std::invalid_argument("alpha/beta outside ring");
  if (alpha == beta) throw std::invalid_argument("alpha and beta must differ");
  if ((C & ~full_mask(n)) != 0) throw std::invalid_argument("common set does not fit the ring");
  if (has(C, alpha) || has(C, beta)) throw std::invalid_argument("alpha and beta must lie outside the common set");
  return coupling_deviation_with(n, p, firing_outcomes(n, p), C, alpha, beta);
}

Rational coupling_marginal_deviation(int n, const Rational& p) {
  check_coupling_ring(n, p);
  const auto outcomes = firing_outcomes(n, p);
  Rational worst = 0;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a == b) continue;
      const Mask rest = full_mask(n) & ~((Mask{1} << a) | (Mask{1} << b));
      // Every subset of the remaining sites.
      for (Mask c = rest;; c = (c - 1) & rest) {
        worst = std::max(worst, coupling_deviation_with(n, p, outcomes, c, a, b));
        if (c == 0) break;
      }
    }
  }
  return worst;
}

}  // namespace stirwalk::exact
