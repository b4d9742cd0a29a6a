#include "stirwalk/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "stirwalk/entropy.hpp"
#include "stirwalk/exact.hpp"
#include "stirwalk/format.hpp"
#include "stirwalk/parallel.hpp"
#include "stirwalk/recode.hpp"
#include "stirwalk/rng.hpp"
#include "stirwalk/ssep.hpp"
#include "stirwalk/walks.hpp"

namespace stirwalk::experiment {

using exact::Rational;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string describe(const Json& v) { return v.dump(); }

// Typed, range-checked access to config keys. Every key read is recorded in
// the resolved config; keys never read are rejected by finish().
class Params {
 public:
  explicit Params(const Json& cfg) : cfg_(cfg) {}

  void allow(const std::string& key) { used_.insert(key); }

  double real(const std::string& key, double def, double lo, double hi, bool hi_open = false) {
    const Json* v = find(key);
    double x = def;
    if (v) {
      if (v->is_number()) {
        x = v->get<double>();
      } else if (v->is_string()) {
        try {
          x = exact::parse_rational(v->get<std::string>()).get_d();
        } catch (const std::invalid_argument&) {
          throw ConfigError(key, "expected a number, got " + describe(*v));
        }
      } else {
        throw ConfigError(key, "expected a number, got " + describe(*v));
      }
    }
    if (!(x >= lo && (hi_open ? x < hi : x <= hi))) {
      throw ConfigError(key, "value " + format_double(x) + " outside [" + format_double(lo) + ", " + format_double(hi) +
                                 (hi_open ? ")" : "]"));
    }
    resolved_[key] = x;
    return x;
  }

  std::int64_t integer(const std::string& key, std::int64_t def, std::int64_t lo, std::int64_t hi) {
    const Json* v = find(key);
    std::int64_t x = def;
    if (v) x = to_integer(key, *v);
    if (x < lo || x > hi) {
      throw ConfigError(key, "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                                 std::to_string(hi) + "]");
    }
    resolved_[key] = x;
    return x;
  }

  Rational rational(const std::string& key, const char* def, const Rational& lo, const Rational& hi, bool hi_open) {
    const Json* v = find(key);
    Rational q;
    try {
      if (!v) {
        q = exact::parse_rational(def);
      } else if (v->is_string()) {
        q = exact::parse_rational(v->get<std::string>());
      } else if (v->is_number_integer()) {
        q = exact::parse_rational(std::to_string(v->get<std::int64_t>()));
      } else if (v->is_number()) {
        q = exact::parse_rational(format_double(v->get<double>()));
      } else {
        throw ConfigError(key, "expected a rational such as \"3/10\", got " + describe(*v));
      }
    } catch (const std::invalid_argument& e) {
      throw ConfigError(key, e.what());
    }
    if (q < lo || (hi_open ? q >= hi : q > hi)) {
      throw ConfigError(key, "value " + q.get_str() + " outside [" + lo.get_str() + ", " + hi.get_str() +
                                 (hi_open ? ")" : "]"));
    }
    resolved_[key] = q.get_str();
    return q;
  }

  bool boolean(const std::string& key, bool def) {
    const Json* v = find(key);
    bool x = def;
    if (v) {
      if (!v->is_boolean()) throw ConfigError(key, "expected true or false, got " + describe(*v));
      x = v->get<bool>();
    }
    resolved_[key] = x;
    return x;
  }

  std::string choice(const std::string& key, const std::string& def, const std::vector<std::string>& options) {
    const Json* v = find(key);
    std::string x = def;
    if (v) {
      if (!v->is_string()) throw ConfigError(key, "expected a string, got " + describe(*v));
      x = v->get<std::string>();
    }
    if (std::find(options.begin(), options.end(), x) == options.end()) {
      std::string list;
      for (const auto& o : options) list += (list.empty() ? "" : ", ") + o;
      throw ConfigError(key, "'" + x + "' is not one of " + list);
    }
    resolved_[key] = x;
    return x;
  }

  std::vector<std::int64_t> integers(const std::string& key, std::vector<std::int64_t> def, std::int64_t lo,
                                     std::int64_t hi) {
    const Json* v = find(key);
    std::vector<std::int64_t> xs = std::move(def);
    if (v) {
      if (!v->is_array() || v->empty()) throw ConfigError(key, "expected a nonempty list of integers");
      xs.clear();
      for (const auto& e : *v) xs.push_back(to_integer(key, e));
    }
    for (auto x : xs) {
      if (x < lo || x > hi) throw ConfigError(key, "entry " + std::to_string(x) + " out of range");
    }
    resolved_[key] = xs;
    return xs;
  }

  /// Rejects keys that no parameter accessor asked for.
  void finish() const {
    for (const auto& [key, value] : cfg_.items()) {
      if (!used_.contains(key)) throw ConfigError(key, "unknown key for this experiment");
    }
  }

  [[nodiscard]] const Json& resolved() const noexcept { return resolved_; }

 private:
  const Json* find(const std::string& key) {
    used_.insert(key);
    const auto it = cfg_.find(key);
    return it == cfg_.end() ? nullptr : &*it;
  }

  static std::int64_t to_integer(const std::string& key, const Json& v) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (std::floor(d) == d && std::fabs(d) < 9.0e15) return static_cast<std::int64_t>(d);
    }
    throw ConfigError(key, "expected an integer, got " + describe(v));
  }

  const Json& cfg_;
  std::set<std::string> used_;
  Json resolved_ = Json::object();
};

struct Context {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  Json results = Json::object();
  Json checks = Json::array();
  bool pass = true;
  std::vector<Artifact> artifacts;

  void check(const std::string& name, const std::string& module, bool ok, Json detail = Json::object()) {
    Json c;
    c["name"] = name;
    c["module"] = module;
    c["pass"] = ok;
    for (auto& [k, v] : detail.items()) c[k] = v;
    checks.push_back(std::move(c));
    pass = pass && ok;
  }
};

Json integer_json(const mpz_class& z) {
  if (z.fits_slong_p()) return z.get_si();
  return z.get_str();
}

Json rational_json(const Rational& q) {
  Json j;
  j["num"] = integer_json(q.get_num());
  j["den"] = integer_json(q.get_den());
  j["value"] = q.get_d();
  return j;
}

// Exact verification record: {check, params, deviation_num, deviation_den, pass}.
Json verification(const std::string& check, Json params, const Rational& deviation) {
  Json j;
  j["check"] = check;
  j["params"] = std::move(params);
  j["deviation_num"] = integer_json(deviation.get_num());
  j["deviation_den"] = integer_json(deviation.get_den());
  j["pass"] = deviation == 0;
  return j;
}

// Estimates are computed in nats; bits only rescale the reported numbers.
struct Units {
  std::string name = "nats";
  double scale = 1.0;
};

Units read_units(Params& P) {
  Units u;
  u.name = P.choice("units", "nats", {"nats", "bits"});
  if (u.name == "bits") u.scale = 1.0 / std::log(2.0);
  return u;
}

Json estimate_json(const entropy::EntropyEstimate& e, const Units& u) {
  Json j;
  j["estimator"] = entropy::to_string(e.estimator);
  j["samples"] = e.samples;
  j["support"] = e.support;
  j["units"] = u.name;
  j["value"] = e.value * u.scale;
  j["std_error"] = e.std_error * u.scale;
  if (e.insufficient) j["insufficient_length"] = true;
  return j;
}

// ---------------------------------------------------------------------------

void run_ssep_run(Params& P, Context& ctx) {
  const auto W = P.integer("W", 64, 2, 1 << 20);
  const double p = P.real("p", 0.3, 0.0, 1.0, true);
  const double rho = P.real("rho", 0.5, 0.0, 1.0);
  const auto t0 = P.integer("t0", 0, -1'000'000'000, 1'000'000'000);
  const auto t1 = P.integer("t1", 100, -1'000'000'000, 1'000'000'000);
  const std::string topology = P.choice("topology", "torus", {"torus", "line"});
  const bool export_block = P.boolean("export_block", true);
  if (t1 <= t0) throw ConfigError("t1", "must exceed t0");
  if (t1 - t0 > 100'000) throw ConfigError("t1", "t1 - t0 above 100000");
  if (W * (t1 - t0) > 50'000'000) throw ConfigError("W", "W * (t1 - t0) above 5e7 sites");
  P.finish();

  const std::uint64_t occ_seed = derive_seed(ctx.seed, Stream::Occupancy, 0);
  ssep::SpaceTimeBlock block;
  if (topology == "torus") {
    const auto real = ssep::StirringRealization::torus(ctx.seed, p, W, t0, t1);
    block = ssep::evolve_block(ssep::bernoulli_row(W, rho, occ_seed), real, t0, t1);
  } else {
    // Buffer of t1 - t0 sites on each side keeps the reported window free of
    // boundary effects.
    const std::int64_t buffer = t1 - t0;
    const auto real = ssep::StirringRealization::line(ctx.seed, p, t0, t1);
    const auto wide = ssep::evolve_block(ssep::bernoulli_row(W + 2 * buffer, rho, occ_seed, false, -buffer), real, t0, t1);
    block = {t0, t1, {}, ctx.seed, p};
    for (const auto& row : wide.rows) {
      const auto& d = row.data();
      block.rows.emplace_back(std::vector<std::uint8_t>(d.begin() + buffer, d.begin() + buffer + W), false, 0);
    }
  }

  std::size_t lo = block.rows.front().count(), hi = lo;
  double density = 0;
  for (const auto& row : block.rows) {
    lo = std::min(lo, row.count());
    hi = std::max(hi, row.count());
    density += static_cast<double>(row.count()) / static_cast<double>(W);
  }
  density /= static_cast<double>(block.rows.size());

  Json r;
  r["module"] = "ssep";
  r["operation"] = "evolve_block";
  r["initial_count"] = block.rows.front().count();
  r["final_count"] = block.rows.back().count();
  r["min_row_count"] = lo;
  r["max_row_count"] = hi;
  r["mean_density"] = density;
  r["final_row"] = block.rows.back().to_string();
  ctx.results["evolution"] = r;
  if (W >= 7) {
    const auto stats = entropy::free_site_stats(block);
    Json f;
    f["module"] = "entropy";
    f["operation"] = "free_site_stats";
    f["density"] = stats.density;
    f["final_row_positions"] = stats.positions.back();
    ctx.results["free_sites"] = f;
  }
  if (topology == "torus") {
    ctx.check("particle_count_conserved", "ssep", lo == hi, {{"min", lo}, {"max", hi}});
  }
  if (export_block) ctx.artifacts.push_back({"block.txt", ssep::serialize_block(block)});
}

void run_ssep_invariance(Params& P, Context& ctx) {
  const int n = static_cast<int>(P.integer("n", 6, 2, exact::kMaxKernelRing));
  const Rational p = P.rational("p", "3/10", 0, 1, true);
  const Rational rho = P.rational("rho", "1/2", 0, 1, false);
  const bool export_kernel = P.boolean("export_kernel", false);
  P.finish();

  const auto kernel = exact::config_kernel(n, p);
  Rational worst_row = 0;
  for (std::size_t s = 0; s < kernel.states(); ++s) {
    Rational sum = 0;
    for (const auto& [to, k] : kernel.row(static_cast<exact::Mask>(s))) sum += k;
    worst_row = std::max(worst_row, Rational(abs(sum - 1)));
  }
  const Json params = {{"n", n}, {"p", p.get_str()}, {"rho", rho.get_str()}};
  const Rational dev = exact::invariance_deviation(kernel, exact::bernoulli_measure(n, rho));
  Rational sector_dev = 0;
  for (int k = 0; k <= n; ++k) {
    sector_dev = std::max(sector_dev, exact::invariance_deviation(kernel, exact::sector_uniform_measure(n, k)));
  }
  Json list = Json::array();
  list.push_back(verification("kernel_row_sums", {{"n", n}, {"p", p.get_str()}}, worst_row));
  list.push_back(verification("bernoulli_invariance", params, dev));
  list.push_back(verification("sector_uniform_invariance", {{"n", n}, {"p", p.get_str()}}, sector_dev));
  Json r;
  r["module"] = "exact";
  r["operation"] = "bernoulli_invariance_deviation";
  r["verifications"] = list;
  ctx.results["invariance"] = r;
  for (const auto& v : list) ctx.check(v["check"], "exact", v["pass"]);
  if (export_kernel) ctx.artifacts.push_back({"kernel.csv", kernel.to_csv()});
}

void run_ssep_duality(Params& P, Context& ctx) {
  const int n = static_cast<int>(P.integer("n", 4, 2, exact::kMaxDualityRing));
  const Rational p = P.rational("p", "3/10", 0, 1, true);
  const int t_max = static_cast<int>(P.integer("t_max", 3, 0, exact::kMaxDualitySteps));
  const Rational rho = P.rational("rho", "1/2", 0, 1, false);
  P.finish();

  const auto ex = exact::duality_exhaustive(n, p, t_max);
  Rational hat_worst = 0;
  std::size_t hat_cases = 0;
  for (exact::Mask A = 0; A < (exact::Mask{1} << n); ++A) {
    for (int t = 0; t <= t_max; ++t) {
      hat_worst = std::max(hat_worst, Rational(abs(exact::hat_mu_invariance(n, p, rho, A, t).difference)));
      ++hat_cases;
    }
  }
  Json r;
  r["module"] = "exact";
  r["operation"] = "duality_check";
  r["cases"] = ex.cases;
  r["verification"] = verification("duality", {{"n", n}, {"p", p.get_str()}, {"t_max", t_max}}, ex.max_difference);
  ctx.results["duality"] = r;
  Json h;
  h["module"] = "exact";
  h["operation"] = "hat_mu_invariance";
  h["cases"] = hat_cases;
  h["verification"] = verification("hat_mu_invariance",
                                   {{"n", n}, {"p", p.get_str()}, {"rho", rho.get_str()}, {"t_max", t_max}}, hat_worst);
  ctx.results["hat_mu"] = h;
  ctx.check("duality", "exact", ex.max_difference == 0);
  ctx.check("hat_mu_invariance", "exact", hat_worst == 0);
}

void run_ssep_coupling(Params& P, Context& ctx) {
  const int n = static_cast<int>(P.integer("n", 5, 3, exact::kMaxDualityRing));
  const Rational p = P.rational("p", "3/10", 0, Rational(1, 2), true);
  const auto runs = P.integer("runs", 1000, 1, 10'000'000);
  const auto T = P.integer("T", 100'000, 1, 1'000'000'000);
  const auto distance = P.integer("distance", 2, 1, 1'000'000);
  const double min_fraction = P.real("min_merge_fraction", 0.95, 0.0, 1.0);
  P.finish();

  const Rational all = exact::coupling_marginal_deviation(n, p);
  Json list = Json::array();
  list.push_back(verification("coupling_marginal_all_states", {{"n", n}, {"p", p.get_str()}}, all));
  if (n >= 4) {
    list.push_back(verification("coupling_marginal_example",
                                {{"n", n}, {"p", p.get_str()}, {"C", {0}}, {"alpha", 2}, {"beta", 3}},
                                exact::coupling_marginal_deviation(n, p, 1u, 2, 3)));
  }
  Json ex;
  ex["module"] = "exact";
  ex["operation"] = "coupling_marginal_deviation";
  ex["verifications"] = list;
  ctx.results["marginals"] = ex;
  for (const auto& v : list) ctx.check(v["check"], "exact", v["pass"]);

  const double pd = p.get_d();
  std::vector<ssep::Time> merge(static_cast<std::size_t>(runs), -1);
  parallel_for(merge.size(), ctx.threads, [&](std::size_t i) {
    const ssep::CouplingState start{{}, 0, distance};
    const auto run = ssep::coupled_evolve(start, pd, derive_seed(ctx.seed, Stream::Sample, static_cast<std::int64_t>(i)),
                                          T, {false, true});
    if (run.merge_time) merge[i] = *run.merge_time;
  });
  std::vector<ssep::Time> merged;
  for (auto m : merge) {
    if (m >= 0) merged.push_back(m);
  }
  std::sort(merged.begin(), merged.end());
  const double fraction = static_cast<double>(merged.size()) / static_cast<double>(runs);
  Json mc;
  mc["module"] = "ssep";
  mc["operation"] = "coupled_evolve";
  mc["runs"] = runs;
  mc["merged"] = merged.size();
  mc["merge_fraction"] = fraction;
  if (!merged.empty()) {
    mc["median_merge_time"] = merged[merged.size() / 2];
    mc["max_merge_time"] = merged.back();
  }
  ctx.results["merging"] = mc;
  ctx.check("merge_fraction", "ssep", fraction >= min_fraction, {{"value", fraction}, {"threshold", min_fraction}});
}

void run_ssep_pk(Params& P, Context& ctx) {
  const int n = static_cast<int>(P.integer("n", 16, 7, exact::kMaxPkRing));
  const Rational p = P.rational("p", "3/10", 0, 1, true);
  const int r_max = static_cast<int>(P.integer("r_max", 2, 1, n / 4));
  P.finish();

  Json rows = Json::array();
  bool all_within = true;
  for (int r = 1; r <= r_max; ++r) {
    std::vector<int> positions;
    for (int i = 0; i < r; ++i) positions.push_back(i * n / r);
    for (unsigned mask = 0; mask < (1u << r); ++mask) {
      std::vector<int> subset;
      for (int i = 0; i < r; ++i) {
        if ((mask >> i) & 1u) subset.push_back(positions[static_cast<std::size_t>(i)]);
      }
      const int k = static_cast<int>(subset.size());
      const Rational v = exact::pk_exact(n, p, positions, subset);
      const auto [lower, upper] = exact::pk_bounds(p, r, k);
      const bool within = lower <= v && v <= upper;
      all_within = all_within && within;
      Json e;
      e["r"] = r;
      e["k"] = k;
      e["free_positions"] = positions;
      e["stir_subset"] = subset;
      e["value"] = rational_json(v);
      e["lower"] = rational_json(lower);
      e["upper"] = rational_json(upper);
      e["within_bounds"] = within;
      rows.push_back(std::move(e));
    }
  }
  Json res;
  res["module"] = "exact";
  res["operation"] = "pk_exact";
  res["n"] = n;
  res["entries"] = rows;
  ctx.results["pk"] = res;
  ctx.check("pk_within_bounds", "exact", all_within);
}

void run_walks_coalesce(Params& P, Context& ctx) {
  const double prob = P.real("prob_e1", 0.5, 0.0, 1.0);
  const auto pairs = P.integer("pairs", 100, 1, 1'000'000);
  const auto d = P.integer("distance", 2, 1, 100);
  const auto horizons = P.integers("horizons", {10, 100, 1000}, 1, 20'000);
  if (!std::is_sorted(horizons.begin(), horizons.end()) ||
      std::adjacent_find(horizons.begin(), horizons.end()) != horizons.end()) {
    throw ConfigError("horizons", "must be strictly increasing");
  }
  P.finish();

  const std::int64_t H = horizons.back();
  const Window window(0, 0, H + 2 * d, H + 2 * d);
  const LatticePoint x{d, d};
  std::vector<LatticePoint> shell;
  for (std::int64_t dx = -d; dx <= d; ++dx) {
    for (std::int64_t dy = -d; dy <= d; ++dy) {
      if (std::max(std::abs(dx), std::abs(dy)) == d) shell.push_back({dx, dy});
    }
  }
  const std::size_t nh = horizons.size();
  std::vector<std::uint8_t> coalesced(static_cast<std::size_t>(pairs) * nh), symmetric(static_cast<std::size_t>(pairs));
  std::vector<std::uint8_t> truncated(static_cast<std::size_t>(pairs));
  parallel_for(static_cast<std::size_t>(pairs), ctx.threads, [&](std::size_t i) {
    const std::uint64_t s = derive_seed(ctx.seed, Stream::Sample, static_cast<std::int64_t>(i));
    const walks::ArrowField field = walks::iid_field(window, prob, s);
    const LatticePoint y = x + shell[counter_hash(s, Stream::Sample, 0, 0) % shell.size()];
    bool sym = true, trunc = false;
    for (std::size_t h = 0; h < nh; ++h) {
      const auto a = walks::coalesce_within(field, x, y, static_cast<std::size_t>(horizons[h]));
      const auto b = walks::coalesce_within(field, y, x, static_cast<std::size_t>(horizons[h]));
      coalesced[i * nh + h] = a.coalesced ? 1 : 0;
      sym = sym && a.coalesced == b.coalesced;
      trunc = trunc || a.truncated || b.truncated;
    }
    symmetric[i] = sym ? 1 : 0;
    truncated[i] = trunc ? 1 : 0;
  });
  bool monotone = true;
  Json freq = Json::array();
  for (std::size_t h = 0; h < nh; ++h) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(pairs); ++i) {
      c += coalesced[i * nh + h];
      if (h > 0 && coalesced[i * nh + h - 1] && !coalesced[i * nh + h]) monotone = false;
    }
    freq.push_back({{"horizon", horizons[h]}, {"coalesced", c},
                    {"fraction", static_cast<double>(c) / static_cast<double>(pairs)}});
  }
  const auto sym_all = std::all_of(symmetric.begin(), symmetric.end(), [](auto v) { return v != 0; });
  Json r;
  r["module"] = "walks";
  r["operation"] = "coalesce_within";
  r["pairs"] = pairs;
  r["by_horizon"] = freq;
  r["truncated_pairs"] = std::count(truncated.begin(), truncated.end(), std::uint8_t{1});
  ctx.results["coalescence"] = r;
  ctx.check("monotone_in_horizon", "walks", monotone);
  ctx.check("symmetric", "walks", sym_all);
}

void run_walks_count(Params& P, Context& ctx) {
  const std::string sampler = P.choice("sampler", "striped", {"striped", "iid", "constant"});
  const auto L = P.integer("L", 4, 2, 64);
  if (L % 2 != 0) throw ConfigError("L", "must be even");
  const auto samples = P.integer("samples", 10'000, 1, 100'000'000);
  const double prob = P.real("prob_e1", 0.5, 0.0, 1.0);
  const auto min_distinct = P.integer("min_distinct", 0, 0, 1'000'000'000);
  const auto trials = P.integer("roundtrip_trials", 1000, 0, 10'000'000);
  P.finish();

  const walks::RotatedRect rect(L, {0, 0});
  const walks::FieldSampler fs = sampler == "striped" ? walks::striped_sampler(prob)
                                 : sampler == "iid"   ? walks::iid_sampler(prob)
                                                      : walks::constant_sampler(Arrow::Right);
  const std::size_t distinct =
      walks::count_window_configs(fs, rect, static_cast<std::size_t>(samples), ctx.seed, ctx.threads);
  Json r;
  r["module"] = "walks";
  r["operation"] = "count_window_configs";
  r["sampler"] = sampler;
  r["sites"] = rect.sites().size();
  r["distinct"] = distinct;
  if (L < 63) r["trajectory_bound"] = std::int64_t{1} << L;
  ctx.results["count"] = r;
  if (sampler == "striped" && L < 63) {
    ctx.check("distinct_within_trajectory_bound", "walks", distinct <= (std::size_t{1} << L),
              {{"distinct", distinct}, {"bound", std::int64_t{1} << L}});
  }
  if (sampler == "constant") ctx.check("constant_single_config", "walks", distinct == 1);
  if (min_distinct > 0) {
    ctx.check("distinct_at_least", "walks", distinct >= static_cast<std::size_t>(min_distinct),
              {{"distinct", distinct}, {"threshold", min_distinct}});
  }
  if (sampler == "striped") {
    const Window window = rect.bounding_window();
    std::vector<std::uint8_t> ok(static_cast<std::size_t>(trials), 0);
    parallel_for(ok.size(), ctx.threads, [&](std::size_t i) {
      const auto field = fs(window, derive_seed(ctx.seed, Stream::Stripe, static_cast<std::int64_t>(i)));
      const auto bits = walks::read_trajectory_bits(field, rect);
      ok[i] = walks::reconstruct_from_trajectory(bits, rect) == walks::restrict_to(field, rect) ? 1 : 0;
    });
    const auto good = static_cast<std::size_t>(std::count(ok.begin(), ok.end(), std::uint8_t{1}));
    Json rt;
    rt["module"] = "walks";
    rt["operation"] = "reconstruct_from_trajectory";
    rt["trials"] = trials;
    rt["exact_round_trips"] = good;
    ctx.results["round_trip"] = rt;
    ctx.check("reconstruct_round_trip", "walks", good == ok.size());
  }
}

void run_recode_check(Params& P, Context& ctx) {
  const auto trials = P.integer("trials", 10'000, 1, 10'000'000);
  const auto size = P.integer("size", 9, 1, 201);
  const double density = P.real("density", 0.2, 0.0, 1.0);
  const double prob = P.real("prob_e1", 0.5, 0.0, 1.0);
  P.finish();

  const std::int64_t lo = -(size / 2);
  const Window window(lo, lo, lo + size - 1, lo + size - 1);
  const LatticePoint shift{3, -2};
  enum Outcome : std::uint8_t { Empty = 0, Good = 1, Bad = 2 };
  std::vector<std::uint8_t> preserve(static_cast<std::size_t>(trials)), determ(preserve.size()),
      nearest(preserve.size()), equiv(preserve.size());
  parallel_for(preserve.size(), ctx.threads, [&](std::size_t i) {
    const std::uint64_t s = derive_seed(ctx.seed, Stream::Sample, static_cast<std::int64_t>(i));
    const auto field = walks::iid_field(window, prob, derive_seed(s, Stream::Field, 0));
    const auto marks = recode::random_indicator(window, density, derive_seed(s, Stream::Marker, 0));
    if (marks.count() == 0) {
      const auto rec = recode::recode_field(field, marks);
      const auto v = rec.undefined_count() == window.size() ? Empty : Bad;
      preserve[i] = determ[i] = nearest[i] = equiv[i] = v;
      return;
    }
    const auto rec = recode::recode_field(field, marks);

    bool keep = true;
    for (std::size_t j = 0; j < window.size(); ++j) {
      if (marks.flags()[j]) keep = keep && rec.arrows[j] == field.arrows()[j];
    }
    preserve[i] = keep ? Good : Bad;

    // Same marks and marked arrows, fresh arrows elsewhere.
    const auto other = walks::iid_field(window, prob, derive_seed(s, Stream::Field, 1));
    std::vector<Arrow> mixed(field.arrows().begin(), field.arrows().end());
    for (std::size_t j = 0; j < window.size(); ++j) {
      if (!marks.flags()[j]) mixed[j] = other.arrows()[j];
    }
    const auto rec2 = recode::recode_field(walks::ArrowField(window, std::move(mixed)), marks);
    determ[i] = rec2.arrows == rec.arrows ? Good : Bad;

    bool near_ok = true;
    std::vector<LatticePoint> marked;
    for (std::size_t j = 0; j < window.size(); ++j) {
      if (marks.flags()[j]) marked.push_back(window.point(j));
    }
    for (std::size_t j = 0; j < window.size() && near_ok; ++j) {
      const LatticePoint z = window.point(j);
      LatticePoint best = marked.front();
      for (const auto& m : marked) {
        const auto dm = linf_distance(m, z), db = linf_distance(best, z);
        if (dm < db || (dm == db && m < best)) best = m;
      }
      near_ok = recode::nearest_marked(marks, z) == best;
    }
    nearest[i] = near_ok ? Good : Bad;

    const Window moved = window.translated(shift);
    std::vector<Arrow> arrows(field.arrows().begin(), field.arrows().end());
    const auto rec3 = recode::recode_field(walks::ArrowField(moved, std::move(arrows)),
                                           recode::SiteIndicator(moved, marks.flags()));
    equiv[i] = rec3.arrows == rec.arrows ? Good : Bad;
  });
  const auto tally = [&](const std::vector<std::uint8_t>& v, const std::string& name) {
    const auto good = std::count(v.begin(), v.end(), std::uint8_t{Good});
    const auto bad = std::count(v.begin(), v.end(), std::uint8_t{Bad});
    ctx.check(name, "recode", bad == 0, {{"holds", good}, {"fails", bad}});
  };
  const auto empty = std::count(preserve.begin(), preserve.end(), std::uint8_t{Empty});
  tally(preserve, "marked_sites_preserved");
  tally(determ, "determined_by_marked_sites");
  tally(nearest, "nearest_marked_is_closest_lex_min");
  tally(equiv, "translation_equivariant");

  const Window small(-2, -2, 2, 2);
  std::vector<bool> flags(small.size(), false);
  flags[small.index({1, 0})] = true;
  flags[small.index({0, 1})] = true;
  const auto tie = recode::nearest_marked(recode::SiteIndicator(small, flags), {0, 0});
  std::vector<bool> flags2(small.size(), false);
  for (LatticePoint q : {LatticePoint{2, 0}, LatticePoint{0, 2}, LatticePoint{-1, -1}}) flags2[small.index(q)] = true;
  const auto closest = recode::nearest_marked(recode::SiteIndicator(small, flags2), {0, 0});
  Json r;
  r["module"] = "recode";
  r["operation"] = "recode_field";
  r["trials"] = trials;
  r["trials_without_marks"] = empty;
  r["tie_case"] = {tie.x, tie.y};
  r["closest_case"] = {closest.x, closest.y};
  ctx.results["recode"] = r;
  ctx.check("tie_breaks_to_lex_min", "recode", tie == LatticePoint{0, 1});
  ctx.check("closest_wins", "recode", closest == LatticePoint{-1, -1});
}

std::vector<std::vector<double>> pk_table(int ring, const Rational& p, int r_max) {
  std::vector<std::vector<double>> table(static_cast<std::size_t>(r_max) + 1);
  table[0] = {1.0};
  for (int r = 1; r <= r_max; ++r) {
    std::vector<int> positions;
    for (int i = 0; i < r; ++i) positions.push_back(i * ring / r);
    for (int k = 0; k <= r; ++k) {
      const std::vector<int> subset(positions.begin(), positions.begin() + k);
      table[static_cast<std::size_t>(r)].push_back(exact::pk_exact(ring, p, positions, subset).get_d());
    }
  }
  return table;
}

std::string block_label(entropy::BlockCode code, int m, int rows) {
  std::string s;
  for (int r = rows - 1; r >= 0; --r) {
    for (int c = 0; c < m; ++c) s += ((code >> (r * m + c)) & 1u) ? '1' : '0';
    if (r > 0) s += '/';
  }
  return s;
}

void run_entropy_blocks(Params& P, Context& ctx) {
  entropy::BlockSamplingParams bp;
  bp.width = P.integer("W", 64, 8, 1 << 20);
  const Rational p = P.rational("p", "3/10", 0, 1, true);
  bp.p = p.get_d();
  bp.rho = P.real("rho", 0.5, 0.0, 1.0);
  bp.m = static_cast<int>(P.integer("m", 8, 1, entropy::kMaxBlockSites));
  const int n = static_cast<int>(P.integer("n", 2, 1, entropy::kMaxBlockSites - 1));
  if (bp.m * (n + 1) > entropy::kMaxBlockSites) throw ConfigError("n", "m * (n + 1) must not exceed 24");
  if (bp.width < bp.m + 4) throw ConfigError("W", "must be at least m + 4");
  bp.rows = n + 1;
  bp.samples = static_cast<std::uint64_t>(P.integer("samples", 1'000'000, 1, 100'000'000));
  bp.replicas = static_cast<std::size_t>(P.integer("replicas", 20, 1, 100'000));
  bp.burn_in = P.integer("burn_in", 100, 0, 1'000'000);
  const int ring = static_cast<int>(P.integer("pk_ring", 16, 7, exact::kMaxPkRing));
  const double margin = P.real("margin_se", 5.0, 0.0, 1e6);
  const double ratio = P.real("free_ratio", 0.9, 0.0, 1e6);
  const auto resamples = P.integer("resamples", 200, 2, 100'000);
  const bool export_counts = P.boolean("export_counts", false);
  const Units units = read_units(P);
  const int r_max = bp.m >= 7 ? (bp.m - 6 + 3) / 4 : 0;
  if (4 * r_max > ring) throw ConfigError("pk_ring", "too small for " + std::to_string(r_max) + " free sites");
  P.finish();

  bp.seed = ctx.seed;
  bp.threads = ctx.threads;
  const auto counts = entropy::sample_ssep_blocks(bp);
  const entropy::BootstrapOptions boot{static_cast<std::size_t>(resamples), derive_seed(ctx.seed, Stream::Bootstrap, 0)};
  const auto joint = entropy::block_entropy(counts, entropy::Estimator::BiasCorrected, boot);
  const auto cond = entropy::conditional_entropy(counts, bp.m, n, entropy::Estimator::BiasCorrected, boot);
  const auto cond_plain = entropy::conditional_entropy(counts, bp.m, n, entropy::Estimator::PlugIn, boot);
  const auto table = pk_table(ring, p, r_max);
  const double contribution = entropy::free_row_contribution(counts.pooled(), bp.m, n, table);

  Json r;
  r["module"] = "entropy";
  r["operation"] = "conditional_entropy";
  r["shape"] = {{"m", bp.m}, {"n", n}};
  r["joint_block"] = estimate_json(joint, units);
  r["conditional"] = estimate_json(cond, units);
  r["conditional_plug_in"] = estimate_json(cond_plain, units);
  ctx.results["entropy"] = r;
  Json f;
  f["module"] = "entropy";
  f["operation"] = "free_row_contribution";
  f["pk_ring"] = ring;
  f["pk"] = table;
  f["units"] = units.name;
  f["value"] = contribution * units.scale;
  ctx.results["free_row"] = f;

  ctx.check("conditional_positive", "entropy", cond.value > margin * cond.std_error && cond.value > 0,
            {{"value", cond.value}, {"std_error", cond.std_error}, {"margin_se", margin}});
  ctx.check("conditional_above_free_row", "entropy", cond.value >= ratio * contribution,
            {{"value", cond.value}, {"free_row", contribution}, {"ratio", ratio}});
  ctx.check("conditional_below_alphabet", "entropy", cond_plain.value <= bp.m * std::log(2.0) + 1e-12,
            {{"value", cond_plain.value}, {"bound", bp.m * std::log(2.0)}});
  if (export_counts) {
    const int m = bp.m, rows = bp.rows;
    ctx.artifacts.push_back(
        {"counts.csv", counts.pooled().to_csv([m, rows](entropy::BlockCode c) { return block_label(c, m, rows); })});
  }
}

void run_entropy_trajectory(Params& P, Context& ctx) {
  const auto particles = P.integer("particles", 100, 1, 100'000);
  const auto steps = P.integer("steps", 100'000, 10, 100'000'000);
  const double p = P.real("p", 0.3, 0.0, 1.0, true);
  const double rho = P.real("rho", 0.5, 1e-6, 1.0);
  const int len = static_cast<int>(P.integer("block_len", 8, 1, entropy::kMaxBlockSites));
  const auto segments = P.integer("segments", 20, 2, 100'000);
  const double margin = P.real("margin_se", 5.0, 0.0, 1e6);
  const auto resamples = P.integer("resamples", 200, 2, 100'000);
  const bool control = P.boolean("control", true);
  const int pm = static_cast<int>(P.integer("predict_m", 12, 1, entropy::kMaxBlockSites));
  const double peps = P.real("predict_eps", 0.1, 0.0, 1.0, true);
  const bool export_traj = P.boolean("export_trajectory", false);
  const Units units = read_units(P);
  if (particles * steps > 200'000'000) throw ConfigError("steps", "particles * steps above 2e8");
  P.finish();

  // Tagged particles: the first occupied sites of a Bernoulli(rho) line.
  const std::uint64_t occ = derive_seed(ctx.seed, Stream::Occupancy, 0);
  const BernoulliCut cut(rho);
  std::vector<ssep::Site> starts;
  for (ssep::Site x = 0; static_cast<std::int64_t>(starts.size()) < particles; ++x) {
    if (cut(counter_hash(occ, Stream::Occupancy, x, 0))) starts.push_back(x);
  }
  const auto real = ssep::StirringRealization::line(ctx.seed, p, 0, steps);
  std::vector<std::vector<ssep::Step>> symbols(starts.size());
  std::vector<entropy::EntropyEstimate> est(starts.size());
  parallel_for(starts.size(), ctx.threads, [&](std::size_t i) {
    symbols[i] = ssep::trajectory_symbols(ssep::track_forward(real, starts[i], 0, steps));
    est[i] = entropy::trajectory_entropy_rate(
        symbols[i], len, static_cast<std::size_t>(segments), entropy::Estimator::BiasCorrected,
        {static_cast<std::size_t>(resamples), derive_seed(ctx.seed, Stream::Bootstrap, static_cast<std::int64_t>(i))});
  });

  Json list = Json::array();
  bool all_positive = true, any_insufficient = false;
  double min_value = est.front().value;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const bool ok = est[i].value > 0 && est[i].value > margin * est[i].std_error;
    all_positive = all_positive && ok;
    any_insufficient = any_insufficient || est[i].insufficient;
    min_value = std::min(min_value, est[i].value);
    Json e = estimate_json(est[i], units);
    e["start"] = starts[i];
    list.push_back(std::move(e));
  }
  Json r;
  r["module"] = "entropy";
  r["operation"] = "trajectory_entropy_rate";
  r["block_len"] = len;
  r["units"] = units.name;
  r["min_value"] = min_value * units.scale;
  r["any_insufficient_length"] = any_insufficient;
  r["trajectories"] = list;
  ctx.results["trajectory_entropy"] = r;
  ctx.check("all_trajectories_positive", "entropy", all_positive, {{"margin_se", margin}});

  const auto pred = entropy::predictable_fraction(symbols, pm, peps);
  Json pr;
  pr["module"] = "entropy";
  pr["operation"] = "predictable_fraction";
  pr["m"] = pm;
  pr["eps"] = peps;
  pr["set_size"] = pred.size;
  pr["covered"] = pred.covered;
  pr["budget"] = pred.budget;
  ctx.results["predictable"] = pr;
  ctx.check("not_predictable", "entropy", !pred.within_budget(),
            {{"set_size", pred.size}, {"budget", pred.budget}});

  if (control) {
    const auto frozen = ssep::StirringRealization::line(ctx.seed, 0.0, 0, steps);
    const auto sym = ssep::trajectory_symbols(ssep::track_forward(frozen, starts.front(), 0, steps));
    const auto c = entropy::trajectory_entropy_rate(sym, len, static_cast<std::size_t>(segments),
                                                    entropy::Estimator::BiasCorrected,
                                                    {static_cast<std::size_t>(resamples), 0});
    Json cj = estimate_json(c, units);
    cj["module"] = "entropy";
    cj["operation"] = "trajectory_entropy_rate";
    cj["p"] = 0.0;
    ctx.results["control"] = cj;
    ctx.check("frozen_control_zero", "entropy", c.value == 0.0, {{"value", c.value}});
  }
  if (export_traj) {
    ctx.artifacts.push_back({"trajectory.csv", ssep::trajectory_csv(ssep::compose_path(starts.front(), symbols.front()), 0)});
  }
}

using Runner = void (*)(Params&, Context&);

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> table = {
      {"ssep-run", run_ssep_run},
      {"ssep-invariance", run_ssep_invariance},
      {"ssep-duality", run_ssep_duality},
      {"ssep-coupling", run_ssep_coupling},
      {"ssep-pk", run_ssep_pk},
      {"walks-coalesce", run_walks_coalesce},
      {"walks-count", run_walks_count},
      {"recode-check", run_recode_check},
      {"entropy-blocks", run_entropy_blocks},
      {"entropy-trajectory", run_entropy_trajectory},
  };
  return table;
}

Json parse_scalar(const std::string& text) {
  if (text.empty()) return "";
  try {
    return Json::parse(text);
  } catch (const Json::parse_error&) {
    return text;
  }
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, fn] : runners()) v.push_back(name);
    return v;
  }();
  return names;
}

Json parse_config(std::string_view text) {
  const std::string body = trim(text);
  if (!body.empty() && body.front() == '{') {
    try {
      return Json::parse(body);
    } catch (const Json::parse_error& e) {
      throw ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
  }
  Json out = Json::object();
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno), "empty key");
    Json* node = &out;
    std::size_t start = 0;
    for (std::size_t dot = key.find('.'); dot != std::string::npos; dot = key.find('.', start)) {
      const std::string part = key.substr(start, dot - start);
      Json& child = (*node)[part];
      if (child.is_null()) child = Json::object();
      if (!child.is_object()) throw ConfigError(key, "conflicts with an earlier scalar");
      node = &child;
      start = dot + 1;
    }
    (*node)[key.substr(start)] = parse_scalar(trim(std::string_view(t).substr(eq + 1)));
  }
  return out;
}

Report run_experiment(const Json& config, const RunOptions& options) {
  if (!config.is_object()) throw ConfigError("config", "must be an object");
  const auto name_it = config.find("experiment");
  if (name_it == config.end() || !name_it->is_string()) throw ConfigError("experiment", "missing experiment name");
  const std::string name = name_it->get<std::string>();
  const auto runner = runners().find(name);
  if (runner == runners().end()) throw ConfigError("experiment", "unknown experiment '" + name + "'");

  Context ctx;
  if (options.seed) {
    ctx.seed = *options.seed;
  } else {
    const auto s = config.find("seed");
    if (s == config.end()) throw ConfigError("seed", "is required");
    if (s->is_number_unsigned()) {
      ctx.seed = s->get<std::uint64_t>();
    } else if (s->is_number_integer() && s->get<std::int64_t>() >= 0) {
      ctx.seed = static_cast<std::uint64_t>(s->get<std::int64_t>());
    } else {
      throw ConfigError("seed", "must be a nonnegative 64-bit integer");
    }
  }
  ctx.threads = std::max(1u, options.threads);

  Params params(config);
  for (const char* key : {"experiment", "seed", "out", "threads", "format"}) params.allow(key);
  runner->second(params, ctx);

  Report report;
  Json& doc = report.document;
  doc["schema"] = kSchemaVersion;
  doc["experiment"] = name;
  Json resolved;
  resolved["experiment"] = name;
  resolved["seed"] = ctx.seed;
  for (const auto& [k, v] : params.resolved().items()) resolved[k] = v;
  doc["config"] = resolved;
  doc["results"] = ctx.results;
  doc["checks"] = ctx.checks;
  doc["pass"] = ctx.pass;
  report.pass = ctx.pass;
  report.artifacts = std::move(ctx.artifacts);
  return report;
}

std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string render_json(const Report& report, const std::string& timestamp) {
  Json out;
  out["header"] = {{"timestamp", timestamp}};
  for (const auto& [k, v] : report.document.items()) out[k] = v;
  return out.dump(2) + "\n";
}

std::string render_csv(const Report& report, const std::string& timestamp) {
  const auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  std::ostringstream out;
  out << "key,value\n";
  out << "/header/timestamp," << timestamp << '\n';
  const Json flat = report.document.flatten();
  for (const auto& [k, v] : flat.items()) {
    out << quote(k) << ',' << quote(v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
  }
  return out.str();
}

}  // namespace stirwalk::experiment
