#include <doctest.h>

#include <stdexcept>

#include "stirwalk/exact.hpp"

using namespace stirwalk::exact;

namespace {

Rational q(const char* s) { return parse_rational(s); }

Mask rotate(Mask m, int n) { return ((m << 1) | (m >> (n - 1))) & ((Mask{1} << n) - 1); }

}  // namespace

TEST_CASE("parse_rational") {
  CHECK(q("3/10") == Rational(3, 10));
  CHECK(q("0.3") == Rational(3, 10));
  CHECK(q("6/20") == Rational(3, 10));
  CHECK(q("2") == Rational(2));
  CHECK(q("-0.25") == Rational(-1, 4));
  CHECK_THROWS_AS(q("1/0"), std::invalid_argument);
  CHECK_THROWS_AS(q("abc"), std::invalid_argument);
  CHECK(to_string(Rational(7, 24)) == "7/24");
}

TEST_CASE("three-ring matching oracle") {
  const auto d = matchings_distribution(3, Rational(1, 2));
  CHECK(d.probability(0b001) == Rational(7, 24));
  CHECK(d.probability(0b010) == Rational(7, 24));
  CHECK(d.probability(0b100) == Rational(7, 24));
  CHECK(d.probability(0) == Rational(1, 8));
  CHECK(d.probability(0b011) == 0);
  CHECK(d.total() == 1);
  CHECK(d.support() == std::vector<Mask>{0, 1, 2, 4});
}

TEST_CASE("matching distribution properties") {
  const auto frozen = matchings_distribution(6, 0);
  CHECK(frozen.probability(0) == 1);
  CHECK(frozen.support().size() == 1);
  for (int n : {2, 4, 5, 7}) {
    for (const char* p : {"1/10", "3/10", "9/10"}) {
      const auto d = matchings_distribution(n, q(p));
      CHECK(d.total() == 1);
      for (Mask m : d.support()) {
        CHECK(d.probability(rotate(m, n)) == d.probability(m));
        if (n > 2) CHECK((m & rotate(m, n)) == 0);
      }
      const auto e0 = edge_stir_probability(d, 0);
      for (int e = 1; e < n; ++e) CHECK(edge_stir_probability(d, e) == e0);
    }
  }
  CHECK_THROWS_AS(matchings_distribution(1, q("1/2")), std::invalid_argument);
  CHECK_THROWS_AS(matchings_distribution(13, q("1/2")), std::invalid_argument);
  CHECK_THROWS_AS(matchings_distribution(4, 1), std::invalid_argument);
}

TEST_CASE("firing outcomes agree with the matching distribution") {
  const auto d = matchings_distribution(5, q("3/10"));
  std::vector<Rational> acc(32, 0);
  Rational total = 0;
  for (const auto& o : firing_outcomes(5, q("3/10"))) {
    CHECK((o.stirred & ~o.fired) == 0);
    acc[o.stirred] += o.weight;
    total += o.weight;
  }
  CHECK(total == 1);
  for (Mask m = 0; m < 32; ++m) CHECK(acc[m] == d.probability(m));
}

TEST_CASE("apply_matching") {
  CHECK(apply_matching(0b101, 0b001, 3) == 0b110);
  CHECK(apply_matching(0b001, 0b100, 3) == 0b100);
  CHECK(apply_matching(0b1111, 0b0101, 4) == 0b1111);
}

TEST_CASE("kernel basics") {
  const auto id = config_kernel(4, 0);
  for (Mask s = 0; s < 16; ++s) CHECK(id.at(s, s) == 1);
  for (int n : {3, 5, 6}) {
    const auto k = config_kernel(n, q("3/10"));
    for (Mask s = 0; s < (Mask{1} << n); ++s) {
      Rational sum = 0;
      for (const auto& [to, v] : k.row(s)) {
        sum += v;
        CHECK(__builtin_popcount(to) == __builtin_popcount(s));
      }
      CHECK(sum == 1);
    }
  }
  CHECK_THROWS_AS(config_kernel(9, q("1/2")), std::invalid_argument);
}

TEST_CASE("one-particle sector is the lazy symmetric walk") {
  const int n = 6;
  const auto k = config_kernel(n, q("3/10"));
  const auto step = edge_stir_probability(matchings_distribution(n, q("3/10")), 0);
  for (int x = 0; x < n; ++x) {
    const Mask s = Mask{1} << x;
    CHECK(k.at(s, Mask{1} << ((x + 1) % n)) == step);
    CHECK(k.at(s, Mask{1} << ((x + n - 1) % n)) == step);
    CHECK(k.at(s, s) == 1 - 2 * step);
  }
}

TEST_CASE("kernel csv") {
  const auto csv = config_kernel(2, q("1/2")).to_csv();
  CHECK(csv.rfind("eta,eta_next,num,den\n", 0) == 0);
  CHECK(csv.find("1,2,") != std::string::npos);
}

TEST_CASE("Bernoulli and exchangeable measures are invariant") {
  for (int n : {2, 4, 6}) {
    for (const char* p : {"0", "1/10", "3/10"}) {
      for (const char* rho : {"3/10", "1/2", "1"}) CHECK(bernoulli_invariance_deviation(n, q(p), q(rho)) == 0);
      const auto k = config_kernel(n, q(p));
      for (int c = 0; c <= n; ++c) CHECK(invariance_deviation(k, sector_uniform_measure(n, c)) == 0);
    }
  }
  // A non-exchangeable start is not invariant.
  const auto k = config_kernel(4, q("3/10"));
  std::vector<Rational> point(16, 0);
  point[0b0011] = 1;
  CHECK(invariance_deviation(k, point) > 0);
}

TEST_CASE("duality") {
  const Rational p = q("3/10");
  for (Mask eta = 0; eta < 16; ++eta) {
    const auto empty = duality_check(4, p, eta, 0, 3);
    CHECK(empty.lhs == 1);
    CHECK(empty.rhs == 1);
    for (Mask A = 0; A < 16; ++A) {
      const auto now = duality_check(4, p, eta, A, 0);
      const Rational ind = (eta & A) == A ? 1 : 0;
      CHECK(now.lhs == ind);
      CHECK(now.rhs == ind);
    }
  }
  const auto all = duality_exhaustive(4, p, 3);
  CHECK(all.max_difference == 0);
  CHECK(all.cases == 16 * 16 * 4);
  CHECK(duality_exhaustive(5, q("1/10"), 2).max_difference == 0);
  CHECK_THROWS_AS(duality_check(7, p, 0, 0, 1), std::invalid_argument);
}

TEST_CASE("dual set law preserves cardinality") {
  const auto law = dual_set_law(5, q("3/10"), 0b00101, 3);
  Rational total = 0;
  for (Mask B = 0; B < 32; ++B) {
    if (law[B] != 0) CHECK(__builtin_popcount(B) == 2);
    total += law[B];
  }
  CHECK(total == 1);
}

TEST_CASE("hat mu invariance") {
  const Rational p = q("3/10"), half = q("1/2");
  for (int t = 0; t <= 3; ++t) {
    CHECK(hat_mu_invariance(5, p, half, 0, t).mu_hat == 1);
    for (Mask A : {0b00011u, 0b00101u, 0b10001u, 0b01010u}) {
      const auto r = hat_mu_invariance(5, p, half, A, t);
      CHECK(r.mu_hat == Rational(1, 4));
      CHECK(r.reference == Rational(1, 4));
      CHECK(r.difference == 0);
    }
    CHECK(hat_mu_invariance(5, p, q("3/10"), 0b00111, t).mu_hat ==
          hat_mu_invariance(5, p, q("3/10"), 0b01011, t).mu_hat);
  }
}

TEST_CASE("free particle stirring probabilities") {
  const Rational p = q("3/10");
  CHECK(pk_exact(16, 0, {0}, {}) == 1);
  CHECK(pk_exact(16, 0, {0}, {0}) == 0);
  CHECK(pk_exact(16, p, {0}, {0}) == q("33600000043046721/80000000000000000"));
  CHECK(pk_exact(16, p, {0}, {}) == q("46399999956953279/80000000000000000"));
  CHECK(pk_exact(16, p, {0, 8}, {0}) == q("2786703200542192011/11440000000000000000"));
  CHECK(pk_exact(16, p, {0, 8}, {0, 8}) == q("504524201403372273/2860000000000000000"));
  CHECK(pk_exact(16, p, {0, 8}, {}) == q("1924248396651063443/5720000000000000000"));
  CHECK(pk_exact(16, p, {0, 4}, {0}) == q("2780338556773240179/11440000000000000000"));
  CHECK(pk_exact(16, p, {0, 4}, {0, 4}) == q("506115362345610231/2860000000000000000"));
  CHECK(pk_exact(16, p, {0, 4}, {}) == q("1927430718535539359/5720000000000000000"));
  // Rotation invariance.
  CHECK(pk_exact(16, p, {3, 11}, {11}) == pk_exact(16, p, {0, 8}, {0}));

  const auto [lo, hi] = pk_bounds(p, 1, 1);
  CHECK(lo == q("0.294"));
  CHECK(hi == q("0.51"));
  CHECK(pk_bounds(p, 1, 0).first == q("0.49"));
  for (int r = 1; r <= 2; ++r) {
    const std::vector<int> pos = r == 1 ? std::vector<int>{0} : std::vector<int>{0, 8};
    for (int k = 0; k <= r; ++k) {
      const auto v = pk_exact(16, p, pos, std::vector<int>(pos.begin(), pos.begin() + k));
      const auto [l, u] = pk_bounds(p, r, k);
      CHECK(l <= v);
      CHECK(v <= u);
    }
  }
  CHECK_THROWS_AS(pk_exact(16, p, {0, 2}, {}), std::invalid_argument);
  CHECK_THROWS_AS(pk_exact(16, p, {0}, {5}), std::invalid_argument);
}

TEST_CASE("coupling marginals are exact") {
  const Rational p = q("3/10");
  CHECK(coupling_marginal_deviation(5, p, 0b00001, 2, 3) == 0);
  CHECK(coupling_marginal_deviation(5, p, 0, 0, 2) == 0);
  CHECK(coupling_marginal_deviation(5, p) == 0);
  CHECK(coupling_marginal_deviation(4, q("1/10")) == 0);
  CHECK_THROWS_AS(coupling_marginal_deviation(5, q("1/2"), 0, 0, 2), std::invalid_argument);
  CHECK_THROWS_AS(coupling_marginal_deviation(5, p, 0b00100, 2, 3), std::invalid_argument);
  CHECK_THROWS_AS(coupling_marginal_deviation(5, p, 0, 2, 2), std::invalid_argument);
}
