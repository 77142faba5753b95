#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "metatrap/hitting.hpp"
#include "metatrap/hpg.hpp"
#include "metatrap/models.hpp"
#include "oracles.hpp"

using namespace metatrap;

namespace {

double factorial(std::size_t k) { return std::tgamma(static_cast<double>(k) + 1.0); }

}  // namespace

TEST_SUITE("models") {

TEST_CASE("birth-death construction") {
  const std::size_t n = 100;
  const auto bd = build_birth_death(n);
  const Vector pi = oracle::bd_stationary(n);
  for (std::size_t x = 0; x < n; ++x)
    CHECK(std::abs(pi[x] * bd.entry(x, x + 1) - pi[x + 1] * bd.entry(x + 1, x)) <= 1e-12 * pi[x]);
  CHECK(std::abs(pi[0] / pi[50] - 125.0) <= 1e-10);
  // Drift towards 0 below n/2, except at the ends where w(0) < w(1).
  CHECK(bd.entry(0, 1) == 1.0);
  CHECK(std::abs(bd.entry(1, 0) - std::pow(0.99, 1.5)) <= 1e-15);
  CHECK(std::abs(bd.entry(n - 1, n) - std::pow(0.99, 1.5)) <= 1e-15);
  for (std::size_t x = 2; x < n / 2; ++x) {
    CHECK(bd.entry(x, x + 1) < 1.0);
    CHECK(bd.entry(x, x - 1) == 1.0);
  }
  for (std::size_t x = n / 2 + 1; x + 1 < n; ++x) {
    CHECK(bd.entry(x, x + 1) == 1.0);
    CHECK(bd.entry(x, x - 1) < 1.0);
  }
  CHECK_THROWS_AS(build_birth_death(7), Error);
  CHECK_THROWS_AS(build_birth_death(2), Error);
}

TEST_CASE("normalization scale") {
  // n^{3/2} Z(n) increases to 2 zeta(3/2) + 2 (the two end states each add n^{-3/2}).
  const double limit = 2 * 2.6123753486854883 + 2;
  double previous = 0.0;
  for (std::size_t n : {100, 400, 1600, 6400}) {
    const double scaled = birth_death_normalization(n) * std::pow(double(n), 1.5);
    CHECK(scaled < limit);
    CHECK(scaled > previous);
    previous = scaled;
  }
  CHECK(limit - previous < 1e-3);
  CHECK(std::abs(birth_death_normalization(10) - birth_death_weights(10).sum()) <= 1e-15);
}

TEST_CASE("reflected birth-death chain") {
  const auto half = build_birth_death_reflected(40, 20);
  REQUIRE(half.state_count() == 21);
  const auto full = build_birth_death(40);
  for (std::size_t x = 0; x < 20; ++x) {
    CHECK(half.entry(x, x + 1) == full.entry(x, x + 1));
    CHECK(half.entry(x + 1, x) == full.entry(x + 1, x));
  }
}

TEST_CASE("projected shuffle kernel") {
  const auto p = build_tiar_projection(5);
  const Matrix m(p.matrix());
  for (int j = 0; j < 5; ++j) CHECK(m(0, j) == 0.2);
  CHECK(m(3, 2) == 0.2);
  CHECK(m(3, 3) == doctest::Approx(0.6));
  CHECK(m(3, 4) == 0.2);
  CHECK(m(3, 1) == 0.0);
  CHECK(m(1, 0) == 0.2);
  CHECK(tiar_projection_row(5, 2) == std::vector<long long>{0, 1, 2, 1, 1});
  for (std::size_t n = 2; n <= 50; ++n) {
    const Matrix k(build_tiar_projection(n).matrix());
    CHECK((k.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-14);
  }
  const auto cont = build_tiar_projection(5, TimeKind::Continuous);
  CHECK(cont.is_continuous());
  CHECK(cont.entry(3, 4) == 0.2);
}

TEST_CASE("projected shuffle stationary law") {
  for (std::size_t n = 2; n <= 30; ++n) {
    const auto pi = stationary_measure(build_tiar_projection(n));
    const Vector exact = tiar_projection_stationary(n);
    CHECK(std::abs(exact[0] - 1.0 / factorial(n)) <= 1e-12);
    for (std::size_t k = 1; k < n; ++k) CHECK(std::abs(exact[k] - double(n - k) / factorial(n - k + 1)) <= 1e-12 * exact[k]);
    CHECK((pi.weights() - exact).cwiseAbs().maxCoeff() <= 1e-12);
    // Cumulative mass of {0..k} is 1/(n-k)!.
    double cum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      cum += pi[k];
      CHECK(std::abs(cum - 1.0 / factorial(n - k)) <= 1e-12);
    }
  }
}

TEST_CASE("full shuffle") {
  const auto full3 = build_tiar_full(3);
  REQUIRE(full3.state_count() == 6);
  CHECK(full3.labels().front() == "123");
  CHECK(full3.labels().back() == "321");
  const Matrix m(full3.matrix());
  for (int i = 0; i < 6; ++i) {
    CHECK(std::abs(m.row(i).sum() - 1.0) <= 1e-15);
    CHECK(std::abs(m.col(i).sum() - 1.0) <= 1e-15);
    // Position 1 leaves the deck unchanged; 2 and 3 give two distinct decks.
    CHECK(m(i, i) == doctest::Approx(1.0 / 3));
    CHECK((m.row(i).array() > 0).count() == 3);
  }
  // 231: top card 2 to position 3 gives 312.
  CHECK(m(3, 4) == doctest::Approx(1.0 / 3));
  for (std::size_t n : {3, 4, 5}) {
    const auto f = build_tiar_full(n);
    const auto pi = stationary_measure(f);
    CHECK((pi.weights().array() - 1.0 / factorial(n)).abs().maxCoeff() <= 1e-12);
  }
  CHECK_THROWS_WITH_AS(build_tiar_full(9), doctest::Contains("TooLarge"), Error);
}

TEST_CASE("last descent") {
  CHECK(last_descent({1, 2, 3, 4}) == 0);
  CHECK(last_descent({2, 1, 3, 4}) == 1);
  CHECK(last_descent({1, 3, 2, 4}) == 2);
  CHECK(last_descent({4, 3, 2, 1}) == 3);
  CHECK(last_descent({2, 3, 4, 1}) == 3);
}

TEST_CASE("lumping onto the last descent") {
  for (std::size_t n = 3; n <= 7; ++n) {
    const auto full = build_tiar_full(n);
    const auto res = project_and_verify_lumping(full, n);
    CHECK(res.lumps);
    CHECK(res.max_discrepancy == 0.0);
    CHECK(res.rows_checked == static_cast<std::size_t>(factorial(n)));
  }
  // The identity deck (state 0) moves to last descent k - 1 for top-card position k.
  const auto full = build_tiar_full(5);
  const Matrix row = Matrix(full.matrix()).row(0);
  std::vector<double> pushed(5, 0.0);
  for (Eigen::Index j = 0; j < row.cols(); ++j) {
    std::vector<int> perm;
    for (char ch : full.labels()[static_cast<std::size_t>(j)]) perm.push_back(ch - '0');
    pushed[last_descent(perm)] += row(0, j);
  }
  for (double v : pushed) CHECK(v == doctest::Approx(0.2));
}

TEST_CASE("lumping violations name the permutation") {
  // A doubly stochastic perturbation of the n = 3 shuffle that breaks lumpability.
  const auto full = build_tiar_full(3);
  Matrix m(full.matrix());
  m(0, 0) -= 1.0 / 3;
  m(0, 5) += 1.0 / 3;
  m(5, 5) += 1.0 / 3;
  m(5, 0) = 0.0;
  for (int j = 0; j < 6; ++j)
    if (j != 5 && m(5, j) > 0) {
      m(5, j) -= 1.0 / 3;
      break;
    }
  const FiniteChain bent(TimeKind::Discrete, m.sparseView(0.0, 0.0), full.labels());
  CHECK_THROWS_WITH_AS(project_and_verify_lumping(bent, 3), doctest::Contains("permutation 123"), Error);
}

TEST_CASE("local-time estimates for the projected shuffle") {
  for (std::size_t n = 2; n <= 12; ++n) {
    const auto rows = xik0_bound_check(n);
    REQUIRE(rows.size() == n - 1);
    CHECK(std::abs(rows[0].probability - 1.0 / n) <= 1e-12);
    CHECK(std::abs(rows[0].bound - 1.0 / n) <= 1e-12);
    for (const auto &r : rows) {
      CHECK(r.ok);
      CHECK(r.probability <= r.bound * (1 + 1e-12));
      CHECK(r.E >= r.closed_form_rhs * (1 - 1e-12));
      if (r.k >= 2) CHECK(r.E >= r.recursion_rhs * (1 - 1e-12));
    }
  }
  CHECK(std::abs(xik0_bound_check(4)[0].probability - 0.25) <= 1e-12);
}

TEST_CASE("escape bound for the projected shuffle") {
  for (std::size_t n = 8; n <= 12; ++n) {
    const auto chain = build_tiar_projection(n);
    const auto part = TrapPartition::from_target(n, {0});
    const double R = 4.0 * n * std::log(double(n));
    const auto cert = certify(chain, part, HpGParameters{R, 0.5, {}});
    CHECK(cert.applicable);
    CHECK(cert.f <= 1.5 * R * n * std::log(double(n)) / factorial(n));
  }
}

TEST_CASE("birth-death asymptotics table") {
  const auto table = birth_death_asymptotics_check({100, 400});
  REQUIRE(table.rows.size() == 2);
  const auto &r = table.rows[0];
  CHECK(r.up_target == 10);
  CHECK(r.x == 10);
  const auto bd = build_birth_death(100);
  CHECK(std::abs(r.up_time - mean_hitting_time(bd, 0, {10})) <= 1e-9 * r.up_time);
  CHECK(std::abs(r.crossing_probability - hitting_probability_before(bd, 10, {50}, {0})) <= 1e-12);
  CHECK(std::abs(r.up_ratio - r.up_time / std::pow(100.0, 1.25)) <= 1e-12 * r.up_ratio);
  CHECK(table.up_spread >= 1.0);
}

TEST_CASE("named builders") {
  CHECK(build_model("bd", 20).state_count() == 21);
  CHECK(build_model("tiar-proj", 6).state_count() == 6);
  CHECK(build_model("tiar-full", 4).state_count() == 24);
  CHECK(default_target("bd", 20) == range_set(10, 21));
  CHECK(default_target("tiar-proj", 6) == StateSet{0});
  CHECK(default_target("tiar-full", 4) == StateSet{0});
  CHECK_THROWS_AS(build_model("nope", 4), Error);
}

}  // TEST_SUITE
