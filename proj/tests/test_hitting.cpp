#include <doctest.h>

#include <cmath>

#include "metatrap/hitting.hpp"
#include "metatrap/hpg.hpp"
#include "metatrap/measures.hpp"
#include "metatrap/models.hpp"
#include "metatrap/propagator.hpp"
#include "oracles.hpp"

using namespace metatrap;

namespace {

double factorial(int k) { return std::tgamma(k + 1.0); }

}  // namespace

TEST_SUITE("hitting") {

TEST_CASE("survival of a one-state trap") {
  const auto two = oracle::two_state(0.8, 1.0);
  const std::vector<double> grid = {0.0, 0.5, 1.0, 4.0, 20.0};
  const auto curve = survival_function(two, ProbabilityVector::point_mass(2, 0), {1}, grid, "0");
  REQUIRE(curve.survival.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(curve.survival[i] - std::exp(-0.8 * grid[i])) <= 1e-12);
  CHECK(curve.start_descriptor == "0");
}

TEST_CASE("survival from the quasi-stationary measure is exponential") {
  const auto bd = build_birth_death(30);
  const auto part = TrapPartition::from_target(31, range_set(15, 31));
  const auto q = quasi_stationary(bd, part);
  std::vector<double> grid;
  for (double u : geometric_grid(1e-3, 20.0, 16)) grid.push_back(u * q.mean_exit_time);
  const auto curve = survival_function(bd, q.measure, part.G, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(curve.survival[i] - std::exp(-grid[i] / q.mean_exit_time)) <= 1e-8);
}

TEST_CASE("survival matches the killed exponential and is monotone") {
  const auto c = oracle::cycle_with_trap();
  const StateSet A = {0, 1, 2};
  const auto start = ProbabilityVector::point_mass(4, 2);
  const auto grid = geometric_grid(0.01, 100.0, 8);
  const auto curve = survival_function(c, start, {3}, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(std::abs(curve.survival[i] - oracle::survival(c, A, start.weights(), grid[i])) <= 1e-12);
    if (i > 0) CHECK(curve.survival[i] <= curve.survival[i - 1] + 1e-12);
  }
}

TEST_CASE("discrete survival reads real times as whole steps") {
  const auto tiar = build_tiar_projection(5);
  const auto start = ProbabilityVector::point_mass(5, 4);
  const auto a = survival_function(tiar, start, {0}, {2.0, 3.7, 5.0});
  const auto b = survival_function(tiar, start, {0}, {2.0, 3.0, 5.0});
  CHECK(a.survival == b.survival);
  CHECK(std::abs(a.survival[2] - oracle::survival(tiar, {1, 2, 3, 4}, start.weights(), 5.0)) <= 1e-14);
}

TEST_CASE("mean hitting times") {
  CHECK(std::abs(mean_hitting_time(oracle::two_state(1.0, 1.0), 0, {1}) - 1.0) <= 1e-14);
  const int N = 12;
  const auto walk = oracle::symmetric_walk(N);
  const Vector m = mean_hitting_times(walk, {0, static_cast<std::size_t>(N)});
  for (int x = 1; x < N; ++x) CHECK(std::abs(m[x] - x * (N - x)) <= 1e-9);
  CHECK(m[0] == 0.0);
}

TEST_CASE("descent time on the reflected birth-death chain grows like n^2") {
  // Fit the constant on n = 50, then require the same bound further out.
  auto ratio = [](std::size_t n) {
    const auto half = build_birth_death_reflected(n, n / 2);
    return mean_hitting_time(half, n / 2, {0}) / static_cast<double>(n * n);
  };
  const double C = 1.5 * ratio(50);
  for (std::size_t n : {100, 200, 400}) CHECK(ratio(n) <= C);
}

TEST_CASE("hitting probabilities on the symmetric walk") {
  const int N = 10;
  const auto walk = oracle::symmetric_walk(N);
  for (int x = 1; x < N; ++x)
    CHECK(std::abs(hitting_probability_before(walk, x, {static_cast<std::size_t>(N)}, {0}) - double(x) / N) <= 1e-12);
  const Vector h = harmonic_function(walk, {static_cast<std::size_t>(N)}, {0});
  CHECK(h[N] == 1.0);
  CHECK(h[0] == 0.0);
}

TEST_CASE("return versus hit") {
  const auto tiar4 = build_tiar_projection(4);
  CHECK(std::abs(return_vs_hit_probability(tiar4, 1, {0}) - 0.25) <= 1e-12);

  const auto forced = FiniteChain::from_entries(TimeKind::Discrete, 3, {Triplet(0, 1, 1.0), Triplet(1, 2, 1.0), Triplet(2, 0, 0.5), Triplet(2, 2, 0.5)});
  CHECK(std::abs(return_vs_hit_probability(forced, 0, {1}) - 1.0) <= 1e-15);

  for (std::size_t n = 2; n <= 10; ++n) {
    const auto tiar = build_tiar_projection(n);
    for (std::size_t k = 1; k < n; ++k) {
      const double bound = (n - 1) * factorial(static_cast<int>(n - k - 1)) / factorial(static_cast<int>(n));
      CHECK(return_vs_hit_probability(tiar, k, {0}) <= bound * (1 + 1e-12));
    }
  }
}

TEST_CASE("expected local times") {
  const auto two = oracle::two_state(0.4, 1.0);
  CHECK(std::abs(expected_local_time(two, 0, {1})[0] - 2.5) <= 1e-12);

  // Discrete: visits to k before J are geometric with mean 1 / P[hit J before return].
  const auto tiar = build_tiar_projection(7);
  for (std::size_t k = 1; k < 7; ++k) {
    const double visits = expected_local_time(tiar, k, {0})[static_cast<Eigen::Index>(k)];
    CHECK(std::abs(visits * return_vs_hit_probability(tiar, k, {0}) - 1.0) <= 1e-9);
  }

  const auto bd = build_birth_death(40);
  const StateSet G = range_set(20, 41);
  for (std::size_t x : {0, 7, 19})
    CHECK(std::abs(expected_local_time(bd, x, G).sum() - mean_hitting_time(bd, x, G)) <= 1e-9 * mean_hitting_time(bd, x, G));
}

TEST_CASE("descent decomposition of the top-card hitting time") {
  for (std::size_t n = 3; n <= 10; ++n) {
    const auto tiar = build_tiar_projection(n);
    const std::size_t top = n - 1;
    double sum = 0.0;
    for (std::size_t k = 1; k <= top; ++k) {
      const double reach = k == top ? 1.0 : hitting_probability_before(tiar, top, {k}, {0});
      CHECK(std::abs(reach - 1.0) <= 1e-10);
      sum += reach / return_vs_hit_probability(tiar, k, {0});
    }
    const double direct = mean_hitting_time(tiar, top, {0});
    CHECK(std::abs(sum - direct) <= 1e-9 * direct);
    if (n == 6) CHECK(std::abs(expected_local_time(tiar, top, {0}).sum() - sum) <= 1e-9 * sum);
  }
}

TEST_CASE("resistances") {
  const auto walk = oracle::uniform_walk(8);
  const auto rw = resistance_profile(walk, stationary_measure(walk));
  REQUIRE(rw.edge_resistances.size() == 8);
  for (double r : rw.edge_resistances) CHECK(std::abs(r - 9.0) <= 1e-12);
  CHECK(std::abs(rw.cumulative[7] - 72.0) <= 1e-10);
  CHECK(std::abs(rw.between(2, 5) - 27.0) <= 1e-10);

  CHECK_THROWS_WITH_AS(resistance_profile(oracle::cycle_with_trap(), stationary_measure(oracle::cycle_with_trap())),
                       doctest::Contains("NotBirthDeath"), Error);
}

TEST_CASE("birth-death resistances follow the Metropolis weights") {
  const std::size_t n = 20000;
  const auto bd = build_birth_death(n);
  const auto pi = stationary_measure(bd);
  const auto rp = resistance_profile(bd, pi, 300);
  REQUIRE(rp.edge_resistances.size() == 300);
  // On 1 <= x < n/2 the birth rate is pi(x+1)/pi(x), so R(x,x+1) = 1/pi(x+1).
  CHECK(std::abs(rp.edge_resistances[0] * pi[0] - 1.0) <= 1e-10);
  for (std::size_t x : {1, 50, 299}) CHECK(std::abs(rp.edge_resistances[x] * pi[x + 1] - 1.0) <= 1e-10);
  double prefix = 0.0;
  for (std::size_t k = 0; k < 300; ++k) prefix += rp.edge_resistances[k];
  CHECK(std::abs(rp.cumulative[299] - prefix) <= 1e-12 * prefix);
  // R(x,x+1) ~ (Z n^{3/2} / 2)(x^{3/2} + (x+1)^{3/2}) for 1 << x << n.
  const double scale = birth_death_normalization(n) * std::pow(double(n), 1.5) / 2;
  for (double x : {100.0, 200.0}) {
    const double ratio = rp.edge_resistances[static_cast<std::size_t>(x)] / (std::pow(x, 1.5) + std::pow(x + 1, 1.5)) / scale;
    CHECK(ratio >= 0.95);
    CHECK(ratio <= 1.05);
  }
}

TEST_CASE("resistance potential equals the harmonic function") {
  for (std::size_t n : {20, 100, 400}) {
    const auto bd = build_birth_death(n);
    const auto rp = resistance_profile(bd, stationary_measure(bd), n / 2);
    const Vector h = harmonic_function(bd, {n / 2}, {0});
    for (std::size_t x = 1; x < n / 2; ++x) CHECK(std::abs(rp.potential(x, n / 2) - h[static_cast<Eigen::Index>(x)]) <= 1e-10);
  }
}

TEST_CASE("forward and time-reversed escape agree from pi_A") {
  const auto c = oracle::cycle_with_trap();
  const auto pc = stationary_measure(c);
  const auto partc = TrapPartition::from_target(4, {3});
  const auto bd = build_birth_death(30);
  const auto pb = stationary_measure(bd);
  const auto partb = TrapPartition::from_target(31, range_set(15, 31));
  for (double t : {0.1, 1.0, 10.0, 100.0}) {
    const auto ec = escape_profile(c, pc, partc, t);
    CHECK(std::abs(ec.forward_pi_A - ec.backward_pi_A) <= 1e-10);
    const auto eb = escape_profile(bd, pb, partb, t * 100);
    CHECK(std::abs(eb.forward_pi_A - eb.backward_pi_A) <= 1e-10);
  }
  // The identity is not pointwise in the start for the non-reversible chain.
  const auto e = escape_profile(c, pc, partc, 1.0);
  CHECK((e.forward - e.backward).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("integrated survival equals the mean hitting time") {
  const auto bd = build_birth_death(20);
  const StateSet G = range_set(10, 21);
  const double mean = mean_hitting_time(bd, 0, G);
  const auto grid = geometric_grid(1e-4, 60 * mean, 400);
  const auto curve = survival_function(bd, ProbabilityVector::point_mass(21, 0), G, grid);
  double integral = grid.front();  // survival is 1 on [0, t_0]
  for (std::size_t i = 1; i < grid.size(); ++i) integral += 0.5 * (grid[i] - grid[i - 1]) * (curve.survival[i] + curve.survival[i - 1]);
  CHECK(std::abs(integral - mean) <= 1e-4 * mean);
}

TEST_CASE("return-time tail on a certified instance") {
  const std::size_t n = 10;
  const auto tiar = build_tiar_projection(n);
  const auto part = TrapPartition::from_target(n, {0});
  HpGParameters params;
  params.R = 4.0 * n * std::log(double(n));
  const auto cert = certify(tiar, part, params);
  auto with_basin = part;
  with_basin.B_alpha = cert.B_alpha;
  const auto report = exponentiality_report(tiar, with_basin, cert);
  const double T = report.T_star;
  const double slack = 1 + 10 * (report.delta + cert.r + params.R / T);
  for (int k : {1, 2, 3}) {
    const double t = 2 * k * params.R;
    double sup = 0.0;
    for (std::size_t y = 1; y < n; ++y)
      sup = std::max(sup, survival_function(tiar, ProbabilityVector::point_mass(n, y), part.G, {t}).survival[0]);
    CHECK(sup <= std::exp(-t / T) * slack);
  }
}

}  // TEST_SUITE
