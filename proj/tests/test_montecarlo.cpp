#include <doctest.h>

#include <cmath>
#include <cstring>

#include "metatrap/hitting.hpp"
#include "metatrap/measures.hpp"
#include "metatrap/models.hpp"
#include "metatrap/montecarlo.hpp"
#include "oracles.hpp"

using namespace metatrap;

namespace {

SamplerConfig config(std::uint64_t seed, std::size_t n, unsigned threads = 0) {
  SamplerConfig c;
  c.seed = seed;
  c.n_trajectories = n;
  c.threads = threads;
  return c;
}

// 0 <-> 1 at rate 1, both leak into 2 at rate eps, 2 -> 0 at rate 1.
FiniteChain leaky_pair(double eps) {
  Matrix q = Matrix::Zero(3, 3);
  q(0, 1) = 1.0;
  q(1, 0) = 1.0;
  q(0, 2) = eps;
  q(1, 2) = eps;
  q(2, 0) = 1.0;
  for (int i = 0; i < 3; ++i) q(i, i) = -q.row(i).sum();
  return FiniteChain(TimeKind::Continuous, q.sparseView());
}

}  // namespace

TEST_SUITE("montecarlo") {

TEST_CASE("exponential holding time") {
  const auto two = oracle::two_state(1.0, 1.0);
  const auto emp = sample_hitting_times(two, ProbabilityVector::point_mass(2, 0), {1}, config(7, 100000));
  CHECK(emp.censored == 0);
  CHECK(std::abs(emp.mean() - 1.0) <= 0.01);
  CHECK(std::abs(emp.standard_error() - 1.0 / std::sqrt(1e5)) <= 1e-4);
}

TEST_CASE("survival envelope on birth-death") {
  const auto bd = build_birth_death(20);
  const StateSet G = range_set(10, 21);
  const std::size_t N = 100000;
  const auto start = ProbabilityVector::point_mass(21, 0);
  const auto emp = sample_hitting_times(bd, start, G, config(11, N));
  REQUIRE(emp.censored == 0);
  const double T = mean_hitting_time(bd, 0, G);
  std::vector<double> grid;
  for (int i = 1; i <= 60; ++i) grid.push_back(T * 0.1 * i);
  const auto exact = survival_function(bd, start, G, grid);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    worst = std::max(worst, std::abs(emp.survival_at(grid[i]) - exact.survival[i]));
  CHECK(worst <= 3.0 / std::sqrt(double(N)));
  // Mean within 4 sigma.
  CHECK(std::abs(emp.mean() - T) <= 4.0 * emp.standard_error());
}

TEST_CASE("quasi-stationary start is exponential") {
  const auto bd = build_birth_death(20);
  const auto part = TrapPartition::from_target(21, range_set(10, 21));
  const auto qsd = quasi_stationary(bd, part);
  const std::size_t N = 100000;
  const auto emp = sample_hitting_times(bd, qsd.measure, part.G, config(3, N));
  CHECK(ks_statistic(emp, qsd.mean_exit_time) <= 1.63 / std::sqrt(double(N)));
  // A mean off by a factor 2 is rejected: sup |e^{-t} - e^{-t/2}| = 1/4.
  CHECK(ks_statistic(emp, 2.0 * qsd.mean_exit_time) > 0.15);
  CHECK(ks_statistic(emp, 0.5 * qsd.mean_exit_time) > 0.15);
}

TEST_CASE("ks statistic on exact quantiles") {
  const std::size_t N = 1000;
  const double mean = 3.0;
  EmpiricalSurvival emp;
  emp.n_trajectories = N;
  for (std::size_t i = 1; i <= N; ++i) emp.times.push_back(-mean * std::log1p(-(double(i) - 0.5) / double(N)));
  CHECK(ks_statistic(emp, mean) <= 0.5 / double(N) + 1e-12);
  // Mis-specified by 2x, analytic value 1/4 up to the grid resolution.
  CHECK(std::abs(ks_statistic(emp, 2.0 * mean) - 0.25) <= 1.0 / double(N));
  CHECK_THROWS_WITH_AS(ks_statistic(EmpiricalSurvival{}, 1.0), doctest::Contains("EmptySample"), Error);
}

TEST_CASE("occupation frequencies on birth-death") {
  const auto bd = build_birth_death(20);
  const auto part = TrapPartition::from_target(21, range_set(10, 21));
  const auto exact = empirical_measure(bd, 0, part);
  const auto est = occupation_frequencies(bd, 0, part.G, config(5, 100000));
  CHECK(est.used == 100000);
  for (std::size_t y = 0; y < 10; ++y) {
    CAPTURE(y);
    CHECK(std::abs(est.frequencies[Eigen::Index(y)] - exact[y]) <= 3.0 * est.standard_errors[Eigen::Index(y)]);
    CHECK(est.standard_errors[Eigen::Index(y)] > 0.0);
  }
  for (std::size_t y = 10; y <= 20; ++y) CHECK(est.frequencies[Eigen::Index(y)] == 0.0);
  CHECK(std::abs(est.frequencies.sum() - 1.0) <= 1e-12);
}

TEST_CASE("occupation of small traps") {
  const auto two = oracle::two_state(0.7, 1.0);
  const auto single = occupation_frequencies(two, 0, {1}, config(1, 1000));
  CHECK(single.frequencies[0] == 1.0);
  CHECK(single.frequencies[1] == 0.0);

  const double eps = 1e-2;
  const auto pair = leaky_pair(eps);
  const auto part = TrapPartition::from_target(3, {2});
  const auto exact = empirical_measure(pair, 0, part);
  const auto est = occupation_frequencies(pair, 0, {2}, config(9, 20000));
  for (std::size_t y = 0; y < 2; ++y) {
    CHECK(std::abs(est.frequencies[Eigen::Index(y)] - exact[y]) <= 3.0 * est.standard_errors[Eigen::Index(y)]);
    CHECK(std::abs(est.frequencies[Eigen::Index(y)] - 0.5) <= 3.0 * est.standard_errors[Eigen::Index(y)] + eps);
  }
}

TEST_CASE("discrete chains step the kernel") {
  const auto tiar = build_tiar_projection(6);
  const auto emp = sample_hitting_times(tiar, ProbabilityVector::point_mass(6, 5), {0}, config(21, 20000));
  const double exact = mean_hitting_time(tiar, 5, {0});
  CHECK(std::abs(emp.mean() - exact) <= 4.0 * emp.standard_error());
  for (double t : emp.times) CHECK(t == std::floor(t));
  const auto part = TrapPartition::from_target(6, {0});
  const auto occ = occupation_frequencies(tiar, 5, {0}, config(21, 20000));
  const auto em = empirical_measure(tiar, 5, part);
  for (std::size_t y = 1; y < 6; ++y)
    CHECK(std::abs(occ.frequencies[Eigen::Index(y)] - em[y]) <= 4.0 * occ.standard_errors[Eigen::Index(y)]);
}

TEST_CASE("thread count does not change results") {
  const auto bd = build_birth_death(20);
  const StateSet G = range_set(10, 21);
  const auto start = ProbabilityVector::point_mass(21, 0);
  const auto a = sample_hitting_times(bd, start, G, config(42, 5000, 1));
  const auto b = sample_hitting_times(bd, start, G, config(42, 5000, 8));
  REQUIRE(a.per_trajectory.size() == b.per_trajectory.size());
  CHECK(std::memcmp(a.per_trajectory.data(), b.per_trajectory.data(), a.per_trajectory.size() * sizeof(double)) == 0);
  CHECK(a.times == b.times);
  const auto c = sample_hitting_times(bd, start, G, config(43, 5000, 8));
  CHECK(c.times != a.times);

  const auto oa = occupation_frequencies(bd, 0, G, config(42, 5000, 1));
  const auto ob = occupation_frequencies(bd, 0, G, config(42, 5000, 8));
  CHECK(std::memcmp(oa.frequencies.data(), ob.frequencies.data(), sizeof(double) * 21) == 0);
  CHECK(std::memcmp(oa.standard_errors.data(), ob.standard_errors.data(), sizeof(double) * 21) == 0);
}

TEST_CASE("censoring") {
  const auto bd = build_birth_death(20);
  const StateSet G = range_set(10, 21);
  const auto start = ProbabilityVector::point_mass(21, 0);
  SamplerConfig cfg = config(4, 2000);
  cfg.max_time = mean_hitting_time(bd, 0, G);
  const auto emp = sample_hitting_times(bd, start, G, cfg);
  CHECK(emp.censored > 0);
  CHECK(emp.times.size() + emp.censored == emp.n_trajectories);
  for (double t : emp.times) CHECK(t <= cfg.max_time);
  for (std::size_t i = 0; i < emp.n_trajectories; ++i)
    if (emp.censored_flags[i]) CHECK(emp.per_trajectory[i] == cfg.max_time);

  cfg.max_time = 1e-9;
  CHECK_THROWS_WITH_AS(sample_hitting_times(bd, start, G, cfg), doctest::Contains("AllCensored"), Error);
  CHECK_THROWS_WITH_AS(occupation_frequencies(bd, 0, G, cfg), doctest::Contains("AllCensored"), Error);
}

TEST_CASE("invalid configurations") {
  const auto two = oracle::two_state(1.0, 1.0);
  SamplerConfig cfg = config(1, 0);
  CHECK_THROWS_AS(sample_hitting_times(two, ProbabilityVector::point_mass(2, 0), {1}, cfg), Error);
  cfg.n_trajectories = 10;
  cfg.max_time = -1.0;
  CHECK_NOTHROW(sample_hitting_times(two, ProbabilityVector::point_mass(2, 0), {1}, cfg));
  CHECK_THROWS_AS(sample_hitting_times(two, ProbabilityVector::point_mass(2, 1), {1}, config(1, 10)), Error);
  CHECK_THROWS_AS(occupation_frequencies(two, 1, {1}, config(1, 10)), Error);
}

}  // TEST_SUITE
