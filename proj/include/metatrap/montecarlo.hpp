#ifndef METATRAP_MONTECARLO_HPP
#define METATRAP_MONTECARLO_HPP

#include <cstdint>
#include <vector>

#include "metatrap/chain.hpp"

namespace metatrap {

struct SamplerConfig {
  std::uint64_t seed = 0;
  std::size_t n_trajectories = 1;
  double max_time = 0.0;  // <= 0: 1e6 mean holding times at the uniformization rate
  unsigned threads = 0;   // 0: hardware concurrency
};

struct EmpiricalSurvival {
  std::vector<double> times;           // uncensored hitting times, ascending
  std::size_t censored = 0;            // trajectories still outside G at max_time
  std::size_t n_trajectories = 0;
  double max_time = 0.0;
  std::vector<double> per_trajectory;  // hitting time (max_time if censored), trajectory order
  std::vector<std::uint8_t> censored_flags;

  /// Fraction of trajectories with tau > t (valid for t < max_time).
  double survival_at(double t) const;
  double mean() const;           // over uncensored times
  double standard_error() const; // of mean()
};

/// Independent trajectories from `start` until they enter G. Trajectory i
/// draws from its own generator seeded by (seed, i), so the output does not
/// depend on the thread count.
EmpiricalSurvival sample_hitting_times(const FiniteChain &chain, const ProbabilityVector &start, const StateSet &G,
                                       const SamplerConfig &cfg);

struct OccupationEstimate {
  Vector frequencies;      // full length, zero on G
  Vector standard_errors;  // delta-method, per state
  std::size_t used = 0;    // uncensored trajectories entering the estimate
};

/// Fraction of pre-absorption time (continuous) or visits (discrete) spent
/// in each state, pooled over trajectories as a ratio of sums.
OccupationEstimate occupation_frequencies(const FiniteChain &chain, std::size_t x, const StateSet &G,
                                          const SamplerConfig &cfg);

/// sup_t |F_N(t) - (1 - e^{-t/mean})| over the uncensored range.
double ks_statistic(const EmpiricalSurvival &emp, double mean);

}  // namespace metatrap

#endif
