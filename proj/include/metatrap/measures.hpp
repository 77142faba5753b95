#ifndef METATRAP_MEASURES_HPP
#define METATRAP_MEASURES_HPP

#include <optional>
#include <vector>

#include "metatrap/chain.hpp"

namespace metatrap {

/// Trap A, target G = complement of A, and the basin B_alpha inside A.
struct TrapPartition {
  StateSet A;
  StateSet G;
  StateSet B_alpha;
  double alpha = 0.5;

  /// Partition with the given target set; B_alpha left empty.
  static TrapPartition from_target(std::size_t state_count, const StateSet &G, double alpha = 0.5);
  /// Throws InvalidArgument unless A and G split the state space and B_alpha lies in A.
  void check(std::size_t state_count) const;
};

struct ConditionedMeasureResult {
  ProbabilityVector measure;  // full-length, zero on G
  double survival_probability;
  double time;
};

struct QuasiStationaryResult {
  ProbabilityVector measure;  // full-length, zero on G
  double mean_exit_time;      // T* = E[tau_G] started from the measure
  double decay_rate;          // theta: P(tau > t) = exp(-theta t)
  double residual;            // max-norm of the eigen-equation residual
};

/// pi restricted to A and renormalized.
ProbabilityVector restricted_invariant(const ProbabilityVector &pi, const StateSet &A);

/// Law at time t of the chain killed on G, conditioned on survival.
ConditionedMeasureResult conditioned_evolution(const FiniteChain &chain, const ProbabilityVector &start,
                                               const TrapPartition &part, double t);

/// Mixture sum_x nu(x) * (conditioned law from x). Differs from
/// conditioned_evolution(nu), which conditions the mixture as a whole.
ProbabilityVector conditioned_mixture(const FiniteChain &chain, const ProbabilityVector &start,
                                      const TrapPartition &part, double t);

/// Law at time t given tau_G > t and tau_{G u B_alpha} <= t - 2R, computed on
/// the chain augmented with a "visited B_alpha" flag.
ConditionedMeasureResult doubly_conditioned_evolution(const FiniteChain &chain, std::size_t x,
                                                      const TrapPartition &part, double t, double R);

/// Doubly conditioned laws for every start in A at one time t. Entries are
/// empty where the conditioning event has probability below `min_probability`.
struct DoublyConditionedFamily {
  std::vector<std::size_t> starts;  // = part.A
  std::vector<std::optional<ProbabilityVector>> measures;
  std::vector<double> conditioning_probability;  // P(tau_G > t, tau_{G u B} <= t - 2R)
};
DoublyConditionedFamily doubly_conditioned_family(const FiniteChain &chain, const TrapPartition &part,
                                                  double t, double R, double min_probability = 1e-300);

/// P(tau^x_{G u B_alpha} <= s, tau^x_G > t) for every x (full length, zero
/// on G). Requires 0 <= s <= t.
Vector visit_then_survive(const FiniteChain &chain, const TrapPartition &part, double s, double t);

/// Quasi-stationary measure: the Perron left eigenvector of the killed block.
QuasiStationaryResult quasi_stationary(const FiniteChain &chain, const TrapPartition &part);

/// Expected occupation of each state before tau_G divided by E[tau_G].
ProbabilityVector empirical_measure(const FiniteChain &chain, std::size_t x, const TrapPartition &part);

double tv_distance(const ProbabilityVector &p, const ProbabilityVector &q);
double tv_distance(const Vector &p, const Vector &q);

struct DistanceProfile {
  double d;      // max_x tv(mu^x_t, pi)
  double d_bar;  // max_{x,x'} tv(mu^x_t, mu^x'_t)
};

DistanceProfile d_profile(const FiniteChain &chain, double t);
/// Same as d_profile with a precomputed stationary measure.
DistanceProfile d_profile(const FiniteChain &chain, const ProbabilityVector &pi, double t);

/// max over x, x' in K of tv(mu^x_t, mu^x'_t). Not submultiplicative in t.
double d_bar_K(const FiniteChain &chain, const StateSet &K, double t);

/// Rows mu^x_t for every x in `starts` (full-chain evolution).
Matrix evolved_rows(const FiniteChain &chain, const StateSet &starts, double t);

}  // namespace metatrap

#endif
