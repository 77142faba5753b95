#ifndef METATRAP_HITTING_HPP
#define METATRAP_HITTING_HPP

#include <string>
#include <vector>

#include "metatrap/chain.hpp"

namespace metatrap {

struct SurvivalCurve {
  std::vector<double> times;
  std::vector<double> survival;  // P(tau_G > t_i)
  std::string start_descriptor;
};

/// P(tau^start_G > t) along an increasing grid. Discrete chains read real t
/// as floor(t) steps.
SurvivalCurve survival_function(const FiniteChain &chain, const ProbabilityVector &start, const StateSet &G,
                                const std::vector<double> &t_grid, std::string start_descriptor = "");

/// E[tau^x_G].
double mean_hitting_time(const FiniteChain &chain, std::size_t x, const StateSet &G);
/// E[tau^y_G] for every state (zero on G).
Vector mean_hitting_times(const FiniteChain &chain, const StateSet &G);

/// P[tau^x_I < tau^x_J] for x outside I and J.
double hitting_probability_before(const FiniteChain &chain, std::size_t x, const StateSet &I, const StateSet &J);
/// The harmonic function y -> P[tau^y_I < tau^y_J]; 1 on I, 0 on J.
Vector harmonic_function(const FiniteChain &chain, const StateSet &I, const StateSet &J);

/// P[tau^k_J < tau^{k,+}_k]: from k, reach J before coming back to k. In
/// discrete time a self-loop counts as a return; continuous chains use the
/// jump chain.
double return_vs_hit_probability(const FiniteChain &chain, std::size_t k, const StateSet &J);

/// Expected time spent in each state before tau^x_G (Lebesgue time for
/// continuous chains, visit counts for discrete ones). Full length, zero on G.
Vector expected_local_time(const FiniteChain &chain, std::size_t x, const StateSet &G);

/// Resistances of a birth-death chain along 0, 1, ..., path_length.
struct ResistanceProfile {
  std::vector<double> edge_resistances;  // R(k, k+1), k = 0..path_length-1
  std::vector<double> cumulative;        // cumulative[k] = R(0, k+1)

  /// R(x, y) for x <= y along the path.
  double between(std::size_t x, std::size_t y) const;
  /// V(x) = R(0,x) / R(0,y): probability of reaching y before 0 from x <= y.
  double potential(std::size_t x, std::size_t y) const;
};

/// R(k,k+1) = 1 / (pi(k) rate(k,k+1)). path_length = 0 covers the whole chain.
ResistanceProfile resistance_profile(const FiniteChain &chain, const ProbabilityVector &pi,
                                     std::size_t path_length = 0);

}  // namespace metatrap

#endif
