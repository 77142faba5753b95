#ifndef METATRAP_MODELS_HPP
#define METATRAP_MODELS_HPP

#include <string>
#include <vector>

#include "metatrap/chain.hpp"

namespace metatrap {

/// Unnormalized weights 1 / ((x v 1)^{3/2} ((n-x) v 1)^{3/2}) on {0..n}.
Vector birth_death_weights(std::size_t n);
/// Z(n): the sum of the weights above.
double birth_death_normalization(std::size_t n);
/// Metropolis birth-death chain on {0..n} for the weights above (n >= 4 even).
FiniteChain build_birth_death(std::size_t n);
/// Same dynamics on {0..m} with the edge (m, m+1) removed (reflected at m).
FiniteChain build_birth_death_reflected(std::size_t n, std::size_t m);

/// Projection of the top-in-at-random shuffle onto the last descent position.
FiniteChain build_tiar_projection(std::size_t n, TimeKind kind = TimeKind::Discrete);
/// Numerators (over n) of one row of the projected kernel.
std::vector<long long> tiar_projection_row(std::size_t n, std::size_t i);
/// Exact stationary law of the projection: 1/n! at 0, (n-k)/(n-k+1)! above.
Vector tiar_projection_stationary(std::size_t n);

/// Top-in-at-random on all n! permutations (lexicographic order), n <= 8.
FiniteChain build_tiar_full(std::size_t n);
/// Last descent position of a permutation (1-based), 0 for the identity.
std::size_t last_descent(const std::vector<int> &permutation);

struct LumpingResult {
  bool lumps = false;
  double max_discrepancy = 0.0;
  std::size_t rows_checked = 0;
};
/// Pushes every row of the full chain through the last-descent map and
/// compares with the projected kernel in integer arithmetic. Throws
/// LumpingViolation naming the first offending permutation.
LumpingResult project_and_verify_lumping(const FiniteChain &full, std::size_t n);

struct Xik0Row {
  std::size_t k;
  double probability;     // P[tau^k_0 < tau^k_k]
  double bound;           // (n-1)(n-k-1)!/n!
  double E;               // 1 / probability
  double recursion_rhs;   // n + (n-k) E_{k-1} (k >= 2)
  double closed_form_rhs; // n sum_{j<=k} (n-j-1)!/(n-k-1)!
  bool ok;
};
/// Exact check of the local-time estimates for the projected shuffle,
/// 2 <= n <= 12. Throws BoundViolation on failure when `throw_on_violation`.
std::vector<Xik0Row> xik0_bound_check(std::size_t n, bool throw_on_violation = true);

struct BirthDeathAsymptoticsRow {
  std::size_t n;
  std::size_t up_target;            // floor(n^alpha)
  double up_time;                   // E[tau^0_{n^alpha}]
  double up_ratio;                  // up_time / n^{5 alpha / 2}
  double down_time_full;            // E[tau^{n/2}_0]
  double down_ratio_full;           // / n^2
  double down_time_reflected;       // same on {0..n/2}, reflected at n/2
  double down_ratio_reflected;      // / n^2
  std::size_t x;                    // n/10
  double crossing_probability;      // P(tau^x_0 > tau^x_{n/2})
  double crossing_ratio;            // / (2x/n)^{5/2}
};
struct BirthDeathAsymptotics {
  std::vector<BirthDeathAsymptoticsRow> rows;
  // max/min of each ratio column
  double up_spread = 0.0;
  double down_full_spread = 0.0;
  double down_reflected_spread = 0.0;
  double crossing_spread = 0.0;
};
BirthDeathAsymptotics birth_death_asymptotics_check(const std::vector<std::size_t> &n_list, double alpha = 0.5);

/// Builders addressable by name: "bd", "tiar-proj", "tiar-full".
FiniteChain build_model(const std::string &name, std::size_t n);
/// Conventional target set G: {n/2..n} for bd, {0} for tiar-proj, the identity for tiar-full.
StateSet default_target(const std::string &name, std::size_t n);

}  // namespace metatrap

#endif
