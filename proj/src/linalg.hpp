#ifndef METATRAP_SRC_LINALG_HPP
#define METATRAP_SRC_LINALG_HPP

#include <memory>

#include "metatrap/chain.hpp"

namespace metatrap::detail {

/// LU factorization of a square sparse system: partial-pivot dense LU up to
/// kDenseSolveLimit unknowns, sparse LU above. Singular or ill-posed systems
/// raise SingularSystem.
class LinearSolver {
 public:
  static constexpr std::size_t kDenseSolveLimit = 5000;

  explicit LinearSolver(const SparseMatrix &m);
  ~LinearSolver();
  LinearSolver(LinearSolver &&) noexcept;
  LinearSolver &operator=(LinearSolver &&) noexcept;

  /// x with M x = b.
  Vector solve(const Vector &b) const;
  /// x with x^T M = b^T.
  Vector solve_left(const Vector &b) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Rows and columns of `m` indexed by `rows`/`cols`.
SparseMatrix submatrix(const SparseMatrix &m, const StateSet &rows, const StateSet &cols);

/// -L restricted to `states`, where L is the rate matrix (Q, or P - I).
SparseMatrix negative_rate_block(const FiniteChain &chain, const StateSet &states);

}  // namespace metatrap::detail

#endif
