#ifndef METATRAP_PROPAGATOR_HPP
#define METATRAP_PROPAGATOR_HPP

#include <cstddef>
#include <vector>

#include "metatrap/chain.hpp"

namespace metatrap {

/// Transition operator H_t of a chain or of a killed sub-chain.
///
/// Continuous time uses uniformization: H_t = sum_k Pois(k; L t) P^k with
/// P = I + Q/L. Long horizons run the series on a short base step
/// (L h <= 1/32, Poisson tail below 1e-19) and square the result, so every
/// intermediate matrix is entrywise nonnegative. Short horizons on large
/// chains iterate the series on the vector directly. Discrete time computes
/// powers of the kernel.
class Propagator {
 public:
  /// Dense matrices are only formed for blocks up to this size.
  static constexpr std::size_t kDenseLimit = 2000;
  /// Poisson mass left out by the vector route.
  static constexpr double kPoissonTail = 1e-12;

  explicit Propagator(const FiniteChain &chain);
  explicit Propagator(const SubChain &sub);
  /// `block` is a (sub)generator for continuous time, a (sub)kernel otherwise.
  Propagator(TimeKind kind, SparseMatrix block, double uniformization_rate);

  std::size_t size() const { return static_cast<std::size_t>(kernel_.rows()); }
  TimeKind time_kind() const { return kind_; }

  /// row * H_t. Discrete horizons must be integers.
  Vector apply(const Vector &row, double t) const;
  /// H_t * column.
  Vector apply_right(const Vector &column, double t) const;
  /// Dense H_t.
  Matrix matrix(double t) const;

 private:
  bool prefer_dense(double t) const;
  Vector iterate(const Vector &v, double t, bool transpose) const;

  TimeKind kind_;
  SparseMatrix kernel_;  // uniformized kernel (nonnegative entries)
  double rate_;
};

/// Geometric grid from `start` to `stop` with `per_decade` points per factor
/// of ten; both endpoints included.
std::vector<double> geometric_grid(double start, double stop, int per_decade);

}  // namespace metatrap

#endif
