// Independent reference computations for the tests: dense Pade matrix
// exponentials, closed forms, and small hand-built chains.
#ifndef METATRAP_TESTS_ORACLES_HPP
#define METATRAP_TESTS_ORACLES_HPP

#include <cmath>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "metatrap/chain.hpp"

namespace oracle {

using metatrap::FiniteChain;
using metatrap::Matrix;
using metatrap::SparseMatrix;
using metatrap::StateSet;
using metatrap::TimeKind;
using metatrap::Triplet;
using metatrap::Vector;

inline Matrix block(const FiniteChain &chain, const StateSet &rows, const StateSet &cols) {
  const Matrix full(chain.matrix());
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          full(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
  return out;
}

inline Matrix matrix_power(const Matrix &m, long k) {
  Matrix out = Matrix::Identity(m.rows(), m.cols());
  for (long i = 0; i < k; ++i) out = out * m;
  return out;
}

/// e^{tQ_A} (continuous) or P_A^t (discrete) on the block A.
inline Matrix killed_semigroup(const FiniteChain &chain, const StateSet &A, double t) {
  const Matrix b = block(chain, A, A);
  if (chain.is_continuous()) return Matrix(t * b).exp();
  return matrix_power(b, std::lround(t));
}

inline Matrix semigroup(const FiniteChain &chain, double t) {
  StateSet all(chain.state_count());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return killed_semigroup(chain, all, t);
}

/// Embeds a vector over `set` into the full space.
inline Vector embed(std::size_t n, const StateSet &set, const Vector &local) {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < set.size(); ++i) out[static_cast<Eigen::Index>(set[i])] = local[static_cast<Eigen::Index>(i)];
  return out;
}

inline Vector restrict_to(const Vector &full, const StateSet &set) {
  Vector out(static_cast<Eigen::Index>(set.size()));
  for (std::size_t i = 0; i < set.size(); ++i) out[static_cast<Eigen::Index>(i)] = full[static_cast<Eigen::Index>(set[i])];
  return out;
}

inline double survival(const FiniteChain &chain, const StateSet &A, const Vector &start_full, double t) {
  const Vector s = restrict_to(start_full, A);
  return (s.transpose() * killed_semigroup(chain, A, t)).sum();
}

/// Rates a: 0 -> 1 and b: 1 -> 0.
inline FiniteChain two_state(double a, double b) {
  return FiniteChain::from_entries(TimeKind::Continuous, 2, {Triplet(0, 1, a), Triplet(1, 0, b)});
}

/// Non-reversible: a biased 3-cycle 0 -> 1 -> 2 -> 0 (rate 2, back rate 0.5)
/// plus a target state 3 entered from 0 and left towards 1.
inline FiniteChain cycle_with_trap() {
  return FiniteChain::from_entries(TimeKind::Continuous, 4,
                                   {Triplet(0, 1, 2.0), Triplet(1, 2, 2.0), Triplet(2, 0, 2.0), Triplet(1, 0, 0.5),
                                    Triplet(2, 1, 0.5), Triplet(0, 2, 0.5), Triplet(0, 3, 0.3), Triplet(3, 1, 1.0)});
}

/// Symmetric discrete walk on {0..N}, reflected at both ends.
inline FiniteChain symmetric_walk(int N) {
  std::vector<Triplet> t;
  t.emplace_back(0, 1, 1.0);
  t.emplace_back(N, N - 1, 1.0);
  for (int x = 1; x < N; ++x) {
    t.emplace_back(x, x - 1, 0.5);
    t.emplace_back(x, x + 1, 0.5);
  }
  return FiniteChain::from_entries(TimeKind::Discrete, static_cast<std::size_t>(N + 1), t);
}

/// Uniform continuous nearest-neighbour walk on {0..N}, rate 1 each way.
inline FiniteChain uniform_walk(int N) {
  std::vector<Triplet> t;
  for (int x = 0; x < N; ++x) {
    t.emplace_back(x, x + 1, 1.0);
    t.emplace_back(x + 1, x, 1.0);
  }
  return FiniteChain::from_entries(TimeKind::Continuous, static_cast<std::size_t>(N + 1), t);
}

/// Normalized weights 1/((x v 1)^{3/2} ((n-x) v 1)^{3/2}).
inline Vector bd_stationary(std::size_t n) {
  Vector w(static_cast<Eigen::Index>(n + 1));
  for (std::size_t x = 0; x <= n; ++x)
    w[static_cast<Eigen::Index>(x)] =
        1.0 / std::pow(static_cast<double>(std::max<std::size_t>(x, 1)) * static_cast<double>(std::max<std::size_t>(n - x, 1)), 1.5);
  return w / w.sum();
}

/// Dominant left eigenvector of the dense killed block and its eigenvalue.
inline std::pair<Vector, double> dense_perron(const FiniteChain &chain, const StateSet &A) {
  const Matrix b = block(chain, A, A);
  Eigen::EigenSolver<Matrix> es(b.transpose());
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < b.rows(); ++i)
    if (es.eigenvalues()[i].real() > es.eigenvalues()[best].real()) best = i;
  Vector v = es.eigenvectors().col(best).real();
  if (v.sum() < 0) v = -v;
  return {v / v.sum(), es.eigenvalues()[best].real()};
}

inline double tv(const Vector &p, const Vector &q) { return 0.5 * (p - q).cwiseAbs().sum(); }

}  // namespace oracle

#endif
