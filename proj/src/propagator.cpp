#include "metatrap/propagator.hpp"

#include <cmath>

namespace metatrap {

namespace {

constexpr double kBaseStep = 1.0 / 32.0;
constexpr double kBaseTail = 1e-20;

std::size_t integer_steps(double t) {
  const double r = std::round(t);
  if (std::abs(t - r) > 1e-9 * std::max(1.0, std::abs(t)))
    throw Error(ErrorCode::NonIntegerTime, "discrete chains evolve in whole steps");
  return static_cast<std::size_t>(r);
}

}  // namespace

Propagator::Propagator(const FiniteChain &chain)
    : Propagator(chain.time_kind(), chain.matrix(), chain.uniformization_rate()) {}

Propagator::Propagator(const SubChain &sub)
    : Propagator(sub.time_kind(), sub.sub_matrix(), sub.uniformization_rate()) {}

Propagator::Propagator(TimeKind kind, SparseMatrix block, double uniformization_rate)
    : kind_(kind), rate_(kind == TimeKind::Discrete ? 1.0 : uniformization_rate) {
  if (block.rows() != block.cols()) throw Error(ErrorCode::DimensionMismatch, "propagator block not square");
  if (kind_ == TimeKind::Continuous) {
    if (!(rate_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "uniformization rate must be positive");
    SparseMatrix id(block.rows(), block.cols());
    id.setIdentity();
    kernel_ = id + block / rate_;
  } else {
    kernel_ = std::move(block);
  }
  kernel_.prune(0.0);
  kernel_.makeCompressed();
  for (Eigen::Index r = 0; r < kernel_.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(kernel_, r); it; ++it)
      if (it.value() < -1e-15)
        throw Error(ErrorCode::InvalidArgument, "uniformization rate below an exit rate of the block");
}

bool Propagator::prefer_dense(double t) const {
  const double n = static_cast<double>(size());
  if (size() > kDenseLimit) return false;
  const double nnz = static_cast<double>(kernel_.nonZeros()) + n;
  if (kind_ == TimeKind::Continuous) {
    const double x = rate_ * t;
    const double squarings = std::max(0.0, std::log2(x / kBaseStep));
    return (10.0 + squarings) * n * n * n < x * nnz;
  }
  const double steps = t;
  return 2.0 * std::log2(std::max(2.0, steps)) * n * n * n < steps * nnz;
}

Matrix Propagator::matrix(double t) const {
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative time");
  if (size() > kDenseLimit) throw Error(ErrorCode::TooLarge, "dense propagator above the dense limit");
  const auto n = static_cast<Eigen::Index>(size());
  if (kind_ == TimeKind::Discrete) {
    std::size_t k = integer_steps(t);
    Matrix result = Matrix::Identity(n, n);
    Matrix base = Matrix(kernel_);
    while (k > 0) {
      if (k & 1U) result = result * base;
      k >>= 1U;
      if (k > 0) base = base * base;
    }
    return result;
  }
  if (t == 0.0) return Matrix::Identity(n, n);

  const double x = rate_ * t;
  int squarings = 0;
  double lambda = x;
  while (lambda > kBaseStep) {
    lambda /= 2.0;
    ++squarings;
  }
  // Poisson(lambda) weights up to a tail below kBaseTail.
  std::vector<double> weights{std::exp(-lambda)};
  double term = 1.0;
  for (int k = 1;; ++k) {
    term *= lambda / k;
    weights.push_back(std::exp(-lambda) * term);
    if (term * lambda / (k + 1) < kBaseTail) break;
  }
  Matrix m = weights.back() * Matrix::Identity(n, n);
  for (auto k = static_cast<std::ptrdiff_t>(weights.size()) - 2; k >= 0; --k) {
    Matrix next = m * kernel_;
    next.diagonal().array() += weights[static_cast<std::size_t>(k)];
    m = std::move(next);
  }
  for (int i = 0; i < squarings; ++i) m = m * m;
  return m;
}

Vector Propagator::iterate(const Vector &start, double t, bool transpose) const {
  auto step = [&](const Vector &v) -> Vector {
    return transpose ? Vector(kernel_ * v) : Vector(kernel_.transpose() * v);
  };
  Vector v = start;
  if (kind_ == TimeKind::Discrete) {
    const std::size_t k = integer_steps(t);
    for (std::size_t i = 0; i < k; ++i) v = step(v);
    return v;
  }
  const double lambda = rate_ * t;
  Vector acc = Vector::Zero(v.size());
  for (std::size_t k = 0;; ++k) {
    const double kd = static_cast<double>(k);
    const double pmf = std::exp(-lambda + kd * std::log(lambda) - std::lgamma(kd + 1.0));
    if (pmf > 0.0) acc += pmf * v;
    if (kd > lambda) {
      const double q = lambda / (kd + 1.0);
      if (pmf * q / (1.0 - q) <= kPoissonTail * 1e-3) break;
    }
    v = step(v);
  }
  return acc;
}

Vector Propagator::apply(const Vector &row, double t) const {
  if (static_cast<std::size_t>(row.size()) != size()) throw Error(ErrorCode::DimensionMismatch, "vector size");
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative time");
  if (t == 0.0) return row;
  if (kind_ == TimeKind::Discrete) integer_steps(t);
  if (prefer_dense(t)) return matrix(t).transpose() * row;
  return iterate(row, t, false);
}

Vector Propagator::apply_right(const Vector &column, double t) const {
  if (static_cast<std::size_t>(column.size()) != size())
    throw Error(ErrorCode::DimensionMismatch, "vector size");
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative time");
  if (t == 0.0) return column;
  if (kind_ == TimeKind::Discrete) integer_steps(t);
  if (prefer_dense(t)) return matrix(t) * column;
  return iterate(column, t, true);
}

std::vector<double> geometric_grid(double start, double stop, int per_decade) {
  if (!(start > 0.0) || !(stop >= start) || per_decade <= 0)
    throw Error(ErrorCode::InvalidArgument, "geometric grid needs 0 < start <= stop and points per decade > 0");
  std::vector<double> grid;
  const double decades = std::log10(stop / start);
  const auto count = static_cast<long>(std::ceil(decades * per_decade - 1e-9));
  for (long i = 0; i < count; ++i) {
    const double t = start * std::pow(10.0, static_cast<double>(i) / per_decade);
    if (t >= stop * (1.0 - 1e-12)) break;
    grid.push_back(t);
  }
  grid.push_back(stop);
  return grid;
}

}  // namespace metatrap
