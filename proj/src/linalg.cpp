#include "linalg.hpp"

#include <cmath>
#include <optional>

#include <Eigen/SparseLU>

namespace metatrap::detail {

struct LinearSolver::Impl {
  Eigen::Index n = 0;
  double norm = 0.0;
  std::optional<Eigen::PartialPivLU<Matrix>> dense;
  std::optional<Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>> sparse;
  SparseMatrix m;
};

LinearSolver::LinearSolver(const SparseMatrix &m) : impl_(std::make_unique<Impl>()) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "linear system is not square");
  impl_->n = m.rows();
  impl_->m = m;
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    double row = 0.0;
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) row += std::abs(it.value());
    impl_->norm = std::max(impl_->norm, row);
  }
  if (static_cast<std::size_t>(m.rows()) <= kDenseSolveLimit) {
    impl_->dense.emplace(Matrix(m));
  } else {
    Eigen::SparseMatrix<double> cm = m;
    cm.makeCompressed();
    impl_->sparse.emplace();
    impl_->sparse->compute(cm);
    if (impl_->sparse->info() != Eigen::Success)
      throw Error(ErrorCode::SingularSystem, "sparse LU factorization failed");
  }
}

LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver &&) noexcept = default;
LinearSolver &LinearSolver::operator=(LinearSolver &&) noexcept = default;

namespace {

void check_solution(const SparseMatrix &m, const Vector &x, const Vector &b, double norm, bool left) {
  if (!x.allFinite()) throw Error(ErrorCode::SingularSystem, "linear system is singular");
  const Vector r = left ? Vector(m.transpose() * x - b) : Vector(m * x - b);
  const double tol = 1e-8 * (norm * x.cwiseAbs().maxCoeff() + b.cwiseAbs().maxCoeff());
  if (!(r.cwiseAbs().maxCoeff() <= tol)) throw Error(ErrorCode::SingularSystem, "linear system is singular");
}

}  // namespace

Vector LinearSolver::solve(const Vector &b) const {
  Vector x = impl_->dense ? Vector(impl_->dense->solve(b)) : Vector(impl_->sparse->solve(b));
  check_solution(impl_->m, x, b, impl_->norm, false);
  return x;
}

Vector LinearSolver::solve_left(const Vector &b) const {
  Vector x = impl_->dense ? Vector(impl_->dense->transpose().solve(b)) : Vector(impl_->sparse->transpose().solve(b));
  check_solution(impl_->m, x, b, impl_->norm, true);
  return x;
}

SparseMatrix submatrix(const SparseMatrix &m, const StateSet &rows, const StateSet &cols) {
  std::vector<Eigen::Index> col_index(static_cast<std::size_t>(m.cols()), -1);
  for (std::size_t j = 0; j < cols.size(); ++j) col_index[cols[j]] = static_cast<Eigen::Index>(j);
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (SparseMatrix::InnerIterator it(m, static_cast<Eigen::Index>(rows[i])); it; ++it) {
      const auto j = col_index[static_cast<std::size_t>(it.col())];
      if (j >= 0) t.emplace_back(static_cast<int>(i), static_cast<int>(j), it.value());
    }
  }
  SparseMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

SparseMatrix negative_rate_block(const FiniteChain &chain, const StateSet &states) {
  SparseMatrix block = submatrix(chain.rate_matrix(), states, states);
  block *= -1.0;
  return block;
}

}  // namespace metatrap::detail
