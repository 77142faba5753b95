#include "metatrap/chain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "linalg.hpp"
#include "metatrap/propagator.hpp"

namespace metatrap {

namespace {

constexpr double kRowSumTolerance = 1e-12;

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::vector<char> reachable(const SparseMatrix &m, const std::vector<char> &allowed, std::size_t root,
                            bool reverse) {
  const auto n = static_cast<std::size_t>(m.rows());
  std::vector<std::vector<std::size_t>> adj(n);
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
      const auto from = static_cast<std::size_t>(it.row());
      const auto to = static_cast<std::size_t>(it.col());
      if (from == to || it.value() <= 0.0 || !allowed[from] || !allowed[to]) continue;
      if (reverse)
        adj[to].push_back(from);
      else
        adj[from].push_back(to);
    }
  }
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack{root};
  seen[root] = 1;
  while (!stack.empty()) {
    const auto x = stack.back();
    stack.pop_back();
    for (auto y : adj[x]) {
      if (!seen[y]) {
        seen[y] = 1;
        stack.push_back(y);
      }
    }
  }
  return seen;
}

}  // namespace

StateSet make_state_set(std::vector<std::size_t> states) {
  std::sort(states.begin(), states.end());
  states.erase(std::unique(states.begin(), states.end()), states.end());
  return states;
}

StateSet range_set(std::size_t first, std::size_t last) {
  StateSet s;
  for (auto i = first; i < last; ++i) s.push_back(i);
  return s;
}

StateSet complement(std::size_t state_count, const StateSet &set) {
  StateSet out;
  std::size_t j = 0;
  for (std::size_t i = 0; i < state_count; ++i) {
    while (j < set.size() && set[j] < i) ++j;
    if (j < set.size() && set[j] == i) continue;
    out.push_back(i);
  }
  return out;
}

StateSet set_union(const StateSet &a, const StateSet &b) {
  StateSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool contains(const StateSet &set, std::size_t state) {
  return std::binary_search(set.begin(), set.end(), state);
}

std::size_t floor_steps(double t) {
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative or NaN time " + fmt_double(t));
  return static_cast<std::size_t>(std::floor(t + 1e-9 * std::max(1.0, t)));
}

// ---------------------------------------------------------------------------

ProbabilityVector::ProbabilityVector(Vector weights) : weights_(std::move(weights)) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    double &w = weights_[i];
    if (!std::isfinite(w)) throw Error(ErrorCode::InvalidArgument, "non-finite probability weight");
    if (w < -kNegativeTolerance)
      throw Error(ErrorCode::InvalidArgument,
                  "negative probability weight " + fmt_double(w) + " at state " + std::to_string(i));
    if (w < 0.0) w = 0.0;
    sum += w;
  }
  if (std::abs(sum - 1.0) > kSumTolerance)
    throw Error(ErrorCode::InvalidArgument, "probability weights sum to " + fmt_double(sum));
}

ProbabilityVector ProbabilityVector::normalized(Vector mass) {
  double positive = 0.0;
  for (Eigen::Index i = 0; i < mass.size(); ++i) {
    if (!std::isfinite(mass[i])) throw Error(ErrorCode::ZeroMass, "non-finite mass");
    if (mass[i] > 0.0) positive += mass[i];
  }
  if (!(positive > 0.0)) throw Error(ErrorCode::ZeroMass, "measure has no positive mass");
  for (Eigen::Index i = 0; i < mass.size(); ++i) {
    if (mass[i] < -kNegativeTolerance * positive)
      throw Error(ErrorCode::InvalidArgument, "negative mass " + fmt_double(mass[i]) + " at state " +
                                                  std::to_string(i));
    if (mass[i] < 0.0) mass[i] = 0.0;
  }
  mass /= mass.sum();
  return ProbabilityVector(std::move(mass));
}

ProbabilityVector ProbabilityVector::point_mass(std::size_t state_count, std::size_t state) {
  if (state >= state_count) throw Error(ErrorCode::InvalidArgument, "state index out of range");
  Vector w = Vector::Zero(static_cast<Eigen::Index>(state_count));
  w[static_cast<Eigen::Index>(state)] = 1.0;
  return ProbabilityVector(std::move(w));
}

ProbabilityVector ProbabilityVector::uniform(std::size_t state_count, const StateSet &support) {
  if (support.empty()) throw Error(ErrorCode::EmptySet, "uniform measure on an empty set");
  Vector w = Vector::Zero(static_cast<Eigen::Index>(state_count));
  for (auto s : support) {
    if (s >= state_count) throw Error(ErrorCode::InvalidArgument, "state index out of range");
    w[static_cast<Eigen::Index>(s)] = 1.0 / static_cast<double>(support.size());
  }
  return ProbabilityVector(std::move(w));
}

double ProbabilityVector::mass(const StateSet &states) const {
  double m = 0.0;
  for (auto s : states) m += (*this)[s];
  return m;
}

bool ProbabilityVector::supported_on(const StateSet &states) const {
  for (std::size_t i = 0; i < size(); ++i)
    if ((*this)[i] > 0.0 && !contains(states, i)) return false;
  return true;
}

// ---------------------------------------------------------------------------

bool is_strongly_connected(const SparseMatrix &matrix) {
  return is_strongly_connected(matrix, range_set(0, static_cast<std::size_t>(matrix.rows())));
}

bool is_strongly_connected(const SparseMatrix &matrix, const StateSet &subset) {
  if (subset.empty()) return false;
  std::vector<char> allowed(static_cast<std::size_t>(matrix.rows()), 0);
  for (auto s : subset) allowed[s] = 1;
  const auto fwd = reachable(matrix, allowed, subset.front(), false);
  const auto bwd = reachable(matrix, allowed, subset.front(), true);
  return std::all_of(subset.begin(), subset.end(), [&](std::size_t s) { return fwd[s] && bwd[s]; });
}

std::vector<Violation> validate(TimeKind kind, const SparseMatrix &m, double uniformization_rate) {
  std::vector<Violation> out;
  if (m.rows() != m.cols() || m.rows() == 0) {
    out.push_back({"matrix", "must be square and nonempty"});
    return out;
  }
  double max_exit = 0.0;
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    double sum = 0.0;
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
      const double v = it.value();
      const std::string where =
          "entry (" + std::to_string(it.row()) + "," + std::to_string(it.col()) + ")";
      if (!std::isfinite(v)) {
        out.push_back({where, "not finite"});
        continue;
      }
      sum += v;
      if (kind == TimeKind::Continuous) {
        if (it.row() != it.col() && v < 0.0) out.push_back({where, "negative off-diagonal rate"});
        if (it.row() == it.col()) max_exit = std::max(max_exit, -v);
      } else if (v < 0.0 || v > 1.0) {
        out.push_back({where, "entry out of [0,1] (got " + fmt_double(v) + ")"});
      }
    }
    const double target = kind == TimeKind::Continuous ? 0.0 : 1.0;
    if (!(std::abs(sum - target) <= kRowSumTolerance)) {
      out.push_back({"row " + std::to_string(r),
                     std::string(kind == TimeKind::Continuous ? "sum != 0" : "sum != 1") + " (got " +
                         fmt_double(sum) + ")"});
    }
  }
  if (kind == TimeKind::Continuous && uniformization_rate > 0.0 && uniformization_rate < max_exit) {
    out.push_back({"uniformization rate", "smaller than the largest exit rate " + fmt_double(max_exit)});
  }
  if (!is_strongly_connected(m)) out.push_back({"transition graph", "not irreducible"});
  return out;
}

FiniteChain::FiniteChain(TimeKind kind, SparseMatrix matrix, std::vector<std::string> labels,
                         double uniformization_rate)
    : kind_(kind), matrix_(std::move(matrix)), labels_(std::move(labels)), rate_(1.0) {
  matrix_.prune(0.0);
  matrix_.makeCompressed();
  const auto violations = validate(kind_, matrix_, uniformization_rate);
  if (!violations.empty()) {
    std::string msg;
    for (const auto &v : violations) msg += (msg.empty() ? "" : "; ") + v.message();
    throw Error(ErrorCode::InvalidChain, msg);
  }
  if (labels_.empty()) {
    for (std::size_t i = 0; i < state_count(); ++i) labels_.push_back(std::to_string(i));
  }
  if (labels_.size() != state_count())
    throw Error(ErrorCode::InvalidChain, "label count does not match state count");
  if (kind_ == TimeKind::Continuous) {
    double max_exit = 0.0;
    for (Eigen::Index i = 0; i < matrix_.rows(); ++i) max_exit = std::max(max_exit, -matrix_.coeff(i, i));
    rate_ = uniformization_rate > 0.0 ? uniformization_rate : max_exit;
    if (!(rate_ > 0.0)) throw Error(ErrorCode::InvalidChain, "continuous chain without transitions");
  }
}

FiniteChain FiniteChain::from_entries(TimeKind kind, std::size_t state_count,
                                      const std::vector<Triplet> &entries, std::vector<std::string> labels) {
  std::vector<Triplet> all;
  all.reserve(entries.size() + state_count);
  std::vector<double> exit(state_count, 0.0);
  for (const auto &e : entries) {
    if (e.row() < 0 || e.col() < 0 || static_cast<std::size_t>(e.row()) >= state_count ||
        static_cast<std::size_t>(e.col()) >= state_count)
      throw Error(ErrorCode::InvalidChain, "entry index out of range");
    if (kind == TimeKind::Continuous && e.row() == e.col())
      throw Error(ErrorCode::InvalidChain,
                  "diagonal rate given for state " + std::to_string(e.row()) + "; it is derived");
    all.push_back(e);
    exit[static_cast<std::size_t>(e.row())] += e.value();
  }
  if (kind == TimeKind::Continuous) {
    for (std::size_t i = 0; i < state_count; ++i)
      all.emplace_back(static_cast<int>(i), static_cast<int>(i), -exit[i]);
  }
  SparseMatrix m(static_cast<Eigen::Index>(state_count), static_cast<Eigen::Index>(state_count));
  m.setFromTriplets(all.begin(), all.end());
  return FiniteChain(kind, std::move(m), std::move(labels));
}

SparseMatrix FiniteChain::rate_matrix() const {
  if (kind_ == TimeKind::Continuous) return matrix_;
  SparseMatrix id(matrix_.rows(), matrix_.cols());
  id.setIdentity();
  SparseMatrix l = matrix_ - id;
  return l;
}

SparseMatrix FiniteChain::uniformized_kernel() const {
  if (kind_ == TimeKind::Discrete) return matrix_;
  SparseMatrix id(matrix_.rows(), matrix_.cols());
  id.setIdentity();
  SparseMatrix p = id + matrix_ / rate_;
  p.prune(0.0);
  return p;
}

FiniteChain FiniteChain::with_uniformization_rate(double rate) const {
  if (kind_ == TimeKind::Discrete) return *this;
  return FiniteChain(kind_, matrix_, labels_, rate);
}

// ---------------------------------------------------------------------------

SubChain::SubChain(const FiniteChain &parent, StateSet kept)
    : kind_(parent.time_kind()),
      parent_count_(parent.state_count()),
      kept_(make_state_set(std::move(kept))),
      rate_(parent.uniformization_rate()) {
  local_.assign(parent_count_, kept_.size());
  for (std::size_t i = 0; i < kept_.size(); ++i) {
    if (kept_[i] >= parent_count_) throw Error(ErrorCode::InvalidArgument, "state index out of range");
    local_[kept_[i]] = i;
  }
  sub_ = detail::submatrix(parent.matrix(), kept_, kept_);
  killing_ = Vector::Zero(static_cast<Eigen::Index>(kept_.size()));
  for (std::size_t i = 0; i < kept_.size(); ++i) {
    double k = 0.0;
    for (SparseMatrix::InnerIterator it(parent.matrix(), static_cast<Eigen::Index>(kept_[i])); it; ++it) {
      if (local_[static_cast<std::size_t>(it.col())] == kept_.size()) k += it.value();
    }
    killing_[static_cast<Eigen::Index>(i)] = k;
  }
}

std::size_t SubChain::local_index(std::size_t state) const {
  return state < parent_count_ ? local_[state] : kept_.size();
}

Vector SubChain::to_local(const Vector &parent_vector) const {
  Vector out(static_cast<Eigen::Index>(kept_.size()));
  for (std::size_t i = 0; i < kept_.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = parent_vector[static_cast<Eigen::Index>(kept_[i])];
  return out;
}

Vector SubChain::to_parent(const Vector &local_vector) const {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(parent_count_));
  for (std::size_t i = 0; i < kept_.size(); ++i)
    out[static_cast<Eigen::Index>(kept_[i])] = local_vector[static_cast<Eigen::Index>(i)];
  return out;
}

SubChain restrict_chain(const FiniteChain &chain, const StateSet &A) {
  const auto kept = make_state_set(A);
  if (kept.empty()) throw Error(ErrorCode::EmptySet, "restriction to an empty set");
  if (kept.back() >= chain.state_count()) throw Error(ErrorCode::InvalidArgument, "state index out of range");
  if (kept.size() == chain.state_count())
    throw Error(ErrorCode::EmptyComplement, "restriction set is the whole state space");
  return SubChain(chain, kept);
}

// ---------------------------------------------------------------------------

ProbabilityVector stationary_measure(const FiniteChain &chain) {
  const auto n = static_cast<Eigen::Index>(chain.state_count());
  if (n == 1) return ProbabilityVector::point_mass(1, 0);
  // pi L = 0  <=>  L^T pi^T = 0; the last balance equation becomes sum(pi) = 1.
  // Sparse systems pin pi(n-1) = 1 instead: a dense row ruins the sparse LU.
  const bool pin = static_cast<std::size_t>(n) > detail::LinearSolver::kDenseSolveLimit;
  const SparseMatrix l = chain.rate_matrix();
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(l.nonZeros() + n));
  for (Eigen::Index r = 0; r < l.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(l, r); it; ++it)
      if (it.col() != n - 1) t.emplace_back(static_cast<int>(it.col()), static_cast<int>(it.row()), it.value());
  if (pin)
    t.emplace_back(static_cast<int>(n - 1), static_cast<int>(n - 1), 1.0);
  else
    for (Eigen::Index c = 0; c < n; ++c) t.emplace_back(static_cast<int>(n - 1), static_cast<int>(c), 1.0);
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  Vector b = Vector::Zero(n);
  b[n - 1] = 1.0;
  const detail::LinearSolver solver(m);
  Vector pi = solver.solve(b);
  // Two rounds of iterative refinement sharpen the small entries.
  for (int round = 0; round < 2; ++round) pi += solver.solve(b - m * pi);

  if (pin) pi /= pi.sum();
  const double scale = std::max(1.0, chain.is_continuous() ? chain.uniformization_rate() : 1.0);
  const double residual = (l.transpose() * pi).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-10 * scale))
    throw Error(ErrorCode::SingularSystem, "stationary residual " + fmt_double(residual));
  return ProbabilityVector::normalized(std::move(pi));
}

FiniteChain adjoint(const FiniteChain &chain, const ProbabilityVector &pi) {
  const auto n = chain.state_count();
  if (pi.size() != n) throw Error(ErrorCode::DimensionMismatch, "stationary measure size");
  for (std::size_t x = 0; x < n; ++x)
    if (!(pi[x] > 0.0)) throw Error(ErrorCode::ZeroMassState, "pi(" + std::to_string(x) + ") = 0");
  std::vector<Triplet> entries;
  const auto &m = chain.matrix();
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
      const auto y = static_cast<std::size_t>(it.row());
      const auto x = static_cast<std::size_t>(it.col());
      if (chain.is_continuous() && x == y) continue;
      entries.emplace_back(static_cast<int>(x), static_cast<int>(y), pi[y] * it.value() / pi[x]);
    }
  }
  if (chain.is_continuous()) {
    auto rev = FiniteChain::from_entries(TimeKind::Continuous, n, entries, chain.labels());
    return rev.with_uniformization_rate(std::max(rev.uniformization_rate(), chain.uniformization_rate()));
  }
  // Rows sum to one up to the roundoff carried by pi; remove it.
  std::vector<double> sums(n, 0.0);
  for (const auto &e : entries) sums[static_cast<std::size_t>(e.row())] += e.value();
  for (auto &e : entries) {
    const double s = sums[static_cast<std::size_t>(e.row())];
    if (std::abs(s - 1.0) <= 1e-6) e = Triplet(e.row(), e.col(), e.value() / s);
  }
  SparseMatrix p(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  p.setFromTriplets(entries.begin(), entries.end());
  return FiniteChain(TimeKind::Discrete, std::move(p), chain.labels());
}

ProbabilityVector evolve(const FiniteChain &chain, const ProbabilityVector &nu, double t) {
  if (nu.size() != chain.state_count()) throw Error(ErrorCode::DimensionMismatch, "measure size");
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative time");
  if (t == 0.0) return nu;
  return ProbabilityVector::normalized(Propagator(chain).apply(nu.weights(), t));
}

}  // namespace metatrap
