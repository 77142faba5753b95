#ifndef METATRAP_CHAIN_HPP
#define METATRAP_CHAIN_HPP

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "metatrap/errors.hpp"

namespace metatrap {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

/// Sorted, duplicate-free list of state indices.
using StateSet = std::vector<std::size_t>;

enum class TimeKind { Continuous, Discrete };

StateSet make_state_set(std::vector<std::size_t> states);
/// States {first, ..., last - 1}.
StateSet range_set(std::size_t first, std::size_t last);
StateSet complement(std::size_t state_count, const StateSet &set);
StateSet set_union(const StateSet &a, const StateSet &b);
bool contains(const StateSet &set, std::size_t state);

/// A probability measure over the states of a chain.
///
/// Entries in [-1e-14, 0) are treated as roundoff and clamped to zero; any
/// more negative entry, or a total outside 1 +/- 1e-10, is rejected.
class ProbabilityVector {
 public:
  static constexpr double kNegativeTolerance = 1e-14;
  static constexpr double kSumTolerance = 1e-10;

  explicit ProbabilityVector(Vector weights);

  /// Clamps roundoff negatives and rescales to total mass one.
  static ProbabilityVector normalized(Vector mass);
  static ProbabilityVector point_mass(std::size_t state_count, std::size_t state);
  static ProbabilityVector uniform(std::size_t state_count, const StateSet &support);

  std::size_t size() const { return static_cast<std::size_t>(weights_.size()); }
  double operator[](std::size_t i) const { return weights_[static_cast<Eigen::Index>(i)]; }
  const Vector &weights() const { return weights_; }
  double mass(const StateSet &states) const;
  /// True when every state outside `states` carries zero weight.
  bool supported_on(const StateSet &states) const;

 private:
  Vector weights_;
};

struct Violation {
  std::string location;  // e.g. "row 3", "entry (2,5)"
  std::string rule;      // e.g. "row sum != 0"

  std::string message() const { return location + ": " + rule; }
};

/// Checks the generator (continuous) or kernel (discrete) invariants: sign and
/// range of entries, row sums within 1e-12, a uniformization rate no smaller
/// than the largest exit rate, and irreducibility. Empty result means valid.
std::vector<Violation> validate(TimeKind kind, const SparseMatrix &matrix,
                                double uniformization_rate = 0.0);

/// Immutable finite-state Markov chain in continuous or discrete time.
///
/// Continuous chains hold the rate matrix Q (rows sum to zero) and a
/// uniformization rate L >= max |Q(x,x)|, so that I + Q/L is stochastic.
/// Discrete chains hold the stochastic kernel P.
class FiniteChain {
 public:
  /// `uniformization_rate` <= 0 selects the largest exit rate.
  FiniteChain(TimeKind kind, SparseMatrix matrix, std::vector<std::string> labels = {},
              double uniformization_rate = 0.0);

  /// Continuous: `entries` are off-diagonal rates and the diagonal is derived.
  /// Discrete: `entries` are kernel entries, self-loops included.
  static FiniteChain from_entries(TimeKind kind, std::size_t state_count,
                                  const std::vector<Triplet> &entries,
                                  std::vector<std::string> labels = {});

  std::size_t state_count() const { return static_cast<std::size_t>(matrix_.rows()); }
  TimeKind time_kind() const { return kind_; }
  bool is_continuous() const { return kind_ == TimeKind::Continuous; }
  const std::vector<std::string> &labels() const { return labels_; }
  /// Q for continuous chains, P for discrete ones.
  const SparseMatrix &matrix() const { return matrix_; }
  /// Q for continuous chains, P - I for discrete ones.
  SparseMatrix rate_matrix() const;
  /// I + Q/L for continuous chains, P for discrete ones.
  SparseMatrix uniformized_kernel() const;
  /// 1 for discrete chains.
  double uniformization_rate() const { return rate_; }
  double entry(std::size_t from, std::size_t to) const { return matrix_.coeff(from, to); }

  FiniteChain with_uniformization_rate(double rate) const;

 private:
  TimeKind kind_;
  SparseMatrix matrix_;
  std::vector<std::string> labels_;
  double rate_;
};

/// Principal block of a chain on a kept subset A, killed on leaving A.
class SubChain {
 public:
  SubChain(const FiniteChain &parent, StateSet kept);

  TimeKind time_kind() const { return kind_; }
  std::size_t parent_state_count() const { return parent_count_; }
  const StateSet &kept_states() const { return kept_; }
  std::size_t size() const { return kept_.size(); }
  /// Principal submatrix of Q (or P) on A.
  const SparseMatrix &sub_matrix() const { return sub_; }
  /// Rate (continuous) or probability (discrete) of leaving A from each kept state.
  const Vector &killing() const { return killing_; }
  double uniformization_rate() const { return rate_; }
  /// Position of a parent state inside the kept list, or size() when absent.
  std::size_t local_index(std::size_t state) const;

  Vector to_local(const Vector &parent_vector) const;
  Vector to_parent(const Vector &local_vector) const;

 private:
  TimeKind kind_;
  std::size_t parent_count_;
  StateSet kept_;
  SparseMatrix sub_;
  Vector killing_;
  double rate_;
  std::vector<std::size_t> local_;
};

/// Stationary measure from the balance equations with one equation replaced
/// by the normalization; residual checked at 1e-10.
ProbabilityVector stationary_measure(const FiniteChain &chain);

/// Time reversal P*(x,y) = pi(y) P(y,x) / pi(x), rates analogously.
FiniteChain adjoint(const FiniteChain &chain, const ProbabilityVector &pi);

/// nu H_t. Discrete chains take an integer step count.
ProbabilityVector evolve(const FiniteChain &chain, const ProbabilityVector &nu, double t);

/// Substochastic restriction to A; A must be a nonempty proper subset.
SubChain restrict_chain(const FiniteChain &chain, const StateSet &A);

bool is_strongly_connected(const SparseMatrix &matrix);
bool is_strongly_connected(const SparseMatrix &matrix, const StateSet &subset);

/// Integer step count for a discrete-time horizon t (events "tau <= t").
std::size_t floor_steps(double t);

}  // namespace metatrap

#endif
