#include "metatrap/hitting.hpp"

#include <algorithm>
#include <cmath>

#include "linalg.hpp"
#include "metatrap/propagator.hpp"

namespace metatrap {

namespace {

void check_state(const FiniteChain &chain, std::size_t x) {
  if (x >= chain.state_count()) throw Error(ErrorCode::InvalidArgument, "state " + std::to_string(x) + " out of range");
}

StateSet checked_set(const FiniteChain &chain, const StateSet &s) {
  StateSet out = make_state_set(s);
  for (auto v : out) check_state(chain, v);
  return out;
}

}  // namespace

SurvivalCurve survival_function(const FiniteChain &chain, const ProbabilityVector &start, const StateSet &G,
                                const std::vector<double> &t_grid, std::string start_descriptor) {
  const StateSet target = checked_set(chain, G);
  const StateSet A = complement(chain.state_count(), target);
  if (!start.supported_on(A)) throw Error(ErrorCode::InvalidArgument, "start must be supported off G");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative time in grid");
    if (i > 0 && !(t_grid[i] > t_grid[i - 1])) throw Error(ErrorCode::InvalidArgument, "time grid must increase");
  }
  const SubChain sub = restrict_chain(chain, A);
  const Propagator prop(sub);
  SurvivalCurve curve{t_grid, {}, std::move(start_descriptor)};
  Vector mass = sub.to_local(start.weights());
  double clock = 0.0;
  double previous = 1.0;
  for (double t : t_grid) {
    const double target_clock = chain.is_continuous() ? t : static_cast<double>(floor_steps(t));
    mass = prop.apply(mass, target_clock - clock);
    clock = target_clock;
    const double s = std::clamp(mass.sum(), 0.0, previous);
    curve.survival.push_back(s);
    previous = s;
  }
  return curve;
}

Vector mean_hitting_times(const FiniteChain &chain, const StateSet &G) {
  const StateSet target = checked_set(chain, G);
  const StateSet A = complement(chain.state_count(), target);
  if (A.empty()) return Vector::Zero(static_cast<Eigen::Index>(chain.state_count()));
  if (target.empty()) throw Error(ErrorCode::EmptySet, "target set is empty");
  const Vector m =
      detail::LinearSolver(detail::negative_rate_block(chain, A)).solve(Vector::Ones(static_cast<Eigen::Index>(A.size())));
  Vector out = Vector::Zero(static_cast<Eigen::Index>(chain.state_count()));
  for (std::size_t i = 0; i < A.size(); ++i) out[static_cast<Eigen::Index>(A[i])] = m[static_cast<Eigen::Index>(i)];
  if ((out.array() < 0.0).any()) throw Error(ErrorCode::SingularSystem, "target not reachable");
  return out;
}

double mean_hitting_time(const FiniteChain &chain, std::size_t x, const StateSet &G) {
  check_state(chain, x);
  if (contains(make_state_set(G), x)) throw Error(ErrorCode::InvalidArgument, "start lies in the target set");
  return mean_hitting_times(chain, G)[static_cast<Eigen::Index>(x)];
}

Vector harmonic_function(const FiniteChain &chain, const StateSet &I, const StateSet &J) {
  const StateSet hit = checked_set(chain, I);
  const StateSet taboo = checked_set(chain, J);
  if (hit.empty()) throw Error(ErrorCode::EmptySet, "target set is empty");
  for (auto v : hit)
    if (contains(taboo, v)) throw Error(ErrorCode::InvalidArgument, "target and taboo sets overlap");
  const StateSet boundary = set_union(hit, taboo);
  const StateSet interior = complement(chain.state_count(), boundary);
  Vector h = Vector::Zero(static_cast<Eigen::Index>(chain.state_count()));
  for (auto v : hit) h[static_cast<Eigen::Index>(v)] = 1.0;
  if (interior.empty()) return h;

  // (-L_D) h_D = L(D, I) 1
  const SparseMatrix &L = chain.rate_matrix();
  Vector b = Vector::Zero(static_cast<Eigen::Index>(interior.size()));
  for (std::size_t i = 0; i < interior.size(); ++i)
    for (SparseMatrix::InnerIterator it(L, static_cast<Eigen::Index>(interior[i])); it; ++it)
      if (contains(hit, static_cast<std::size_t>(it.col()))) b[static_cast<Eigen::Index>(i)] += it.value();
  const Vector sol = detail::LinearSolver(detail::negative_rate_block(chain, interior)).solve(b);
  for (std::size_t i = 0; i < interior.size(); ++i)
    h[static_cast<Eigen::Index>(interior[i])] = std::clamp(sol[static_cast<Eigen::Index>(i)], 0.0, 1.0);
  return h;
}

double hitting_probability_before(const FiniteChain &chain, std::size_t x, const StateSet &I, const StateSet &J) {
  check_state(chain, x);
  if (contains(make_state_set(I), x) || contains(make_state_set(J), x))
    throw Error(ErrorCode::InvalidArgument, "start must lie outside the target and taboo sets");
  return harmonic_function(chain, I, J)[static_cast<Eigen::Index>(x)];
}

double return_vs_hit_probability(const FiniteChain &chain, std::size_t k, const StateSet &J) {
  check_state(chain, k);
  const StateSet hit = checked_set(chain, J);
  if (contains(hit, k)) throw Error(ErrorCode::InvalidArgument, "k must lie outside J");
  const Vector h = harmonic_function(chain, hit, StateSet{k});
  const SparseMatrix &m = chain.matrix();
  double value = 0.0;
  double exit = 0.0;
  for (SparseMatrix::InnerIterator it(m, static_cast<Eigen::Index>(k)); it; ++it) {
    const auto z = static_cast<std::size_t>(it.col());
    if (z == k) continue;
    value += it.value() * h[it.col()];
    exit += it.value();
  }
  if (chain.is_continuous()) {
    if (!(exit > 0.0)) throw Error(ErrorCode::SingularSystem, "state " + std::to_string(k) + " is absorbing");
    value /= exit;
  }
  return std::clamp(value, 0.0, 1.0);
}

Vector expected_local_time(const FiniteChain &chain, std::size_t x, const StateSet &G) {
  check_state(chain, x);
  const StateSet target = checked_set(chain, G);
  if (target.empty()) throw Error(ErrorCode::EmptySet, "target set is empty");
  if (contains(target, x)) throw Error(ErrorCode::InvalidArgument, "start lies in the target set");
  const StateSet A = complement(chain.state_count(), target);
  const SubChain sub = restrict_chain(chain, A);
  Vector e = Vector::Zero(static_cast<Eigen::Index>(A.size()));
  e[static_cast<Eigen::Index>(sub.local_index(x))] = 1.0;
  const Vector ell = detail::LinearSolver(detail::negative_rate_block(chain, A)).solve_left(e);
  return sub.to_parent(ell.cwiseMax(0.0));
}

double ResistanceProfile::between(std::size_t x, std::size_t y) const {
  if (x > y) std::swap(x, y);
  if (y > edge_resistances.size()) throw Error(ErrorCode::InvalidArgument, "state beyond the resistance path");
  const double upto_y = y == 0 ? 0.0 : cumulative[y - 1];
  const double upto_x = x == 0 ? 0.0 : cumulative[x - 1];
  return upto_y - upto_x;
}

double ResistanceProfile::potential(std::size_t x, std::size_t y) const {
  if (x > y) throw Error(ErrorCode::InvalidArgument, "potential needs x <= y");
  if (y == 0) throw Error(ErrorCode::InvalidArgument, "potential needs y > 0");
  return between(0, x) / between(0, y);
}

ResistanceProfile resistance_profile(const FiniteChain &chain, const ProbabilityVector &pi, std::size_t path_length) {
  const std::size_t n = chain.state_count();
  if (pi.size() != n) throw Error(ErrorCode::DimensionMismatch, "pi has the wrong length");
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "resistances need at least two states");
  const SparseMatrix &m = chain.matrix();
  for (Eigen::Index r = 0; r < m.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(m, r); it; ++it)
      if (std::abs(it.col() - r) > 1 && it.value() != 0.0)
        throw Error(ErrorCode::NotBirthDeath,
                    "entry (" + std::to_string(r) + "," + std::to_string(it.col()) + ") off the tridiagonal");
  if (path_length == 0) path_length = n - 1;
  if (path_length > n - 1) throw Error(ErrorCode::InvalidArgument, "path_length exceeds the chain");
  ResistanceProfile p;
  double total = 0.0;
  for (std::size_t k = 0; k < path_length; ++k) {
    const double flow = pi[k] * chain.entry(k, k + 1);
    if (!(flow > 0.0)) throw Error(ErrorCode::InvalidArgument, "edge (" + std::to_string(k) + "," +
                                                                    std::to_string(k + 1) + ") carries no flow");
    p.edge_resistances.push_back(1.0 / flow);
    total += 1.0 / flow;
    p.cumulative.push_back(total);
  }
  return p;
}

}  // namespace metatrap
