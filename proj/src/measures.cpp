#include "metatrap/measures.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "linalg.hpp"
#include "metatrap/propagator.hpp"

namespace metatrap {

namespace {

void require_in(const StateSet &set, std::size_t x, const char *what) {
  if (!contains(set, x)) throw Error(ErrorCode::InvalidArgument, std::string(what) + " " + std::to_string(x));
}

// Chain on (A \ B) x {0} u A x {1}: the flag records a visit to B before
// leaving A. Flag-0 states come first, in the order of A \ B.
struct FlagAugmented {
  StateSet unvisited;  // A \ B
  SubChain trap;       // killed chain on A (flag-1 block)
  Propagator augmented;

  std::size_t flag1_offset() const { return unvisited.size(); }
  std::size_t start_index(std::size_t x, const StateSet &B) const {
    if (contains(B, x)) return flag1_offset() + trap.local_index(x);
    return static_cast<std::size_t>(std::lower_bound(unvisited.begin(), unvisited.end(), x) - unvisited.begin());
  }
};

FlagAugmented build_flag_augmented(const FiniteChain &chain, const TrapPartition &part) {
  StateSet unvisited;
  std::set_difference(part.A.begin(), part.A.end(), part.B_alpha.begin(), part.B_alpha.end(),
                      std::back_inserter(unvisited));
  SubChain trap = restrict_chain(chain, part.A);
  const std::size_t off = unvisited.size();
  const std::size_t total = off + part.A.size();
  std::vector<std::size_t> unvisited_index(chain.state_count(), total);
  for (std::size_t i = 0; i < unvisited.size(); ++i) unvisited_index[unvisited[i]] = i;

  std::vector<Triplet> t;
  const auto &m = chain.matrix();
  for (std::size_t i = 0; i < unvisited.size(); ++i) {
    for (SparseMatrix::InnerIterator it(m, static_cast<Eigen::Index>(unvisited[i])); it; ++it) {
      const auto z = static_cast<std::size_t>(it.col());
      if (unvisited_index[z] < total)
        t.emplace_back(static_cast<int>(i), static_cast<int>(unvisited_index[z]), it.value());
      else if (contains(part.B_alpha, z))
        t.emplace_back(static_cast<int>(i), static_cast<int>(off + trap.local_index(z)), it.value());
    }
  }
  const auto &sub = trap.sub_matrix();
  for (Eigen::Index r = 0; r < sub.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(sub, r); it; ++it)
      t.emplace_back(static_cast<int>(off + static_cast<std::size_t>(r)),
                     static_cast<int>(off + static_cast<std::size_t>(it.col())), it.value());
  SparseMatrix aug(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
  aug.setFromTriplets(t.begin(), t.end());
  Propagator prop(chain.time_kind(), std::move(aug), chain.uniformization_rate());
  return FlagAugmented{std::move(unvisited), std::move(trap), std::move(prop)};
}

// Horizons (before the 2R window, inside it) in the chain's time unit.
std::pair<double, double> split_horizon(const FiniteChain &chain, double t, double R) {
  if (!(R > 0.0)) throw Error(ErrorCode::InvalidArgument, "R must be positive");
  if (!(t >= 2.0 * R)) throw Error(ErrorCode::InvalidArgument, "doubly conditioned measure needs t >= 2R");
  if (chain.is_continuous()) return {t - 2.0 * R, 2.0 * R};
  const auto total = floor_steps(t);
  const auto before = floor_steps(t - 2.0 * R);
  return {static_cast<double>(before), static_cast<double>(total - before)};
}

}  // namespace

TrapPartition TrapPartition::from_target(std::size_t state_count, const StateSet &G, double alpha) {
  TrapPartition p;
  p.G = make_state_set(G);
  p.A = complement(state_count, p.G);
  p.alpha = alpha;
  p.check(state_count);
  return p;
}

void TrapPartition::check(std::size_t state_count) const {
  if (A.empty()) throw Error(ErrorCode::EmptySet, "trap A is empty");
  if (G.empty()) throw Error(ErrorCode::EmptyComplement, "target G is empty");
  if (A.size() + G.size() != state_count || set_union(A, G).size() != state_count)
    throw Error(ErrorCode::InvalidArgument, "A and G must partition the state space");
  for (auto b : B_alpha)
    if (!contains(A, b)) throw Error(ErrorCode::InvalidArgument, "B_alpha must lie inside A");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0,1)");
}

ProbabilityVector restricted_invariant(const ProbabilityVector &pi, const StateSet &A) {
  Vector w = Vector::Zero(static_cast<Eigen::Index>(pi.size()));
  double total = 0.0;
  for (auto a : A) {
    if (a >= pi.size()) throw Error(ErrorCode::InvalidArgument, "state index out of range");
    w[static_cast<Eigen::Index>(a)] = pi[a];
    total += pi[a];
  }
  if (!(total > 0.0)) throw Error(ErrorCode::ZeroMass, "pi(A) = 0");
  return ProbabilityVector::normalized(std::move(w));
}

ConditionedMeasureResult conditioned_evolution(const FiniteChain &chain, const ProbabilityVector &start,
                                               const TrapPartition &part, double t) {
  part.check(chain.state_count());
  if (!start.supported_on(part.A)) throw Error(ErrorCode::InvalidArgument, "start must be supported on A");
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative time");
  const SubChain sub = restrict_chain(chain, part.A);
  const Vector mass = Propagator(sub).apply(sub.to_local(start.weights()), t);
  const double survival = mass.sum();
  if (!(survival >= 1e-300)) throw Error(ErrorCode::ExtinctMass, "survival probability underflow");
  return {ProbabilityVector::normalized(sub.to_parent(mass)), std::min(1.0, survival), t};
}

ProbabilityVector conditioned_mixture(const FiniteChain &chain, const ProbabilityVector &start,
                                      const TrapPartition &part, double t) {
  part.check(chain.state_count());
  if (!start.supported_on(part.A)) throw Error(ErrorCode::InvalidArgument, "start must be supported on A");
  const SubChain sub = restrict_chain(chain, part.A);
  const Propagator prop(sub);
  Vector mix = Vector::Zero(static_cast<Eigen::Index>(sub.size()));
  const bool dense = sub.size() <= Propagator::kDenseLimit;
  const Matrix h = dense ? prop.matrix(t) : Matrix();
  for (std::size_t i = 0; i < sub.size(); ++i) {
    const double w = start[sub.kept_states()[i]];
    if (w <= 0.0) continue;
    Vector row;
    if (dense) {
      row = h.row(static_cast<Eigen::Index>(i)).transpose();
    } else {
      Vector e = Vector::Zero(static_cast<Eigen::Index>(sub.size()));
      e[static_cast<Eigen::Index>(i)] = 1.0;
      row = prop.apply(e, t);
    }
    const double s = row.sum();
    if (!(s >= 1e-300)) throw Error(ErrorCode::ExtinctMass, "survival probability underflow");
    mix += (w / s) * row;
  }
  return ProbabilityVector::normalized(sub.to_parent(mix));
}

ConditionedMeasureResult doubly_conditioned_evolution(const FiniteChain &chain, std::size_t x,
                                                      const TrapPartition &part, double t, double R) {
  part.check(chain.state_count());
  require_in(part.A, x, "start outside A:");
  if (part.B_alpha.empty()) throw Error(ErrorCode::EmptySet, "B_alpha is empty");
  const auto [before, window] = split_horizon(chain, t, R);
  const FlagAugmented aug = build_flag_augmented(chain, part);
  Vector e = Vector::Zero(static_cast<Eigen::Index>(aug.augmented.size()));
  e[static_cast<Eigen::Index>(aug.start_index(x, part.B_alpha))] = 1.0;
  const Vector at_split = aug.augmented.apply(e, before);
  const Vector visited =
      at_split.segment(static_cast<Eigen::Index>(aug.flag1_offset()), static_cast<Eigen::Index>(part.A.size()));
  const Vector mass = Propagator(aug.trap).apply(visited, window);
  const double p = mass.sum();
  if (!(p >= 1e-300)) throw Error(ErrorCode::ZeroConditioning, "conditioning event has probability zero");
  return {ProbabilityVector::normalized(aug.trap.to_parent(mass)), std::min(1.0, p), t};
}

DoublyConditionedFamily doubly_conditioned_family(const FiniteChain &chain, const TrapPartition &part,
                                                  double t, double R, double min_probability) {
  part.check(chain.state_count());
  if (part.B_alpha.empty()) throw Error(ErrorCode::EmptySet, "B_alpha is empty");
  const auto [before, window] = split_horizon(chain, t, R);
  const FlagAugmented aug = build_flag_augmented(chain, part);
  DoublyConditionedFamily out;
  out.starts = part.A;
  const auto na = static_cast<Eigen::Index>(part.A.size());
  const auto off = static_cast<Eigen::Index>(aug.flag1_offset());

  Matrix visited(na, na);
  if (aug.augmented.size() <= Propagator::kDenseLimit) {
    const Matrix h = aug.augmented.matrix(before);
    for (Eigen::Index i = 0; i < na; ++i) {
      const auto row = static_cast<Eigen::Index>(aug.start_index(part.A[static_cast<std::size_t>(i)], part.B_alpha));
      visited.row(i) = h.block(row, off, 1, na);
    }
  } else {
    for (Eigen::Index i = 0; i < na; ++i) {
      Vector e = Vector::Zero(static_cast<Eigen::Index>(aug.augmented.size()));
      e[static_cast<Eigen::Index>(aug.start_index(part.A[static_cast<std::size_t>(i)], part.B_alpha))] = 1.0;
      visited.row(i) = aug.augmented.apply(e, before).segment(off, na).transpose();
    }
  }
  const Propagator trap(aug.trap);
  Matrix mass;
  if (aug.trap.size() <= Propagator::kDenseLimit) {
    mass = visited * trap.matrix(window);
  } else {
    mass.resize(na, na);
    for (Eigen::Index i = 0; i < na; ++i) mass.row(i) = trap.apply(visited.row(i).transpose(), window).transpose();
  }
  for (Eigen::Index i = 0; i < na; ++i) {
    const double p = mass.row(i).sum();
    out.conditioning_probability.push_back(p);
    if (p >= min_probability && p > 0.0)
      out.measures.emplace_back(ProbabilityVector::normalized(aug.trap.to_parent(mass.row(i).transpose())));
    else
      out.measures.emplace_back(std::nullopt);
  }
  return out;
}

Vector visit_then_survive(const FiniteChain &chain, const TrapPartition &part, double s, double t) {
  part.check(chain.state_count());
  if (part.B_alpha.empty()) throw Error(ErrorCode::EmptySet, "B_alpha is empty");
  if (!(s >= 0.0 && t >= s)) throw Error(ErrorCode::InvalidArgument, "need 0 <= s <= t");
  double before = s;
  double window = t - s;
  if (!chain.is_continuous()) {
    before = static_cast<double>(floor_steps(s));
    window = static_cast<double>(floor_steps(t)) - before;
  }
  const FlagAugmented aug = build_flag_augmented(chain, part);
  const Propagator trap(aug.trap);
  // Backward: survive the window from A, then read off the flag-1 block.
  const Vector alive = trap.apply_right(Vector::Ones(static_cast<Eigen::Index>(part.A.size())), window);
  Vector payoff = Vector::Zero(static_cast<Eigen::Index>(aug.augmented.size()));
  payoff.tail(static_cast<Eigen::Index>(part.A.size())) = alive;
  const Vector value = aug.augmented.apply_right(payoff, before);
  Vector out = Vector::Zero(static_cast<Eigen::Index>(chain.state_count()));
  for (auto x : part.A)
    out[static_cast<Eigen::Index>(x)] = std::clamp(value[static_cast<Eigen::Index>(aug.start_index(x, part.B_alpha))], 0.0, 1.0);
  return out;
}

QuasiStationaryResult quasi_stationary(const FiniteChain &chain, const TrapPartition &part) {
  part.check(chain.state_count());
  if (!is_strongly_connected(chain.matrix(), part.A))
    throw Error(ErrorCode::DisconnectedTrap, "A splits into several communicating classes");
  const SubChain sub = restrict_chain(chain, part.A);
  const auto n = static_cast<Eigen::Index>(sub.size());
  const SparseMatrix green_inv = detail::negative_rate_block(chain, part.A);  // -L_A
  const Vector killing = sub.killing();

  Vector mu = Vector::Constant(n, 1.0 / static_cast<double>(n));
  if (sub.size() < 2000) {
    Eigen::EigenSolver<Matrix> es(Matrix(green_inv).transpose() * -1.0, true);
    if (es.info() == Eigen::Success) {
      Eigen::Index best = 0;
      for (Eigen::Index i = 1; i < n; ++i)
        if (es.eigenvalues()[i].real() > es.eigenvalues()[best].real()) best = i;
      Vector v = es.eigenvectors().col(best).real().cwiseAbs();
      if (v.sum() > 0.0) mu = v / v.sum();
    }
  } else {
    // Power iteration on the killed kernel.
    SparseMatrix p = sub.sub_matrix();
    if (chain.is_continuous()) {
      SparseMatrix id(n, n);
      id.setIdentity();
      p = id + p / sub.uniformization_rate();
    }
    bool converged = false;
    for (int it = 0; it < 1000000; ++it) {
      Vector next = p.transpose() * mu;
      const double rho = next.sum();
      if (!(rho > 0.0)) break;
      next /= rho;
      const double change = (next - mu).cwiseAbs().maxCoeff();
      mu = std::move(next);
      if (change <= 1e-13) {
        converged = true;
        break;
      }
    }
    if (!converged) throw Error(ErrorCode::NonConvergence, "power iteration on the killed kernel did not converge");
  }

  // Inverse iteration with the Green operator (-L_A)^{-1} polishes the Perron vector.
  const detail::LinearSolver solver(green_inv);
  double residual = 0.0;
  double kappa = mu.dot(killing);
  for (int it = 0; it < 500; ++it) {
    Vector next = solver.solve_left(mu).cwiseMax(0.0);
    next /= next.sum();
    const double change = (next - mu).cwiseAbs().sum();
    mu = std::move(next);
    if (change <= 1e-15 && it >= 2) break;
  }
  kappa = mu.dot(killing);
  residual = (green_inv.transpose() * mu - kappa * mu).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-10) || !(kappa > 0.0))
    throw Error(ErrorCode::NonConvergence, "quasi-stationary residual " + std::to_string(residual));

  QuasiStationaryResult out{ProbabilityVector::normalized(sub.to_parent(mu)), 1.0 / kappa,
                            chain.is_continuous() ? kappa : -std::log1p(-kappa), residual};

  // Started from the quasi-stationary law the exit time is exactly exponential (geometric).
  const Propagator prop(sub);
  if (chain.is_continuous()) {
    for (double u : {0.5, 1.0, 2.0, 4.0}) {
      const double s = prop.apply(mu, u * out.mean_exit_time).sum();
      if (std::abs(s - std::exp(-u)) > 1e-8)
        throw Error(ErrorCode::InternalBoundViolation, "exit law from the quasi-stationary measure is not exponential");
    }
  } else {
    const auto tstar = static_cast<double>(floor_steps(out.mean_exit_time));
    for (double k : {1.0, std::floor(tstar / 2.0), tstar}) {
      if (k < 1.0) continue;
      const double s = prop.apply(mu, k).sum();
      if (std::abs(s - std::exp(-out.decay_rate * k)) > 1e-8)
        throw Error(ErrorCode::InternalBoundViolation, "exit law from the quasi-stationary measure is not geometric");
    }
  }
  return out;
}

ProbabilityVector empirical_measure(const FiniteChain &chain, std::size_t x, const TrapPartition &part) {
  part.check(chain.state_count());
  require_in(part.A, x, "start outside A:");
  const SubChain sub = restrict_chain(chain, part.A);
  Vector e = Vector::Zero(static_cast<Eigen::Index>(sub.size()));
  e[static_cast<Eigen::Index>(sub.local_index(x))] = 1.0;
  const Vector local_time = detail::LinearSolver(detail::negative_rate_block(chain, part.A)).solve_left(e);
  return ProbabilityVector::normalized(sub.to_parent(local_time));
}

double tv_distance(const Vector &p, const Vector &q) {
  if (p.size() != q.size()) throw Error(ErrorCode::DimensionMismatch, "measures live on different spaces");
  return std::clamp(0.5 * (p - q).cwiseAbs().sum(), 0.0, 1.0);
}

double tv_distance(const ProbabilityVector &p, const ProbabilityVector &q) {
  return tv_distance(p.weights(), q.weights());
}

Matrix evolved_rows(const FiniteChain &chain, const StateSet &starts, double t) {
  const Propagator prop(chain);
  const auto n = static_cast<Eigen::Index>(chain.state_count());
  Matrix rows(static_cast<Eigen::Index>(starts.size()), n);
  if (chain.state_count() <= Propagator::kDenseLimit) {
    const Matrix h = prop.matrix(t);
    for (std::size_t i = 0; i < starts.size(); ++i)
      rows.row(static_cast<Eigen::Index>(i)) = h.row(static_cast<Eigen::Index>(starts[i]));
    return rows;
  }
  for (std::size_t i = 0; i < starts.size(); ++i) {
    Vector e = Vector::Zero(n);
    e[static_cast<Eigen::Index>(starts[i])] = 1.0;
    rows.row(static_cast<Eigen::Index>(i)) = prop.apply(e, t).transpose();
  }
  return rows;
}

namespace {

double max_pairwise_tv(const Matrix &rows) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    for (Eigen::Index j = i + 1; j < rows.rows(); ++j)
      best = std::max(best, 0.5 * (rows.row(i) - rows.row(j)).cwiseAbs().sum());
  return std::min(best, 1.0);
}

}  // namespace

DistanceProfile d_profile(const FiniteChain &chain, double t) {
  return d_profile(chain, stationary_measure(chain), t);
}

DistanceProfile d_profile(const FiniteChain &chain, const ProbabilityVector &pi, double t) {
  const Matrix rows = evolved_rows(chain, range_set(0, chain.state_count()), t);
  double d = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    d = std::max(d, 0.5 * (rows.row(i).transpose() - pi.weights()).cwiseAbs().sum());
  return {std::min(d, 1.0), max_pairwise_tv(rows)};
}

double d_bar_K(const FiniteChain &chain, const StateSet &K, double t) {
  if (K.empty()) throw Error(ErrorCode::EmptySet, "d_bar_K needs a nonempty set");
  return max_pairwise_tv(evolved_rows(chain, make_state_set(K), t));
}

}  // namespace metatrap
