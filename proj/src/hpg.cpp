#include "metatrap/hpg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "metatrap/hitting.hpp"
#include "metatrap/propagator.hpp"

namespace metatrap {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Real horizon in the chain's own time unit.
double horizon(const FiniteChain &chain, double t) {
  return chain.is_continuous() ? t : static_cast<double>(floor_steps(t));
}

std::string describe(const HpGCertificate &c) {
  std::ostringstream os;
  os << "r + 2 f^alpha = " << c.c << " >= 1/4 (f = " << c.f << ", d = " << c.d << ", r = " << c.r << ")";
  return os.str();
}

// Survival of the killed chain from every state: row i holds P[tau^x_G >= times[i]].
Matrix tails_all_starts(const FiniteChain &chain, const StateSet &G, const std::vector<double> &times) {
  const StateSet A = complement(chain.state_count(), G);
  const SubChain sub = restrict_chain(chain, A);
  const Propagator prop(sub);
  Matrix out(static_cast<Eigen::Index>(times.size()), static_cast<Eigen::Index>(chain.state_count()));
  Vector alive = Vector::Ones(static_cast<Eigen::Index>(A.size()));
  double clock = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0 && !(times[i] > times[i - 1])) throw Error(ErrorCode::InvalidArgument, "time grid must increase");
    double target = times[i];
    if (!chain.is_continuous()) target = std::max(0.0, std::ceil(times[i] - 1e-12) - 1.0);
    if (target > clock) {
      alive = prop.apply_right(alive, target - clock);
      clock = target;
    }
    out.row(static_cast<Eigen::Index>(i)) = sub.to_parent(alive.cwiseMax(0.0).cwiseMin(1.0)).transpose();
  }
  return out;
}

EscapeProfile escape_profile_at(const FiniteChain &chain, const ProbabilityVector &pi, const TrapPartition &part,
                                double t) {
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative time");
  part.check(chain.state_count());
  const double h = horizon(chain, t);
  const ProbabilityVector pi_A = restricted_invariant(pi, part.A);
  auto escape = [&](const FiniteChain &c) {
    const SubChain sub = restrict_chain(c, part.A);
    const Vector alive = Propagator(sub).apply_right(Vector::Ones(static_cast<Eigen::Index>(sub.size())), h);
    Vector out = Vector::Zero(static_cast<Eigen::Index>(c.state_count()));
    for (std::size_t i = 0; i < sub.size(); ++i)
      out[static_cast<Eigen::Index>(part.A[i])] = std::clamp(1.0 - alive[static_cast<Eigen::Index>(i)], 0.0, 1.0);
    return out;
  };
  EscapeProfile p;
  p.forward = escape(chain);
  p.backward = escape(adjoint(chain, pi));
  p.forward_pi_A = pi_A.weights().dot(p.forward);
  p.backward_pi_A = pi_A.weights().dot(p.backward);
  p.f = 0.5 * (p.forward_pi_A + p.backward_pi_A);
  if (std::abs(p.forward_pi_A - p.backward_pi_A) > 1e-10) {
    std::ostringstream os;
    os << "time-reversal identity fails at t = " << t << ": " << p.forward_pi_A << " vs " << p.backward_pi_A;
    throw Error(ErrorCode::InternalBoundViolation, os.str());
  }
  return p;
}

StateSet basin(const EscapeProfile &p, const ProbabilityVector &pi, const TrapPartition &part, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0,1)");
  const double threshold = std::pow(p.f, alpha);
  const ProbabilityVector pi_A = restricted_invariant(pi, part.A);
  StateSet B;
  double mass = 0.0;
  for (auto x : part.A) {
    const auto i = static_cast<Eigen::Index>(x);
    if (0.5 * (p.forward[i] + p.backward[i]) <= threshold) {
      B.push_back(x);
      mass += pi_A[x];
    }
  }
  const double floor_mass = 1.0 - std::pow(p.f, 1.0 - alpha);
  if (mass < floor_mass - 1e-12) {
    std::ostringstream os;
    os << "pi_A(B_alpha) = " << mass << " below 1 - f^(1-alpha) = " << floor_mass;
    throw Error(ErrorCode::InternalBoundViolation, os.str());
  }
  return B;
}

void bound_violation(bool enabled, const std::string &what, std::size_t x, double t, double value, double bound) {
  if (!enabled) return;
  std::ostringstream os;
  os << what << " at x = " << x << ", t = " << t << ": " << value << " > " << bound;
  throw Error(ErrorCode::BoundViolation, os.str());
}

}  // namespace

HpGCertificate assemble_certificate(double R, double alpha, double f, double d, double r, StateSet B_alpha) {
  HpGCertificate c;
  c.R = R;
  c.alpha = alpha;
  c.f = f;
  c.d = d;
  c.r = r;
  c.B_alpha = std::move(B_alpha);
  c.c = r + 2.0 * std::pow(f, alpha);
  c.applicable = c.c < 0.25;
  if (c.applicable) {
    c.c_bar = 0.5 - std::sqrt(0.25 - c.c);
    c.epsilon1 = 4.0 * (c.c_bar + 2.0 * f + std::pow(f, alpha) + d);
    c.epsilon2 = c.epsilon1 + std::pow(f, 1.0 - alpha);
  } else {
    c.c_bar = c.epsilon1 = c.epsilon2 = kNaN;
  }
  return c;
}

NotApplicableError::NotApplicableError(HpGCertificate cert)
    : Error(ErrorCode::NotApplicable, describe(cert)), cert_(std::move(cert)) {}

EscapeProfile escape_profile(const FiniteChain &chain, const ProbabilityVector &pi, const TrapPartition &part,
                             double t) {
  return escape_profile_at(chain, pi, part, t);
}

double escape_functional(const FiniteChain &chain, const ProbabilityVector &pi, const TrapPartition &part, double t) {
  return escape_profile_at(chain, pi, part, t).f;
}

StateSet compute_B_alpha(const FiniteChain &chain, const ProbabilityVector &pi, const TrapPartition &part, double R,
                         double alpha) {
  return basin(escape_profile_at(chain, pi, part, 2.0 * R), pi, part, alpha);
}

CheckE check_E(const FiniteChain &chain, const ProbabilityVector &pi, const TrapPartition &part, double R,
               double threshold) {
  const double f = escape_functional(chain, pi, part, 2.0 * R);
  return {f, f <= threshold};
}

double check_T(const FiniteChain &chain, const StateSet &B_alpha, double R) {
  if (B_alpha.size() <= 1) return 0.0;
  return d_bar_K(chain, B_alpha, horizon(chain, R));
}

double check_Rc(const FiniteChain &chain, const StateSet &B_alpha, const StateSet &G, double R) {
  const StateSet absorbing = set_union(make_state_set(B_alpha), make_state_set(G));
  const StateSet rest = complement(chain.state_count(), absorbing);
  if (rest.empty()) return 0.0;
  const SubChain sub = restrict_chain(chain, rest);
  const Vector alive =
      Propagator(sub).apply_right(Vector::Ones(static_cast<Eigen::Index>(sub.size())), horizon(chain, R));
  return std::clamp(alive.maxCoeff(), 0.0, 1.0);
}

HpGCertificate measure_hypotheses(const FiniteChain &chain, const TrapPartition &part, const HpGParameters &params) {
  if (!(params.R > 0.0)) throw Error(ErrorCode::InvalidArgument, "R must be positive");
  part.check(chain.state_count());
  const ProbabilityVector pi = stationary_measure(chain);
  const EscapeProfile profile = escape_profile_at(chain, pi, part, 2.0 * params.R);
  StateSet B = basin(profile, pi, part, params.alpha);
  const double d = check_T(chain, B, params.R);
  const double r = check_Rc(chain, B, part.G, params.R);
  return assemble_certificate(params.R, params.alpha, profile.f, d, r, std::move(B));
}

HpGCertificate certify(const FiniteChain &chain, const TrapPartition &part, const HpGParameters &params) {
  HpGCertificate cert = measure_hypotheses(chain, part, params);
  if (!cert.applicable) throw NotApplicableError(cert);
  return cert;
}

MixingShortcut mixing_shortcut(const FiniteChain &chain, const TrapPartition &part, double R, double alpha) {
  part.check(chain.state_count());
  const ProbabilityVector pi = stationary_measure(chain);
  const double f = escape_functional(chain, pi, part, 2.0 * R);
  const double d_A = part.A.size() <= 1 ? 0.0 : d_bar_K(chain, part.A, horizon(chain, R));
  return {d_A, f, d_A + f + std::pow(f, 1.0 - alpha)};
}

std::vector<double> default_grid(double R, double T_star) {
  const double start = 2.0 * R;
  const double stop = 20.0 * T_star;
  if (!(start < stop)) return {start};
  return geometric_grid(start, stop, 64);
}

ConvergenceReport verify_convdtv(const FiniteChain &chain, const TrapPartition &part, const HpGCertificate &cert,
                                 const std::vector<double> &t_grid, bool throw_on_violation) {
  if (!cert.applicable) throw NotApplicableError(cert);
  TrapPartition p = part;
  p.B_alpha = cert.B_alpha;
  p.alpha = cert.alpha;
  p.check(chain.state_count());
  const ProbabilityVector pi = stationary_measure(chain);
  const ProbabilityVector pi_A = restricted_invariant(pi, p.A);
  const QuasiStationaryResult qs = quasi_stationary(chain, p);

  ConvergenceReport rep;
  rep.epsilon1 = cert.epsilon1;
  rep.epsilon2 = cert.epsilon2;
  const std::vector<double> grid = t_grid.empty() ? default_grid(cert.R, qs.mean_exit_time) : t_grid;
  double last_horizon = -1.0;
  for (double t : grid) {
    if (t < 2.0 * cert.R) continue;
    const double h = horizon(chain, t);
    if (h == last_horizon) continue;
    last_horizon = h;
    rep.times.push_back(t);

    const DoublyConditionedFamily fam = doubly_conditioned_family(chain, p, t, cert.R);
    for (std::size_t i = 0; i < fam.starts.size(); ++i) {
      if (!fam.measures[i]) {
        ++rep.skipped;
        continue;
      }
      const double to_pi = tv_distance(*fam.measures[i], pi_A);
      if (to_pi > rep.sup_hat) {
        rep.sup_hat = to_pi;
        rep.sup_hat_state = fam.starts[i];
        rep.sup_hat_time = t;
      }
      const double to_qs = tv_distance(*fam.measures[i], qs.measure);
      if (to_qs > rep.sup_hat_qs) {
        rep.sup_hat_qs = to_qs;
        rep.sup_hat_qs_state = fam.starts[i];
        rep.sup_hat_qs_time = t;
      }
    }
    const double tilde = tv_distance(conditioned_mixture(chain, pi_A, p, h), pi_A);
    if (tilde > rep.sup_tilde) {
      rep.sup_tilde = tilde;
      rep.sup_tilde_time = t;
    }
  }
  for (auto x : p.B_alpha) {
    const double em = tv_distance(empirical_measure(chain, x, p), pi_A);
    if (em > rep.sup_empirical) {
      rep.sup_empirical = em;
      rep.sup_empirical_state = x;
    }
  }
  rep.ok = rep.sup_hat <= rep.epsilon1 && rep.sup_tilde <= rep.epsilon2 &&
           rep.sup_hat_qs <= rep.epsilon1 + rep.epsilon2 && rep.sup_empirical <= rep.epsilon1;
  if (rep.sup_hat > rep.epsilon1)
    bound_violation(throw_on_violation, "tv(mu_hat, pi_A) exceeds epsilon1", rep.sup_hat_state, rep.sup_hat_time,
                    rep.sup_hat, rep.epsilon1);
  if (rep.sup_tilde > rep.epsilon2)
    bound_violation(throw_on_violation, "tv(mu_tilde^pi_A, pi_A) exceeds epsilon2", 0, rep.sup_tilde_time,
                    rep.sup_tilde, rep.epsilon2);
  if (rep.sup_hat_qs > rep.epsilon1 + rep.epsilon2)
    bound_violation(throw_on_violation, "tv(mu_hat, mu*) exceeds epsilon1 + epsilon2", rep.sup_hat_qs_state,
                    rep.sup_hat_qs_time, rep.sup_hat_qs, rep.epsilon1 + rep.epsilon2);
  if (rep.sup_empirical > rep.epsilon1)
    bound_violation(throw_on_violation, "tv(mu_em, pi_A) exceeds epsilon1", rep.sup_empirical_state, 0.0,
                    rep.sup_empirical, rep.epsilon1);
  return rep;
}

double weighted_exponential_deviation(const std::vector<double> &times, const std::vector<double> &tail, double T,
                                      double prefactor) {
  if (times.size() != tail.size()) throw Error(ErrorCode::DimensionMismatch, "times and tail differ in length");
  if (!(T > 0.0)) throw Error(ErrorCode::InvalidArgument, "time scale must be positive");
  double sup = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double u = times[i] / T;
    sup = std::max(sup, std::abs(std::exp(u) * tail[i] - prefactor));
  }
  return sup;
}

std::vector<double> tail_at_least(const FiniteChain &chain, const ProbabilityVector &start, const StateSet &G,
                                  const std::vector<double> &times) {
  const StateSet target = make_state_set(G);
  if (!start.supported_on(complement(chain.state_count(), target)))
    throw Error(ErrorCode::InvalidArgument, "start must be supported off G");
  const Matrix tails = tails_all_starts(chain, target, times);
  std::vector<double> out(times.size());
  for (std::size_t i = 0; i < times.size(); ++i)
    out[i] = std::clamp(tails.row(static_cast<Eigen::Index>(i)).dot(start.weights()), 0.0, 1.0);
  return out;
}

ExponentialityReport exponentiality_report(const FiniteChain &chain, const TrapPartition &part,
                                           const HpGCertificate &cert, const std::vector<double> &t_grid, double C) {
  TrapPartition p = part;
  p.B_alpha = cert.B_alpha;
  p.alpha = cert.alpha;
  p.check(chain.state_count());
  const ProbabilityVector pi = stationary_measure(chain);
  const ProbabilityVector pi_A = restricted_invariant(pi, p.A);
  const QuasiStationaryResult qs = quasi_stationary(chain, p);

  ExponentialityReport rep;
  rep.T_star = qs.mean_exit_time;
  rep.R = cert.R;
  rep.C = C;
  rep.times = t_grid.empty() ? default_grid(cert.R, rep.T_star) : t_grid;
  const Matrix tails = tails_all_starts(chain, p.G, rep.times);

  auto curve = [&](std::string name, const Vector &weights, double prefactor) {
    ReportCurve c;
    c.start = std::move(name);
    c.prefactor = prefactor;
    for (std::size_t i = 0; i < rep.times.size(); ++i) {
      const double s = std::clamp(tails.row(static_cast<Eigen::Index>(i)).dot(weights), 0.0, 1.0);
      c.tail.push_back(s);
      c.weighted_deviation.push_back(std::abs(std::exp(rep.times[i] / rep.T_star) * s - prefactor));
    }
    c.sup_deviation = c.weighted_deviation.empty()
                          ? 0.0
                          : *std::max_element(c.weighted_deviation.begin(), c.weighted_deviation.end());
    rep.curves.push_back(c);
    return c.sup_deviation;
  };
  const auto &labels = chain.labels();
  auto label = [&](std::size_t x) { return labels.empty() ? std::to_string(x) : labels[x]; };
  auto point = [&](std::size_t x) {
    Vector e = Vector::Zero(static_cast<Eigen::Index>(chain.state_count()));
    e[static_cast<Eigen::Index>(x)] = 1.0;
    return e;
  };

  rep.sup_weighted_deviation = curve("pi_A", pi_A.weights(), 1.0);
  curve("mu*", qs.measure.weights(), 1.0);
  rep.epsilon_measured = rep.sup_weighted_deviation;
  for (auto x : p.B_alpha) {
    rep.per_start_deviations[x] = curve(label(x), point(x), 1.0);
    rep.epsilon_measured = std::max(rep.epsilon_measured, rep.per_start_deviations[x]);
  }
  if (!p.B_alpha.empty()) {
    const Vector pref = visit_then_survive(chain, p, cert.R, 2.0 * cert.R);
    for (auto x : p.A) {
      if (contains(p.B_alpha, x)) continue;
      rep.prefactor_x[x] = pref[static_cast<Eigen::Index>(x)];
      rep.outside_deviations[x] = curve(label(x), point(x), rep.prefactor_x[x]);
      rep.epsilon_measured = std::max(rep.epsilon_measured, rep.outside_deviations[x]);
    }
  }
  rep.epsilon_reference = C * (cert.r + cert.epsilon2);
  rep.within_reference = rep.epsilon_measured <= rep.epsilon_reference;

  const Vector means = mean_hitting_times(chain, p.G);
  rep.ratio_pi_A = rep.T_star / pi_A.weights().dot(means);
  rep.max_ratio_deviation = std::abs(rep.ratio_pi_A - 1.0);
  for (auto x : p.B_alpha) {
    rep.ratio_B_alpha[x] = rep.T_star / means[static_cast<Eigen::Index>(x)];
    rep.max_ratio_deviation = std::max(rep.max_ratio_deviation, std::abs(rep.ratio_B_alpha[x] - 1.0));
  }

  if (!p.B_alpha.empty()) {
    const DoublyConditionedFamily fam = doubly_conditioned_family(chain, p, 2.0 * cert.R, cert.R);
    double worst = 0.0;
    for (const auto &m : fam.measures)
      if (m) worst = std::max(worst, tv_distance(*m, qs.measure));
    rep.delta = 2.0 * worst;
  }
  rep.R_over_T_star = cert.R / rep.T_star;
  rep.rat_reference = C * (cert.f + rep.delta);
  return rep;
}

}  // namespace metatrap
