#ifndef METATRAP_HPG_HPP
#define METATRAP_HPG_HPP

#include <map>
#include <string>
#include <vector>

#include "metatrap/measures.hpp"

namespace metatrap {

struct HpGParameters {
  double R = 0.0;
  double alpha = 0.5;
  std::vector<double> t_grid;  // empty: geometric grid 2R .. 20 T*, 64 points per decade
};

struct HpGCertificate {
  double R = 0.0;
  double alpha = 0.5;
  double f = 0.0;  // f_A(2R)
  double d = 0.0;  // d_bar_{B_alpha}(R)
  double r = 0.0;  // sup_x P(tau^x_{B_alpha u G} > R)
  double c = 0.0;  // r + 2 f^alpha
  double c_bar = 0.0;
  double epsilon1 = 0.0;
  double epsilon2 = 0.0;
  bool applicable = false;
  StateSet B_alpha;
};

/// Pure arithmetic: c, c_bar, epsilon1, epsilon2 from the measured (f, d, r).
/// c_bar and the epsilons are NaN when c >= 1/4.
HpGCertificate assemble_certificate(double R, double alpha, double f, double d, double r, StateSet B_alpha);

/// Raised when r + 2 f^alpha >= 1/4; carries the measured parameters.
class NotApplicableError : public Error {
 public:
  explicit NotApplicableError(HpGCertificate cert);
  const HpGCertificate &certificate() const { return cert_; }

 private:
  HpGCertificate cert_;
};

struct EscapeProfile {
  double f = 0.0;              // (1/2) sum_x pi_A(x) [forward(x) + backward(x)]
  double forward_pi_A = 0.0;   // P(tau^{pi_A}_G <= t)
  double backward_pi_A = 0.0;  // same for the time-reversed chain
  Vector forward;              // P(tau^x_G <= t), full length
  Vector backward;             // P(tau^{<-x}_G <= t), full length
};

/// Forward and time-reversed escape probabilities by time t. Throws
/// InternalBoundViolation when the two single-sided values differ by > 1e-10.
EscapeProfile escape_profile(const FiniteChain &chain, const ProbabilityVector &pi, const TrapPartition &part,
                             double t);
/// f_A(t).
double escape_functional(const FiniteChain &chain, const ProbabilityVector &pi, const TrapPartition &part, double t);

/// {x in A : (1/2)[P(tau^x_G <= 2R) + P(tau^{<-x}_G <= 2R)] <= f^alpha}.
/// Checks pi_A(B_alpha) >= 1 - f^(1-alpha).
StateSet compute_B_alpha(const FiniteChain &chain, const ProbabilityVector &pi, const TrapPartition &part, double R,
                         double alpha);

struct CheckE {
  double f;
  bool pass;
};
CheckE check_E(const FiniteChain &chain, const ProbabilityVector &pi, const TrapPartition &part, double R,
               double threshold = 1.0);
/// d_bar_{B_alpha}(R).
double check_T(const FiniteChain &chain, const StateSet &B_alpha, double R);
/// sup over all states of P(tau^x_{B_alpha u G} > R).
double check_Rc(const FiniteChain &chain, const StateSet &B_alpha, const StateSet &G, double R);

/// Measures (f, d, r) and assembles the certificate without throwing.
HpGCertificate measure_hypotheses(const FiniteChain &chain, const TrapPartition &part, const HpGParameters &params);
/// As measure_hypotheses; throws NotApplicableError unless c < 1/4.
HpGCertificate certify(const FiniteChain &chain, const TrapPartition &part, const HpGParameters &params);

/// The shortcut bound r <= d_A + f + f^(1-alpha) with d_A = d_bar_A(R).
struct MixingShortcut {
  double d_A;
  double f;
  double r_bound;
};
MixingShortcut mixing_shortcut(const FiniteChain &chain, const TrapPartition &part, double R, double alpha);

struct ConvergenceReport {
  double epsilon1 = 0.0;
  double epsilon2 = 0.0;
  double sup_hat = 0.0;  // sup_{x,t} tv(mu_hat^x_t, pi_A)
  std::size_t sup_hat_state = 0;
  double sup_hat_time = 0.0;
  double sup_tilde = 0.0;  // sup_t tv(mu_tilde^{pi_A}_t, pi_A)
  double sup_tilde_time = 0.0;
  double sup_hat_qs = 0.0;  // sup_{x,t} tv(mu_hat^x_t, mu*_A)
  std::size_t sup_hat_qs_state = 0;
  double sup_hat_qs_time = 0.0;
  double sup_empirical = 0.0;  // sup_{x in B_alpha} tv(mu^(em)x, pi_A)
  std::size_t sup_empirical_state = 0;
  std::size_t skipped = 0;  // (x, t) pairs whose conditioning event underflowed
  std::vector<double> times;
  bool ok = false;
};

/// Measures the total-variation distances bounded by epsilon1/epsilon2 on
/// t >= 2R. Throws BoundViolation naming (x, t) when a bound fails and
/// `throw_on_violation` is set.
ConvergenceReport verify_convdtv(const FiniteChain &chain, const TrapPartition &part, const HpGCertificate &cert,
                                 const std::vector<double> &t_grid = {}, bool throw_on_violation = true);

/// sup_i e^{t_i/T} |tail_i - prefactor e^{-t_i/T}|.
double weighted_exponential_deviation(const std::vector<double> &times, const std::vector<double> &tail, double T,
                                      double prefactor = 1.0);

/// P[tau^start_G >= t] on the grid (discrete chains: tau >= t iff tau > ceil(t) - 1).
std::vector<double> tail_at_least(const FiniteChain &chain, const ProbabilityVector &start, const StateSet &G,
                                  const std::vector<double> &times);

struct ReportCurve {
  std::string start;  // "pi_A", "mu*" or a state label
  double prefactor = 1.0;
  std::vector<double> tail;
  std::vector<double> weighted_deviation;
  double sup_deviation = 0.0;
};

struct ExponentialityReport {
  double T_star = 0.0;
  double R = 0.0;
  std::vector<double> times;
  double sup_weighted_deviation = 0.0;           // start pi_A
  std::map<std::size_t, double> per_start_deviations;  // x in B_alpha
  std::map<std::size_t, double> prefactor_x;           // x in A \ B_alpha
  std::map<std::size_t, double> outside_deviations;    // x in A \ B_alpha, against prefactor_x e^{-t}
  double epsilon_measured = 0.0;  // max over pi_A, B_alpha and A \ B_alpha
  double C = 10.0;
  double epsilon_reference = 0.0;  // C (r + epsilon2)
  bool within_reference = false;
  // Time-scale equivalence E[tau^{mu*}] / E[tau^nu].
  double ratio_pi_A = 0.0;
  std::map<std::size_t, double> ratio_B_alpha;
  double max_ratio_deviation = 0.0;  // max |ratio - 1|
  // Recurrence time against the exit scale.
  double delta = 0.0;  // 2 max_y tv(mu_hat^y_{2R}, mu*_A)
  double R_over_T_star = 0.0;
  double rat_reference = 0.0;  // C (f + delta)
  std::vector<ReportCurve> curves;
};

ExponentialityReport exponentiality_report(const FiniteChain &chain, const TrapPartition &part,
                                           const HpGCertificate &cert, const std::vector<double> &t_grid = {},
                                           double C = 10.0);

/// Default grid 2R .. 20 T* with 64 points per decade (a single point when 2R >= 20 T*).
std::vector<double> default_grid(double R, double T_star);

}  // namespace metatrap

#endif
