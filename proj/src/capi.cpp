#include "metatrap/metatrap.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <sstream>

#include "metatrap/hitting.hpp"
#include "metatrap/hpg.hpp"
#include "metatrap/io.hpp"
#include "metatrap/measures.hpp"
#include "metatrap/models.hpp"
#include "metatrap/montecarlo.hpp"
#include "metatrap/propagator.hpp"

using namespace metatrap;

struct mt_chain {
  FiniteChain chain;
  std::vector<std::string> labels;
};

namespace {

thread_local std::string last_error;

mt_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return MT_INVALID_ARGUMENT;
    case ErrorCode::InvalidChain: return MT_INVALID_CHAIN;
    case ErrorCode::ParseError: return MT_PARSE_ERROR;
    case ErrorCode::SingularSystem: return MT_SINGULAR_SYSTEM;
    case ErrorCode::ZeroMassState: return MT_ZERO_MASS_STATE;
    case ErrorCode::ZeroMass: return MT_ZERO_MASS;
    case ErrorCode::NonIntegerTime: return MT_NON_INTEGER_TIME;
    case ErrorCode::EmptyComplement: return MT_EMPTY_COMPLEMENT;
    case ErrorCode::EmptySet: return MT_EMPTY_SET;
    case ErrorCode::DimensionMismatch: return MT_DIMENSION_MISMATCH;
    case ErrorCode::ExtinctMass: return MT_EXTINCT_MASS;
    case ErrorCode::ZeroConditioning: return MT_ZERO_CONDITIONING;
    case ErrorCode::NonConvergence: return MT_NON_CONVERGENCE;
    case ErrorCode::DisconnectedTrap: return MT_DISCONNECTED_TRAP;
    case ErrorCode::NotBirthDeath: return MT_NOT_BIRTH_DEATH;
    case ErrorCode::InternalBoundViolation: return MT_INTERNAL_BOUND_VIOLATION;
    case ErrorCode::BoundViolation: return MT_BOUND_VIOLATION;
    case ErrorCode::NotApplicable: return MT_NOT_APPLICABLE;
    case ErrorCode::LumpingViolation: return MT_LUMPING_VIOLATION;
    case ErrorCode::TooLarge: return MT_TOO_LARGE;
    case ErrorCode::AllCensored: return MT_ALL_CENSORED;
    case ErrorCode::EmptySample: return MT_EMPTY_SAMPLE;
  }
  return MT_INTERNAL_ERROR;
}

template <class F>
mt_status guard(F &&body) {
  try {
    body();
    last_error.clear();
    return MT_OK;
  } catch (const Error &e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc &) {
    last_error = "out of memory";
    return MT_INTERNAL_ERROR;
  } catch (const std::exception &e) {
    last_error = e.what();
    return MT_INTERNAL_ERROR;
  }
}

void require(const void *p, const char *what) {
  if (p == nullptr) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is null");
}

char *dup_string(const std::string &s) {
  auto *out = static_cast<char *>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <class T>
T *dup_array(const std::vector<T> &v) {
  auto *out = static_cast<T *>(std::malloc(std::max<std::size_t>(1, v.size()) * sizeof(T)));
  if (out == nullptr) throw std::bad_alloc();
  if (!v.empty()) std::memcpy(out, v.data(), v.size() * sizeof(T));
  return out;
}

mt_chain *wrap(FiniteChain chain) {
  std::vector<std::string> labels = chain.labels();
  if (labels.empty())
    for (std::size_t i = 0; i < chain.state_count(); ++i) labels.push_back(std::to_string(i));
  return new mt_chain{std::move(chain), std::move(labels)};
}

const FiniteChain &chain_of(const mt_chain *c) {
  require(c, "chain");
  return c->chain;
}

StateSet target_set(const FiniteChain &chain, const size_t *G, size_t count) {
  if (count == 0) throw Error(ErrorCode::EmptyComplement, "target set G is empty");
  require(G, "G");
  StateSet s(G, G + count);
  for (auto g : s)
    if (g >= chain.state_count()) throw Error(ErrorCode::InvalidArgument, "target state " + std::to_string(g) + " out of range");
  return make_state_set(std::move(s));
}

Vector vector_of(const FiniteChain &chain, const double *v) {
  require(v, "vector");
  return Eigen::Map<const Vector>(v, static_cast<Eigen::Index>(chain.state_count()));
}

void copy_out(const Vector &v, double *out) {
  require(out, "output");
  std::copy(v.data(), v.data() + v.size(), out);
}

}  // namespace

extern "C" {

const char *mt_last_error(void) { return last_error.c_str(); }

const char *mt_status_name(mt_status status) {
  if (status == MT_OK) return "Ok";
  if (status == MT_INTERNAL_ERROR) return "InternalError";
  if (status > MT_OK && status < MT_INTERNAL_ERROR)
    return to_string(static_cast<ErrorCode>(static_cast<int>(status) - 1)).data();
  return "Unknown";
}

void mt_string_free(char *s) { std::free(s); }
void mt_doubles_free(double *v) { std::free(v); }
void mt_indices_free(size_t *v) { std::free(v); }

mt_status mt_chain_from_json(const char *text, mt_chain **out) {
  return guard([&] {
    require(text, "text");
    require(out, "out");
    *out = wrap(chain_from_json(text));
  });
}

mt_status mt_chain_load(const char *path, mt_chain **out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = wrap(load_chain(path));
  });
}

mt_status mt_model_build(const char *name, size_t n, mt_chain **out) {
  return guard([&] {
    require(name, "name");
    require(out, "out");
    *out = wrap(build_model(name, n));
  });
}

mt_status mt_model_default_target(const char *name, size_t n, size_t **states, size_t *count) {
  return guard([&] {
    require(name, "name");
    require(states, "states");
    require(count, "count");
    const StateSet G = default_target(name, n);
    *states = dup_array(G);
    *count = G.size();
  });
}

void mt_chain_free(mt_chain *chain) { delete chain; }

size_t mt_chain_state_count(const mt_chain *chain) { return chain ? chain->chain.state_count() : 0; }

int mt_chain_is_continuous(const mt_chain *chain) { return chain && chain->chain.is_continuous() ? 1 : 0; }

const char *mt_chain_label(const mt_chain *chain, size_t i) {
  if (chain == nullptr || i >= chain->labels.size()) return nullptr;
  return chain->labels[i].c_str();
}

mt_status mt_chain_to_json(const mt_chain *chain, char **json) {
  return guard([&] {
    require(json, "json");
    *json = dup_string(chain_to_json(chain_of(chain)));
  });
}

mt_status mt_geometric_grid(double start, double stop, int per_decade, double **times, size_t *count) {
  return guard([&] {
    require(times, "times");
    require(count, "count");
    const auto g = geometric_grid(start, stop, per_decade);
    *times = dup_array(g);
    *count = g.size();
  });
}

mt_status mt_stationary(const mt_chain *chain, double *pi) {
  return guard([&] { copy_out(stationary_measure(chain_of(chain)).weights(), pi); });
}

mt_status mt_evolve(const mt_chain *chain, const double *start, double t, double *out) {
  return guard([&] {
    const FiniteChain &c = chain_of(chain);
    copy_out(evolve(c, ProbabilityVector(vector_of(c, start)), t).weights(), out);
  });
}

mt_status mt_qsd(const mt_chain *chain, const size_t *G, size_t g_count, double *measure, double *T_star,
                 double *decay_rate) {
  return guard([&] {
    const FiniteChain &c = chain_of(chain);
    const auto part = TrapPartition::from_target(c.state_count(), target_set(c, G, g_count));
    const auto qs = quasi_stationary(c, part);
    if (measure) copy_out(qs.measure.weights(), measure);
    if (T_star) *T_star = qs.mean_exit_time;
    if (decay_rate) *decay_rate = qs.decay_rate;
  });
}

mt_status mt_empirical(const mt_chain *chain, size_t x, const size_t *G, size_t g_count, double *measure) {
  return guard([&] {
    const FiniteChain &c = chain_of(chain);
    const auto part = TrapPartition::from_target(c.state_count(), target_set(c, G, g_count));
    copy_out(empirical_measure(c, x, part).weights(), measure);
  });
}

mt_status mt_mean_hitting_time(const mt_chain *chain, size_t x, const size_t *G, size_t g_count, double *mean) {
  return guard([&] {
    const FiniteChain &c = chain_of(chain);
    require(mean, "mean");
    *mean = mean_hitting_time(c, x, target_set(c, G, g_count));
  });
}

mt_status mt_measure_csv(const mt_chain *chain, const double *weights, char **csv) {
  return guard([&] {
    const FiniteChain &c = chain_of(chain);
    require(csv, "csv");
    *csv = dup_string(measure_csv(c, ProbabilityVector(vector_of(c, weights))));
  });
}

mt_status mt_d_profile_csv(const mt_chain *chain, const double *times, size_t count, char **csv) {
  return guard([&] {
    const FiniteChain &c = chain_of(chain);
    require(times, "times");
    require(csv, "csv");
    const ProbabilityVector pi = stationary_measure(c);
    std::vector<double> t(times, times + count);
    std::vector<DistanceProfile> profile;
    for (double s : t) profile.push_back(d_profile(c, pi, s));
    *csv = dup_string(distance_profile_csv(t, profile));
  });
}

mt_status mt_survival_csv(const mt_chain *chain, const double *start, const size_t *G, size_t g_count,
                          const double *times, size_t count, double T_ref, char **csv) {
  return guard([&] {
    const FiniteChain &c = chain_of(chain);
    require(times, "times");
    require(csv, "csv");
    if (!(T_ref > 0.0)) throw Error(ErrorCode::InvalidArgument, "reference time scale must be positive");
    const auto curve = survival_function(c, ProbabilityVector(vector_of(c, start)), target_set(c, G, g_count),
                                         std::vector<double>(times, times + count));
    *csv = dup_string(survival_csv(curve, T_ref));
  });
}

mt_status mt_certify_json(const mt_chain *chain, const size_t *G, size_t g_count, double R, double alpha,
                          char **json) {
  return guard([&] {
    const FiniteChain &c = chain_of(chain);
    require(json, "json");
    auto part = TrapPartition::from_target(c.state_count(), target_set(c, G, g_count), alpha);
    const HpGCertificate cert = measure_hypotheses(c, part, HpGParameters{R, alpha, {}});
    *json = dup_string(certificate_json(cert));
    if (!cert.applicable) throw NotApplicableError(cert);
  });
}

mt_status mt_report(const mt_chain *chain, const size_t *G, size_t g_count, double R, double alpha,
                    const double *times, size_t count, double C, char **csv, char **summary_json) {
  return guard([&] {
    const FiniteChain &c = chain_of(chain);
    require(csv, "csv");
    auto part = TrapPartition::from_target(c.state_count(), target_set(c, G, g_count), alpha);
    const HpGCertificate cert = measure_hypotheses(c, part, HpGParameters{R, alpha, {}});
    std::vector<double> grid;
    if (count > 0) {
      require(times, "times");
      grid.assign(times, times + count);
    }
    const ExponentialityReport rep = exponentiality_report(c, part, cert, grid, C);
    *csv = dup_string(report_csv(rep));
    if (summary_json) {
      std::ostringstream os;
      os << "{\n  \"T_star\": " << format_double(rep.T_star) << ",\n  \"applicable\": "
         << (cert.applicable ? "true" : "false") << ",\n  \"epsilon2\": "
         << (cert.applicable ? format_double(cert.epsilon2) : "null") << ",\n  \"r\": " << format_double(cert.r)
         << ",\n  \"sup_weighted_deviation\": " << format_double(rep.sup_weighted_deviation)
         << ",\n  \"epsilon_measured\": " << format_double(rep.epsilon_measured) << ",\n  \"C\": "
         << format_double(rep.C) << ",\n  \"epsilon_reference\": "
         << (cert.applicable ? format_double(rep.epsilon_reference) : "null") << ",\n  \"within_reference\": "
         << (rep.within_reference ? "true" : "false") << ",\n  \"ratio_pi_A\": " << format_double(rep.ratio_pi_A)
         << ",\n  \"max_ratio_deviation\": " << format_double(rep.max_ratio_deviation)
         << ",\n  \"delta\": " << format_double(rep.delta) << ",\n  \"R_over_T_star\": "
         << format_double(rep.R_over_T_star) << "\n}\n";
      *summary_json = dup_string(os.str());
    }
  });
}

mt_status mt_simulate_csv(const mt_chain *chain, const double *start, const size_t *G, size_t g_count,
                          uint64_t seed, size_t n_trajectories, double max_time, unsigned threads, char **csv) {
  return guard([&] {
    const FiniteChain &c = chain_of(chain);
    require(csv, "csv");
    const auto samples = sample_hitting_times(c, ProbabilityVector(vector_of(c, start)), target_set(c, G, g_count),
                                              SamplerConfig{seed, n_trajectories, max_time, threads});
    *csv = dup_string(samples_csv(samples));
  });
}

mt_status mt_occupation_csv(const mt_chain *chain, size_t x, const size_t *G, size_t g_count, uint64_t seed,
                            size_t n_trajectories, double max_time, unsigned threads, char **csv) {
  return guard([&] {
    const FiniteChain &c = chain_of(chain);
    require(csv, "csv");
    const auto est = occupation_frequencies(c, x, target_set(c, G, g_count),
                                            SamplerConfig{seed, n_trajectories, max_time, threads});
    std::string out = "state_label,frequency,standard_error\n";
    for (std::size_t i = 0; i < c.state_count(); ++i)
      out += chain->labels[i] + "," + format_double(est.frequencies[static_cast<Eigen::Index>(i)]) + "," +
             format_double(est.standard_errors[static_cast<Eigen::Index>(i)]) + "\n";
    *csv = dup_string(out);
  });
}

mt_status mt_lump_check_json(size_t n, char **json) {
  return guard([&] {
    require(json, "json");
    const LumpingResult res = project_and_verify_lumping(build_tiar_full(n), n);
    std::ostringstream os;
    os << "{\n  \"n\": " << n << ",\n  \"lumps\": " << (res.lumps ? "true" : "false")
       << ",\n  \"max_discrepancy\": " << format_double(res.max_discrepancy) << ",\n  \"rows_checked\": "
       << res.rows_checked << "\n}\n";
    *json = dup_string(os.str());
  });
}

}  // extern "C"
