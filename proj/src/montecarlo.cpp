#include "metatrap/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

namespace metatrap {

namespace {

constexpr std::size_t kChunk = 1024;

std::mt19937_64 trajectory_rng(std::uint64_t seed, std::size_t index) {
  const auto i = static_cast<std::uint64_t>(index);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32U),
                    static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32U)};
  return std::mt19937_64(seq);
}

// Uniform in [0, 1) from the top 53 bits; fixed across standard libraries.
double uniform(std::mt19937_64 &rng) { return static_cast<double>(rng() >> 11U) * 0x1.0p-53; }

struct JumpTable {
  std::vector<std::vector<std::size_t>> targets;
  std::vector<std::vector<double>> cumulative;
  std::vector<double> exit_rate;  // continuous only
  std::vector<std::uint8_t> in_G;
};

JumpTable jump_table(const FiniteChain &chain, const StateSet &G) {
  const std::size_t n = chain.state_count();
  JumpTable t;
  t.targets.resize(n);
  t.cumulative.resize(n);
  t.exit_rate.assign(n, 0.0);
  t.in_G.assign(n, 0);
  for (auto g : G) t.in_G[g] = 1;
  const auto &m = chain.matrix();
  for (std::size_t x = 0; x < n; ++x) {
    double total = 0.0;
    for (SparseMatrix::InnerIterator it(m, static_cast<Eigen::Index>(x)); it; ++it) {
      const auto y = static_cast<std::size_t>(it.col());
      if (chain.is_continuous() && y == x) continue;
      if (it.value() <= 0.0) continue;
      total += it.value();
      t.targets[x].push_back(y);
      t.cumulative[x].push_back(total);
    }
    if (total > 0.0)
      for (auto &c : t.cumulative[x]) c /= total;
    t.exit_rate[x] = total;
  }
  return t;
}

std::size_t draw(const std::vector<std::size_t> &targets, const std::vector<double> &cumulative, double u) {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), targets.size() - 1);
  return targets[k];
}

struct Trajectory {
  double time = 0.0;
  bool censored = false;
};

// Runs one trajectory; `occupy(state, duration)` sees each pre-absorption sojourn.
template <class Occupy>
Trajectory run(const FiniteChain &chain, const JumpTable &table, std::size_t x, double max_time,
               std::mt19937_64 &rng, Occupy &&occupy) {
  Trajectory tr;
  while (!table.in_G[x]) {
    if (table.targets[x].empty()) {
      occupy(x, max_time - tr.time);
      tr.time = max_time;
      tr.censored = true;
      return tr;
    }
    double hold = 1.0;
    if (chain.is_continuous()) hold = -std::log1p(-uniform(rng)) / table.exit_rate[x];
    if (tr.time + hold > max_time) {
      occupy(x, max_time - tr.time);
      tr.time = max_time;
      tr.censored = true;
      return tr;
    }
    occupy(x, hold);
    tr.time += hold;
    x = draw(table.targets[x], table.cumulative[x], uniform(rng));
  }
  return tr;
}

double resolve_max_time(const FiniteChain &chain, const SamplerConfig &cfg) {
  if (cfg.max_time > 0.0) return cfg.max_time;
  return 1e6 / chain.uniformization_rate();
}

void validate_config(const SamplerConfig &cfg) {
  if (cfg.n_trajectories == 0) throw Error(ErrorCode::InvalidArgument, "n_trajectories must be positive");
  if (std::isnan(cfg.max_time)) throw Error(ErrorCode::InvalidArgument, "max_time is NaN");
}

// Applies `work(chunk_index)` to every chunk on a fixed set of threads.
template <class Work>
void for_each_chunk(std::size_t chunks, unsigned threads, Work &&work) {
  unsigned count = threads == 0 ? std::max(1U, std::thread::hardware_concurrency()) : threads;
  count = static_cast<unsigned>(std::min<std::size_t>(count, chunks));
  if (count <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) work(c);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < count; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t c = w; c < chunks; c += count) work(c);
    });
  for (auto &t : pool) t.join();
}

}  // namespace

double EmpiricalSurvival::survival_at(double t) const {
  if (n_trajectories == 0) throw Error(ErrorCode::EmptySample, "no trajectories");
  const auto hit = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
  return static_cast<double>(n_trajectories - hit) / static_cast<double>(n_trajectories);
}

double EmpiricalSurvival::mean() const {
  if (times.empty()) throw Error(ErrorCode::EmptySample, "no uncensored hitting times");
  double s = 0.0;
  for (double t : times) s += t;
  return s / static_cast<double>(times.size());
}

double EmpiricalSurvival::standard_error() const {
  if (times.size() < 2) throw Error(ErrorCode::EmptySample, "need two uncensored hitting times");
  const double m = mean();
  double ss = 0.0;
  for (double t : times) ss += (t - m) * (t - m);
  return std::sqrt(ss / static_cast<double>(times.size() - 1) / static_cast<double>(times.size()));
}

EmpiricalSurvival sample_hitting_times(const FiniteChain &chain, const ProbabilityVector &start, const StateSet &G,
                                       const SamplerConfig &cfg) {
  validate_config(cfg);
  const StateSet target = make_state_set(G);
  if (start.size() != chain.state_count()) throw Error(ErrorCode::DimensionMismatch, "start has the wrong length");
  if (!start.supported_on(complement(chain.state_count(), target)))
    throw Error(ErrorCode::InvalidArgument, "start must be supported off G");
  const JumpTable table = jump_table(chain, target);
  std::vector<std::size_t> start_states;
  std::vector<double> start_cumulative;
  double acc = 0.0;
  for (std::size_t x = 0; x < start.size(); ++x)
    if (start[x] > 0.0) {
      acc += start[x];
      start_states.push_back(x);
      start_cumulative.push_back(acc);
    }
  for (auto &c : start_cumulative) c /= acc;
  const double max_time = resolve_max_time(chain, cfg);

  EmpiricalSurvival out;
  out.n_trajectories = cfg.n_trajectories;
  out.max_time = max_time;
  out.per_trajectory.assign(cfg.n_trajectories, 0.0);
  out.censored_flags.assign(cfg.n_trajectories, 0);
  const std::size_t chunks = (cfg.n_trajectories + kChunk - 1) / kChunk;
  for_each_chunk(chunks, cfg.threads, [&](std::size_t c) {
    const std::size_t end = std::min(cfg.n_trajectories, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      auto rng = trajectory_rng(cfg.seed, i);
      const std::size_t x = draw(start_states, start_cumulative, uniform(rng));
      const Trajectory tr = run(chain, table, x, max_time, rng, [](std::size_t, double) {});
      out.per_trajectory[i] = tr.time;
      out.censored_flags[i] = tr.censored ? 1 : 0;
    }
  });
  for (std::size_t i = 0; i < cfg.n_trajectories; ++i) {
    if (out.censored_flags[i])
      ++out.censored;
    else
      out.times.push_back(out.per_trajectory[i]);
  }
  std::sort(out.times.begin(), out.times.end());
  if (out.times.empty()) throw Error(ErrorCode::AllCensored, "every trajectory reached max_time before G");
  return out;
}

OccupationEstimate occupation_frequencies(const FiniteChain &chain, std::size_t x, const StateSet &G,
                                          const SamplerConfig &cfg) {
  validate_config(cfg);
  const StateSet target = make_state_set(G);
  if (x >= chain.state_count() || contains(target, x))
    throw Error(ErrorCode::InvalidArgument, "start must be a state outside G");
  const JumpTable table = jump_table(chain, target);
  const double max_time = resolve_max_time(chain, cfg);
  const auto n = static_cast<Eigen::Index>(chain.state_count());

  // Per-chunk sums of Y (time in y), Y^2, X Y and of X, X^2 (total time).
  struct Sums {
    Vector y, yy, xy;
    double x = 0.0, xx = 0.0;
    std::size_t used = 0;
  };
  const std::size_t chunks = (cfg.n_trajectories + kChunk - 1) / kChunk;
  std::vector<Sums> parts(chunks);
  for_each_chunk(chunks, cfg.threads, [&](std::size_t c) {
    Sums s{Vector::Zero(n), Vector::Zero(n), Vector::Zero(n)};
    Vector local = Vector::Zero(n);
    std::vector<std::size_t> touched;
    const std::size_t end = std::min(cfg.n_trajectories, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      auto rng = trajectory_rng(cfg.seed, i);
      touched.clear();
      const Trajectory tr = run(chain, table, x, max_time, rng, [&](std::size_t state, double dt) {
        if (local[static_cast<Eigen::Index>(state)] == 0.0) touched.push_back(state);
        local[static_cast<Eigen::Index>(state)] += dt;
      });
      if (!tr.censored) {
        ++s.used;
        s.x += tr.time;
        s.xx += tr.time * tr.time;
        for (auto st : touched) {
          const auto k = static_cast<Eigen::Index>(st);
          s.y[k] += local[k];
          s.yy[k] += local[k] * local[k];
          s.xy[k] += local[k] * tr.time;
        }
      }
      for (auto st : touched) local[static_cast<Eigen::Index>(st)] = 0.0;
    }
    parts[c] = std::move(s);
  });
  Sums total{Vector::Zero(n), Vector::Zero(n), Vector::Zero(n)};
  for (const auto &p : parts) {
    total.y += p.y;
    total.yy += p.yy;
    total.xy += p.xy;
    total.x += p.x;
    total.xx += p.xx;
    total.used += p.used;
  }
  if (total.used == 0) throw Error(ErrorCode::AllCensored, "every trajectory reached max_time before G");
  OccupationEstimate est;
  est.used = total.used;
  const double N = static_cast<double>(total.used);
  const double mean_x = total.x / N;
  est.frequencies = total.y / total.x;
  est.standard_errors = Vector::Zero(n);
  if (total.used > 1) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const double r = est.frequencies[k];
      const double second = (total.yy[k] - 2.0 * r * total.xy[k] + r * r * total.xx) / N;
      const double var = std::max(0.0, second) * N / (N - 1.0);
      est.standard_errors[k] = std::sqrt(var / N) / mean_x;
    }
  }
  return est;
}

double ks_statistic(const EmpiricalSurvival &emp, double mean) {
  if (emp.times.empty() || emp.n_trajectories == 0) throw Error(ErrorCode::EmptySample, "no uncensored hitting times");
  if (!(mean > 0.0)) throw Error(ErrorCode::InvalidArgument, "mean must be positive");
  const double N = static_cast<double>(emp.n_trajectories);
  double sup = 0.0;
  for (std::size_t i = 0; i < emp.times.size(); ++i) {
    const double F = -std::expm1(-emp.times[i] / mean);
    sup = std::max({sup, std::abs(static_cast<double>(i + 1) / N - F), std::abs(static_cast<double>(i) / N - F)});
  }
  return sup;
}

}  // namespace metatrap
