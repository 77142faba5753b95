#include "metatrap/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "metatrap/hitting.hpp"

namespace metatrap {

namespace {

std::vector<std::string> index_labels(std::size_t n) {
  std::vector<std::string> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = std::to_string(i);
  return labels;
}

void require_bd_size(std::size_t n) {
  if (n < 4 || n % 2 != 0) throw Error(ErrorCode::InvalidArgument, "birth-death size n must be even and >= 4");
}

double factorial(std::size_t k) {
  double f = 1.0;
  for (std::size_t i = 2; i <= k; ++i) f *= static_cast<double>(i);
  return f;
}

std::string permutation_label(const std::vector<int> &p) {
  std::string s;
  for (int v : p) s += std::to_string(v);
  return s;
}

std::vector<int> parse_permutation(const std::string &label, std::size_t n) {
  std::vector<int> p;
  for (char ch : label) {
    if (ch < '1' || ch > '9') throw Error(ErrorCode::InvalidArgument, "state label '" + label + "' is not a permutation");
    p.push_back(ch - '0');
  }
  std::vector<int> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expected(n);
  std::iota(expected.begin(), expected.end(), 1);
  if (sorted != expected) throw Error(ErrorCode::InvalidArgument, "state label '" + label + "' is not a permutation");
  return p;
}

double spread(const std::vector<double> &v) {
  if (v.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi / *lo;
}

}  // namespace

Vector birth_death_weights(std::size_t n) {
  require_bd_size(n);
  Vector w(static_cast<Eigen::Index>(n + 1));
  for (std::size_t x = 0; x <= n; ++x) {
    const double a = static_cast<double>(std::max<std::size_t>(x, 1));
    const double b = static_cast<double>(std::max<std::size_t>(n - x, 1));
    w[static_cast<Eigen::Index>(x)] = 1.0 / (std::pow(a, 1.5) * std::pow(b, 1.5));
  }
  return w;
}

double birth_death_normalization(std::size_t n) { return birth_death_weights(n).sum(); }

namespace {

std::vector<Triplet> birth_death_entries(const Vector &w, std::size_t last) {
  std::vector<Triplet> t;
  for (std::size_t x = 0; x <= last; ++x) {
    const auto i = static_cast<Eigen::Index>(x);
    if (x < last) t.emplace_back(static_cast<int>(x), static_cast<int>(x + 1), std::min(1.0, w[i + 1] / w[i]));
    if (x > 0) t.emplace_back(static_cast<int>(x), static_cast<int>(x - 1), std::min(1.0, w[i - 1] / w[i]));
  }
  return t;
}

}  // namespace

FiniteChain build_birth_death(std::size_t n) {
  const Vector w = birth_death_weights(n);
  return FiniteChain::from_entries(TimeKind::Continuous, n + 1, birth_death_entries(w, n), index_labels(n + 1));
}

FiniteChain build_birth_death_reflected(std::size_t n, std::size_t m) {
  if (m < 1 || m > n) throw Error(ErrorCode::InvalidArgument, "reflection point must lie in 1..n");
  const Vector w = birth_death_weights(n);
  return FiniteChain::from_entries(TimeKind::Continuous, m + 1, birth_death_entries(w, m), index_labels(m + 1));
}

std::vector<long long> tiar_projection_row(std::size_t n, std::size_t i) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "TIAR needs n >= 2");
  if (i >= n) throw Error(ErrorCode::InvalidArgument, "row index out of range");
  std::vector<long long> row(n, 0);
  if (i == 0) {
    std::fill(row.begin(), row.end(), 1);
    return row;
  }
  row[i - 1] = 1;
  row[i] = static_cast<long long>(i);
  for (std::size_t j = i + 1; j < n; ++j) row[j] = 1;
  return row;
}

FiniteChain build_tiar_projection(std::size_t n, TimeKind kind) {
  std::vector<Triplet> t;
  const double denom = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = tiar_projection_row(n, i);
    const long long total = std::accumulate(row.begin(), row.end(), 0LL);
    if (total != static_cast<long long>(n)) throw Error(ErrorCode::InternalBoundViolation, "projected row does not sum to n");
    for (std::size_t j = 0; j < n; ++j) {
      if (row[j] == 0) continue;
      if (kind == TimeKind::Continuous && i == j) continue;
      t.emplace_back(static_cast<int>(i), static_cast<int>(j), static_cast<double>(row[j]) / denom);
    }
  }
  return FiniteChain::from_entries(kind, n, t, index_labels(n));
}

Vector tiar_projection_stationary(std::size_t n) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "TIAR needs n >= 2");
  Vector mu(static_cast<Eigen::Index>(n));
  mu[0] = 1.0 / factorial(n);
  for (std::size_t k = 1; k < n; ++k)
    mu[static_cast<Eigen::Index>(k)] = static_cast<double>(n - k) / factorial(n - k + 1);
  return mu;
}

std::size_t last_descent(const std::vector<int> &p) {
  std::size_t s = 0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i)
    if (p[i] > p[i + 1]) s = i + 1;
  return s;
}

FiniteChain build_tiar_full(std::size_t n) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "TIAR needs n >= 2");
  if (n > 8) throw Error(ErrorCode::TooLarge, "full permutation chain limited to n <= 8");
  std::vector<std::vector<int>> perms;
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 1);
  do perms.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));

  // Lexicographic rank via the Lehmer code.
  auto rank = [n](const std::vector<int> &q) {
    std::size_t r = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t smaller = 0;
      for (std::size_t j = i + 1; j < n; ++j)
        if (q[j] < q[i]) ++smaller;
      r = r * (n - i) + smaller;
    }
    return r;
  };
  std::vector<Triplet> t;
  std::vector<std::string> labels;
  t.reserve(perms.size() * n);
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t s = 0; s < perms.size(); ++s) {
    const auto &x = perms[s];
    labels.push_back(permutation_label(x));
    for (std::size_t k = 1; k <= n; ++k) {
      // Top card moves to position k.
      std::vector<int> y(x.begin() + 1, x.begin() + static_cast<std::ptrdiff_t>(k));
      y.push_back(x[0]);
      y.insert(y.end(), x.begin() + static_cast<std::ptrdiff_t>(k), x.end());
      t.emplace_back(static_cast<int>(s), static_cast<int>(rank(y)), w);
    }
  }
  return FiniteChain::from_entries(TimeKind::Discrete, perms.size(), t, std::move(labels));
}

LumpingResult project_and_verify_lumping(const FiniteChain &full, std::size_t n) {
  if (full.is_continuous()) throw Error(ErrorCode::InvalidArgument, "lumping check expects the discrete shuffle");
  if (static_cast<double>(full.state_count()) != factorial(n) || full.labels().size() != full.state_count())
    throw Error(ErrorCode::DimensionMismatch, "chain is not the full shuffle on n cards");
  LumpingResult res;
  std::vector<std::size_t> sigma(full.state_count());
  for (std::size_t s = 0; s < full.state_count(); ++s) sigma[s] = last_descent(parse_permutation(full.labels()[s], n));
  const auto &m = full.matrix();
  const double scale = static_cast<double>(n);
  for (std::size_t s = 0; s < full.state_count(); ++s) {
    std::vector<long long> pushed(n, 0);
    for (SparseMatrix::InnerIterator it(m, static_cast<Eigen::Index>(s)); it; ++it) {
      const double scaled = it.value() * scale;
      const double nearest = std::round(scaled);
      if (std::abs(scaled - nearest) > 1e-9)
        throw Error(ErrorCode::LumpingViolation, "entry of row " + full.labels()[s] + " is not a multiple of 1/n");
      pushed[sigma[static_cast<std::size_t>(it.col())]] += static_cast<long long>(nearest);
    }
    const auto expected = tiar_projection_row(n, sigma[s]);
    for (std::size_t j = 0; j < n; ++j) {
      const double gap = std::abs(static_cast<double>(pushed[j] - expected[j])) / scale;
      res.max_discrepancy = std::max(res.max_discrepancy, gap);
    }
    ++res.rows_checked;
    if (pushed != expected) {
      std::ostringstream os;
      os << "row of permutation " << full.labels()[s] << " (sigma = " << sigma[s]
         << ") does not project onto the lumped kernel";
      throw Error(ErrorCode::LumpingViolation, os.str());
    }
  }
  res.lumps = true;
  return res;
}

std::vector<Xik0Row> xik0_bound_check(std::size_t n, bool throw_on_violation) {
  if (n < 2 || n > 12) throw Error(ErrorCode::InvalidArgument, "xik0 check covers 2 <= n <= 12");
  const FiniteChain chain = build_tiar_projection(n);
  const double nd = static_cast<double>(n);
  std::vector<Xik0Row> rows;
  double previous_E = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    Xik0Row row{};
    row.k = k;
    row.probability = return_vs_hit_probability(chain, k, StateSet{0});
    row.bound = (nd - 1.0) * factorial(n - k - 1) / factorial(n);
    row.E = 1.0 / row.probability;
    row.recursion_rhs = k >= 2 ? nd + static_cast<double>(n - k) * previous_E : nd;
    double sum = 0.0;
    for (std::size_t j = 1; j <= k; ++j) sum += factorial(n - j - 1);
    row.closed_form_rhs = nd * sum / factorial(n - k - 1);
    const double slack = 1e-12;
    row.ok = row.probability <= row.bound * (1.0 + slack) && row.E >= row.recursion_rhs * (1.0 - slack) &&
             row.E >= row.closed_form_rhs * (1.0 - slack);
    if (!row.ok && throw_on_violation) {
      std::ostringstream os;
      os << "n = " << n << ", k = " << k << ": P = " << row.probability << " (bound " << row.bound << "), E = " << row.E
         << " (recursion " << row.recursion_rhs << ", closed form " << row.closed_form_rhs << ")";
      throw Error(ErrorCode::BoundViolation, os.str());
    }
    previous_E = row.E;
    rows.push_back(row);
  }
  return rows;
}

BirthDeathAsymptotics birth_death_asymptotics_check(const std::vector<std::size_t> &n_list, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0,1)");
  BirthDeathAsymptotics out;
  std::vector<double> up, full, reflected, crossing;
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    const std::size_t n = n_list[i];
    require_bd_size(n);
    if (n > 2000) throw Error(ErrorCode::TooLarge, "birth-death asymptotics limited to n <= 2000");
    if (i > 0 && n <= n_list[i - 1]) throw Error(ErrorCode::InvalidArgument, "n list must increase");
    const FiniteChain chain = build_birth_death(n);
    const double nd = static_cast<double>(n);
    BirthDeathAsymptoticsRow row{};
    row.n = n;
    row.up_target = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::pow(nd, alpha) + 1e-9)));
    row.up_time = mean_hitting_time(chain, 0, StateSet{row.up_target});
    row.up_ratio = row.up_time / std::pow(nd, 2.5 * alpha);
    row.down_time_full = mean_hitting_time(chain, n / 2, StateSet{0});
    row.down_ratio_full = row.down_time_full / (nd * nd);
    row.down_time_reflected = mean_hitting_time(build_birth_death_reflected(n, n / 2), n / 2, StateSet{0});
    row.down_ratio_reflected = row.down_time_reflected / (nd * nd);
    row.x = std::max<std::size_t>(1, n / 10);
    row.crossing_probability = hitting_probability_before(chain, row.x, StateSet{n / 2}, StateSet{0});
    row.crossing_ratio = row.crossing_probability / std::pow(2.0 * static_cast<double>(row.x) / nd, 2.5);
    up.push_back(row.up_ratio);
    full.push_back(row.down_ratio_full);
    reflected.push_back(row.down_ratio_reflected);
    crossing.push_back(row.crossing_ratio);
    out.rows.push_back(row);
  }
  out.up_spread = spread(up);
  out.down_full_spread = spread(full);
  out.down_reflected_spread = spread(reflected);
  out.crossing_spread = spread(crossing);
  return out;
}

FiniteChain build_model(const std::string &name, std::size_t n) {
  if (name == "bd") return build_birth_death(n);
  if (name == "tiar-proj") return build_tiar_projection(n);
  if (name == "tiar-full") return build_tiar_full(n);
  throw Error(ErrorCode::InvalidArgument, "unknown model '" + name + "' (expected bd, tiar-proj or tiar-full)");
}

StateSet default_target(const std::string &name, std::size_t n) {
  if (name == "bd") {
    require_bd_size(n);
    return range_set(n / 2, n + 1);
  }
  if (name == "tiar-proj") return StateSet{0};
  if (name == "tiar-full") return StateSet{0};  // identity is first in lexicographic order
  throw Error(ErrorCode::InvalidArgument, "unknown model '" + name + "'");
}

}  // namespace metatrap
