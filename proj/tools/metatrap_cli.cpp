#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "metatrap/metatrap.h"

namespace {

// Failure of a C API call, carrying its status.
struct ApiError : std::runtime_error {
  mt_status status;
  ApiError(mt_status s, const std::string &what) : std::runtime_error(what), status(s) {}
};

void check(mt_status s) {
  if (s != MT_OK) throw ApiError(s, mt_last_error());
}

struct CString {
  char *p = nullptr;
  ~CString() { mt_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

struct ChainHandle {
  mt_chain *p = nullptr;
  ~ChainHandle() { mt_chain_free(p); }
};

struct ChainOptions {
  std::string input;
  std::string model;
  std::size_t n = 0;
  std::string G;
};

struct Context {
  ChainHandle chain;
  std::vector<std::size_t> G;
  std::size_t size = 0;
  std::optional<double> T_star;

  double t_star() {
    if (!T_star) {
      double t = 0.0;
      check(mt_qsd(chain.p, G.data(), G.size(), nullptr, &t, nullptr));
      T_star = t;
    }
    return *T_star;
  }
};

std::vector<std::size_t> parse_states(const std::string &text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto dots = item.find("..");
    try {
      if (dots == std::string::npos) {
        out.push_back(std::stoul(item));
      } else {
        const auto lo = std::stoul(item.substr(0, dots));
        const auto hi = std::stoul(item.substr(dots + 2));
        if (hi < lo) throw std::invalid_argument("range");
        for (auto i = lo; i <= hi; ++i) out.push_back(i);
      }
    } catch (const std::exception &) {
      throw std::invalid_argument("--G: cannot read '" + item + "' (expected i, i..j, comma separated)");
    }
  }
  if (out.empty()) throw std::invalid_argument("--G: empty target set");
  return out;
}

void load(Context &ctx, const ChainOptions &opt, bool need_target) {
  if (!opt.input.empty() && !opt.model.empty()) throw std::invalid_argument("give either --input or --model, not both");
  if (!opt.input.empty()) {
    check(mt_chain_load(opt.input.c_str(), &ctx.chain.p));
  } else if (!opt.model.empty()) {
    if (opt.n == 0) throw std::invalid_argument("--model needs --n");
    check(mt_model_build(opt.model.c_str(), opt.n, &ctx.chain.p));
  } else {
    throw std::invalid_argument("no chain: give --input FILE or --model NAME --n N");
  }
  ctx.size = mt_chain_state_count(ctx.chain.p);
  if (!opt.G.empty()) {
    ctx.G = parse_states(opt.G);
  } else if (need_target) {
    if (opt.model.empty()) throw std::invalid_argument("--G is required with --input");
    std::size_t *states = nullptr;
    std::size_t count = 0;
    check(mt_model_default_target(opt.model.c_str(), opt.n, &states, &count));
    ctx.G.assign(states, states + count);
    mt_indices_free(states);
  }
}

void emit(const std::string &path, const std::string &content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << content;
}

// One grid endpoint: a number optionally followed by R or T*.
double grid_point(const std::string &token, std::optional<double> R, Context &ctx) {
  std::string number = token;
  double unit = 1.0;
  if (token.size() >= 2 && token.compare(token.size() - 2, 2, "T*") == 0) {
    number = token.substr(0, token.size() - 2);
    unit = ctx.t_star();
  } else if (!token.empty() && token.back() == 'R') {
    if (!R) throw std::invalid_argument("grid uses R but --R was not given");
    number = token.substr(0, token.size() - 1);
    unit = *R;
  }
  try {
    std::size_t used = 0;
    const double v = number.empty() ? 1.0 : std::stod(number, &used);
    if (!number.empty() && used != number.size()) throw std::invalid_argument("trailing");
    return v * unit;
  } catch (const std::exception &) {
    throw std::invalid_argument("--grid: cannot read '" + token + "'");
  }
}

std::vector<double> parse_grid(const std::string &spec, std::optional<double> R, Context &ctx) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 3) throw std::invalid_argument("--grid expects start:stop:points-per-decade");
  const double start = grid_point(parts[0], R, ctx);
  const double stop = grid_point(parts[1], R, ctx);
  int ppd = 0;
  try {
    ppd = std::stoi(parts[2]);
  } catch (const std::exception &) {
    throw std::invalid_argument("--grid: points per decade must be an integer");
  }
  if (stop <= start) return {start};
  double *times = nullptr;
  std::size_t count = 0;
  check(mt_geometric_grid(start, stop, ppd, &times, &count));
  std::vector<double> out(times, times + count);
  mt_doubles_free(times);
  return out;
}

std::string default_grid_spec(std::optional<double> R) { return R ? "2R:20T*:64" : "0.001T*:20T*:64"; }

// "pi_A", "qsd" or a state index.
std::vector<double> start_measure(const std::string &spec, Context &ctx) {
  std::vector<double> w(ctx.size, 0.0);
  if (spec == "qsd") {
    check(mt_qsd(ctx.chain.p, ctx.G.data(), ctx.G.size(), w.data(), nullptr, nullptr));
    return w;
  }
  if (spec == "pi_A") {
    check(mt_stationary(ctx.chain.p, w.data()));
    for (auto g : ctx.G)
      if (g < w.size()) w[g] = 0.0;
    double total = 0.0;
    for (double v : w) total += v;
    for (double &v : w) v /= total;
    return w;
  }
  std::size_t x = 0;
  try {
    std::size_t used = 0;
    x = std::stoul(spec, &used);
    if (used != spec.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception &) {
    throw std::invalid_argument("--start expects pi_A, qsd or a state index, got '" + spec + "'");
  }
  if (x >= ctx.size) throw std::invalid_argument("--start state " + spec + " out of range");
  w[x] = 1.0;
  return w;
}

std::string measure_json(const std::vector<double> &w) {
  std::string out = "[";
  for (std::size_t i = 0; i < w.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", w[i]);
    out += (i ? "," : "") + std::string(buf);
  }
  return out + "]";
}

void add_chain_options(CLI::App *cmd, ChainOptions &opt, bool with_target) {
  cmd->add_option("--input", opt.input, "chain-spec JSON file");
  cmd->add_option("--model", opt.model, "builder name: bd, tiar-proj, tiar-full");
  cmd->add_option("--n", opt.n, "model size");
  if (with_target) cmd->add_option("--G", opt.G, "target set, e.g. 0 or 50..100 or 0,3,7");
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Metastability analysis of finite Markov chains"};
  app.require_subcommand(1, 1);
  std::string out;
  ChainOptions chain_opt;

  // model
  auto *model = app.add_subcommand("model", "build a model chain and write its JSON");
  std::string model_name;
  std::size_t model_n = 0;
  model->add_option("name", model_name, "bd, tiar-proj or tiar-full")->required();
  model->add_option("--n", model_n, "model size")->required();
  model->add_option("--out", out, "output file (default stdout)");

  // analyze
  auto *analyze = app.add_subcommand("analyze", "stationary measure, mean hitting time, distance profile");
  bool stationary = false;
  std::optional<std::size_t> mean_from;
  std::string d_grid;
  std::string format = "csv";
  add_chain_options(analyze, chain_opt, true);
  analyze->add_flag("--stationary", stationary, "stationary measure");
  analyze->add_option("--mean-hitting", mean_from, "E[tau_G] from this state");
  analyze->add_option("--d-profile", d_grid, "distance profile on start:stop:points-per-decade");
  analyze->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  analyze->add_option("--out", out, "output file (default stdout)");

  // certify
  auto *certify = app.add_subcommand("certify", "measure f, d, r and the epsilon bounds");
  double R = 0.0;
  double alpha = 0.5;
  add_chain_options(certify, chain_opt, true);
  certify->add_option("--R", R, "reference time scale")->required();
  certify->add_option("--alpha", alpha, "basin exponent in (0,1)");
  certify->add_option("--out", out, "certificate JSON (default stdout)");

  // qsd
  auto *qsd = app.add_subcommand("qsd", "quasi-stationary measure of A = complement of G");
  add_chain_options(qsd, chain_opt, true);
  qsd->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  qsd->add_option("--out", out, "output file (default stdout)");

  // survival
  auto *survival = app.add_subcommand("survival", "survival curve of tau_G against exp(-t/T*)");
  std::string start = "pi_A";
  std::string grid;
  std::optional<double> R_opt;
  add_chain_options(survival, chain_opt, true);
  survival->add_option("--start", start, "pi_A, qsd or a state index");
  survival->add_option("--R", R_opt, "reference time scale for grid endpoints like 2R");
  survival->add_option("--grid", grid, "start:stop:points-per-decade (default 2R:20T*:64)");
  survival->add_option("--out", out, "CSV output (default stdout)");

  // empirical
  auto *empirical = app.add_subcommand("empirical", "expected occupation fractions before tau_G");
  std::size_t x = 0;
  add_chain_options(empirical, chain_opt, true);
  empirical->add_option("--x", x, "start state")->required();
  empirical->add_option("--out", out, "CSV output (default stdout)");

  // simulate
  auto *simulate = app.add_subcommand("simulate", "Monte Carlo hitting times");
  std::optional<std::uint64_t> seed;
  std::size_t N = 10000;
  std::optional<double> max_time;
  unsigned threads = 0;
  std::string occupation;
  add_chain_options(simulate, chain_opt, true);
  simulate->add_option("--seed", seed, "random seed (required)");
  simulate->add_option("--N", N, "number of trajectories");
  simulate->add_option("--start", start, "pi_A, qsd or a state index");
  simulate->add_option("--max-time", max_time, "censoring time (default 50 T*)");
  simulate->add_option("--threads", threads, "worker threads (0 = all cores)");
  simulate->add_option("--occupation", occupation, "also write occupation frequencies (state start only)");
  simulate->add_option("--out", out, "samples CSV (default stdout)");

  // lump-check
  auto *lump = app.add_subcommand("lump-check", "exact lumping of the full shuffle onto its projection");
  std::size_t lump_n = 0;
  lump->add_option("--n", lump_n, "number of cards (2..8)")->required();
  lump->add_option("--out", out, "JSON output (default stdout)");

  // report
  auto *report = app.add_subcommand("report", "exponential-law deviations for pi_A, B_alpha and the rest of A");
  double C = 10.0;
  std::string summary;
  add_chain_options(report, chain_opt, true);
  report->add_option("--R", R, "reference time scale")->required();
  report->add_option("--alpha", alpha, "basin exponent in (0,1)");
  report->add_option("--grid", grid, "start:stop:points-per-decade (default 2R:20T*:64)");
  report->add_option("--C", C, "constant in the C (r + epsilon2) reference");
  report->add_option("--summary", summary, "JSON summary file");
  report->add_option("--out", out, "CSV output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    Context ctx;
    if (*model) {
      check(mt_model_build(model_name.c_str(), model_n, &ctx.chain.p));
      CString json;
      check(mt_chain_to_json(ctx.chain.p, &json.p));
      emit(out, json.str());
    } else if (*analyze) {
      load(ctx, chain_opt, mean_from.has_value());
      std::string text;
      if (stationary) {
        std::vector<double> pi(ctx.size);
        check(mt_stationary(ctx.chain.p, pi.data()));
        if (format == "json") {
          text += "{\"stationary\": " + measure_json(pi) + "}\n";
        } else {
          CString csv;
          check(mt_measure_csv(ctx.chain.p, pi.data(), &csv.p));
          text += csv.str();
        }
      }
      if (mean_from) {
        double m = 0.0;
        check(mt_mean_hitting_time(ctx.chain.p, *mean_from, ctx.G.data(), ctx.G.size(), &m));
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", m);
        text += format == "json" ? "{\"mean_hitting_time\": " + std::string(buf) + "}\n"
                                 : "mean_hitting_time," + std::string(buf) + "\n";
      }
      if (!d_grid.empty()) {
        const auto times = parse_grid(d_grid, std::nullopt, ctx);
        CString csv;
        check(mt_d_profile_csv(ctx.chain.p, times.data(), times.size(), &csv.p));
        text += csv.str();
      }
      if (text.empty()) throw std::invalid_argument("analyze: choose --stationary, --mean-hitting or --d-profile");
      emit(out, text);
    } else if (*certify) {
      load(ctx, chain_opt, true);
      CString json;
      const mt_status s = mt_certify_json(ctx.chain.p, ctx.G.data(), ctx.G.size(), R, alpha, &json.p);
      if (s == MT_NOT_APPLICABLE) {
        emit(out, json.str());
        std::cerr << "not applicable: " << mt_last_error() << "\n";
        return 2;
      }
      check(s);
      emit(out, json.str());
    } else if (*qsd) {
      load(ctx, chain_opt, true);
      std::vector<double> mu(ctx.size);
      double T = 0.0;
      double theta = 0.0;
      check(mt_qsd(ctx.chain.p, ctx.G.data(), ctx.G.size(), mu.data(), &T, &theta));
      if (format == "json") {
        char buf[128];
        std::snprintf(buf, sizeof buf, "{\"T_star\": %.17g, \"decay_rate\": %.17g, \"measure\": ", T, theta);
        emit(out, std::string(buf) + measure_json(mu) + "}\n");
      } else {
        CString csv;
        check(mt_measure_csv(ctx.chain.p, mu.data(), &csv.p));
        emit(out, csv.str());
        std::cerr << "T_star " << T << "\n";
      }
    } else if (*survival) {
      load(ctx, chain_opt, true);
      const auto w = start_measure(start, ctx);
      const auto times = parse_grid(grid.empty() ? default_grid_spec(R_opt) : grid, R_opt, ctx);
      CString csv;
      check(mt_survival_csv(ctx.chain.p, w.data(), ctx.G.data(), ctx.G.size(), times.data(), times.size(),
                            ctx.t_star(), &csv.p));
      emit(out, csv.str());
    } else if (*empirical) {
      load(ctx, chain_opt, true);
      std::vector<double> mu(ctx.size);
      check(mt_empirical(ctx.chain.p, x, ctx.G.data(), ctx.G.size(), mu.data()));
      CString csv;
      check(mt_measure_csv(ctx.chain.p, mu.data(), &csv.p));
      emit(out, csv.str());
    } else if (*simulate) {
      if (!seed) throw std::invalid_argument("simulate requires --seed");
      load(ctx, chain_opt, true);
      const auto w = start_measure(start, ctx);
      const double cutoff = max_time ? *max_time : 50.0 * ctx.t_star();
      CString csv;
      check(mt_simulate_csv(ctx.chain.p, w.data(), ctx.G.data(), ctx.G.size(), *seed, N, cutoff, threads, &csv.p));
      emit(out, csv.str());
      if (!occupation.empty()) {
        std::size_t from = 0;
        try {
          from = std::stoul(start);
        } catch (const std::exception &) {
          throw std::invalid_argument("--occupation needs --start to be a state index");
        }
        CString occ;
        check(mt_occupation_csv(ctx.chain.p, from, ctx.G.data(), ctx.G.size(), *seed, N, cutoff, threads, &occ.p));
        emit(occupation, occ.str());
      }
    } else if (*lump) {
      CString json;
      check(mt_lump_check_json(lump_n, &json.p));
      emit(out, json.str());
    } else if (*report) {
      load(ctx, chain_opt, true);
      std::vector<double> times;
      if (!grid.empty()) times = parse_grid(grid, R, ctx);
      CString csv, js;
      check(mt_report(ctx.chain.p, ctx.G.data(), ctx.G.size(), R, alpha, times.data(), times.size(), C, &csv.p,
                      &js.p));
      emit(out, csv.str());
      if (!summary.empty()) emit(summary, js.str());
    }
  } catch (const ApiError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
