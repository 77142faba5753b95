#include "metatrap/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace metatrap {

using nlohmann::json;

namespace {

std::string line_column(const std::string &text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return std::to_string(line) + ":" + std::to_string(column);
}

[[noreturn]] void field_error(const std::string &path, const std::string &what) {
  throw Error(ErrorCode::ParseError, path + ": " + what);
}

std::size_t index_field(const json &v, const std::string &path, std::size_t n) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) field_error(path, "expected an integer state index");
  const auto i = v.get<long long>();
  if (i < 0 || static_cast<std::size_t>(i) >= n)
    field_error(path, "state index " + std::to_string(i) + " outside 0.." + std::to_string(n - 1));
  return static_cast<std::size_t>(i);
}

nlohmann::ordered_json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

double number_field(const json &obj, const char *key) {
  if (!obj.contains(key)) field_error(key, "missing");
  const auto &v = obj.at(key);
  if (v.is_null()) return std::nan("");
  if (!v.is_number()) field_error(key, "expected a number");
  return v.get<double>();
}

std::string label_of(const FiniteChain &chain, std::size_t x) {
  return chain.labels().empty() ? std::to_string(x) : chain.labels()[x];
}

std::string csv_field(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

FiniteChain chain_from_json(const std::string &text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    std::string what = e.what();
    if (const auto pos = what.find("syntax error"); pos != std::string::npos) what = what.substr(pos);
    throw Error(ErrorCode::ParseError, "line " + line_column(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + what);
  }
  if (!doc.is_object()) field_error("<root>", "expected an object");
  if (!doc.contains("time")) field_error("time", "missing");
  if (!doc["time"].is_string()) field_error("time", "expected \"continuous\" or \"discrete\"");
  const auto kind_text = doc["time"].get<std::string>();
  TimeKind kind;
  if (kind_text == "continuous")
    kind = TimeKind::Continuous;
  else if (kind_text == "discrete")
    kind = TimeKind::Discrete;
  else
    field_error("time", "expected \"continuous\" or \"discrete\", got \"" + kind_text + "\"");

  if (!doc.contains("states")) field_error("states", "missing");
  const auto &states = doc["states"];
  if (!states.is_array() || states.empty()) field_error("states", "expected a nonempty array of labels");
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto &s = states[i];
    if (s.is_string())
      labels.push_back(s.get<std::string>());
    else if (s.is_number_integer() || s.is_number_unsigned())
      labels.push_back(std::to_string(s.get<long long>()));
    else
      field_error("states[" + std::to_string(i) + "]", "expected a string label");
  }
  const std::size_t n = labels.size();

  if (!doc.contains("entries")) field_error("entries", "missing");
  const auto &entries = doc["entries"];
  if (!entries.is_array()) field_error("entries", "expected an array of [from, to, value]");
  std::vector<Triplet> triplets;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const std::string path = "entries[" + std::to_string(k) + "]";
    const auto &e = entries[k];
    if (!e.is_array() || e.size() != 3) field_error(path, "expected [from, to, value]");
    const auto from = index_field(e[0], path + "[0]", n);
    const auto to = index_field(e[1], path + "[1]", n);
    if (!e[2].is_number()) field_error(path + "[2]", "expected a number");
    const double v = e[2].get<double>();
    if (!std::isfinite(v)) field_error(path + "[2]", "value is not finite");
    if (kind == TimeKind::Continuous && from == to)
      field_error(path, "diagonal rate for state " + std::to_string(from) + " given; it is derived");
    if (v < 0.0) field_error(path + "[2]", "negative value " + format_double(v));
    triplets.emplace_back(static_cast<int>(from), static_cast<int>(to), v);
  }
  return FiniteChain::from_entries(kind, n, triplets, std::move(labels));
}

std::string chain_to_json(const FiniteChain &chain) {
  // One entry per line keeps the files diffable.
  std::string out = "{\n  \"time\": ";
  out += chain.is_continuous() ? "\"continuous\"" : "\"discrete\"";
  out += ",\n  \"states\": [";
  for (std::size_t i = 0; i < chain.state_count(); ++i) out += (i ? ", " : "") + json(label_of(chain, i)).dump();
  out += "],\n  \"entries\": [";
  const auto &m = chain.matrix();
  bool first = true;
  for (Eigen::Index r = 0; r < m.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
      if (chain.is_continuous() && it.col() == r) continue;
      if (it.value() == 0.0) continue;
      out += first ? "\n    [" : ",\n    [";
      out += std::to_string(r) + ", " + std::to_string(it.col()) + ", " + format_double(it.value()) + "]";
      first = false;
    }
  out += first ? "]\n}\n" : "\n  ]\n}\n";
  return out;
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorCode::InvalidArgument, "write failed for " + path);
}

FiniteChain load_chain(const std::string &path) {
  try {
    return chain_from_json(read_file(path));
  } catch (const Error &e) {
    if (e.code() == ErrorCode::ParseError) throw Error(ErrorCode::ParseError, path + ": " + e.detail());
    throw;
  }
}

void save_chain(const FiniteChain &chain, const std::string &path) { write_file(path, chain_to_json(chain)); }

std::string measure_csv(const FiniteChain &chain, const ProbabilityVector &mu) {
  if (mu.size() != chain.state_count()) throw Error(ErrorCode::DimensionMismatch, "measure size");
  std::string out = "state_label,weight\n";
  for (std::size_t i = 0; i < mu.size(); ++i) out += csv_field(label_of(chain, i)) + "," + format_double(mu[i]) + "\n";
  return out;
}

std::string measure_json(const ProbabilityVector &mu) {
  std::string out = "[";
  for (std::size_t i = 0; i < mu.size(); ++i) out += (i ? "," : "") + format_double(mu[i]);
  return out + "]\n";
}

std::string distance_profile_csv(const std::vector<double> &times, const std::vector<DistanceProfile> &profile) {
  if (times.size() != profile.size()) throw Error(ErrorCode::DimensionMismatch, "times and profile differ in length");
  std::string out = "t,d,d_bar\n";
  for (std::size_t i = 0; i < times.size(); ++i)
    out += format_double(times[i]) + "," + format_double(profile[i].d) + "," + format_double(profile[i].d_bar) + "\n";
  return out;
}

std::string survival_csv(const SurvivalCurve &curve, double T) {
  std::string out = "t,survival,exp_reference,deviation\n";
  for (std::size_t i = 0; i < curve.times.size(); ++i) {
    const double ref = std::exp(-curve.times[i] / T);
    out += format_double(curve.times[i]) + "," + format_double(curve.survival[i]) + "," + format_double(ref) + "," +
           format_double(std::abs(curve.survival[i] - ref)) + "\n";
  }
  return out;
}

std::string report_csv(const ExponentialityReport &report) {
  std::string out = "start,t,survival,exp,weighted_deviation\n";
  for (const auto &c : report.curves)
    for (std::size_t i = 0; i < report.times.size(); ++i)
      out += csv_field(c.start) + "," + format_double(report.times[i]) + "," + format_double(c.tail[i]) + "," +
             format_double(c.prefactor * std::exp(-report.times[i] / report.T_star)) + "," +
             format_double(c.weighted_deviation[i]) + "\n";
  return out;
}

std::string samples_csv(const EmpiricalSurvival &samples) {
  std::string out = "trajectory_index,hitting_time,censored_flag\n";
  for (std::size_t i = 0; i < samples.per_trajectory.size(); ++i)
    out += std::to_string(i) + "," + format_double(samples.per_trajectory[i]) + "," +
           std::to_string(static_cast<int>(samples.censored_flags[i])) + "\n";
  return out;
}

std::string certificate_json(const HpGCertificate &cert) {
  nlohmann::ordered_json doc;
  doc["R"] = cert.R;
  doc["alpha"] = cert.alpha;
  doc["f"] = number_or_null(cert.f);
  doc["d"] = number_or_null(cert.d);
  doc["r"] = number_or_null(cert.r);
  doc["c"] = number_or_null(cert.c);
  doc["c_bar"] = number_or_null(cert.c_bar);
  doc["epsilon1"] = number_or_null(cert.epsilon1);
  doc["epsilon2"] = number_or_null(cert.epsilon2);
  doc["applicable"] = cert.applicable;
  doc["B_alpha"] = cert.B_alpha;
  return doc.dump(2) + "\n";
}

HpGCertificate certificate_from_json(const std::string &text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    throw Error(ErrorCode::ParseError, "line " + line_column(text, e.byte == 0 ? 0 : e.byte - 1) + ": certificate");
  }
  if (!doc.is_object()) field_error("<root>", "expected an object");
  HpGCertificate c;
  c.R = number_field(doc, "R");
  c.alpha = number_field(doc, "alpha");
  c.f = number_field(doc, "f");
  c.d = number_field(doc, "d");
  c.r = number_field(doc, "r");
  c.c = doc.contains("c") ? number_field(doc, "c") : c.r + 2.0 * std::pow(c.f, c.alpha);
  c.c_bar = number_field(doc, "c_bar");
  c.epsilon1 = number_field(doc, "epsilon1");
  c.epsilon2 = number_field(doc, "epsilon2");
  if (!doc.contains("applicable") || !doc["applicable"].is_boolean()) field_error("applicable", "expected a boolean");
  c.applicable = doc["applicable"].get<bool>();
  if (!doc.contains("B_alpha") || !doc["B_alpha"].is_array()) field_error("B_alpha", "expected an array of indices");
  for (std::size_t i = 0; i < doc["B_alpha"].size(); ++i) {
    const auto &v = doc["B_alpha"][i];
    if (!v.is_number_unsigned() && !v.is_number_integer()) field_error("B_alpha[" + std::to_string(i) + "]", "expected an index");
    c.B_alpha.push_back(v.get<std::size_t>());
  }
  return c;
}

}  // namespace metatrap
