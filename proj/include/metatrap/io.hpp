#ifndef METATRAP_IO_HPP
#define METATRAP_IO_HPP

#include <string>
#include <vector>

#include "metatrap/hitting.hpp"
#include "metatrap/hpg.hpp"
#include "metatrap/measures.hpp"
#include "metatrap/montecarlo.hpp"

namespace metatrap {

/// Chain-spec JSON: {"time": "continuous"|"discrete", "states": [...],
/// "entries": [[from, to, value], ...]}. Continuous files list off-diagonal
/// rates only. Errors carry line:column or the offending field path.
FiniteChain chain_from_json(const std::string &text);
std::string chain_to_json(const FiniteChain &chain);
FiniteChain load_chain(const std::string &path);
void save_chain(const FiniteChain &chain, const std::string &path);

/// Shortest decimal that reads back to the same double.
std::string format_double(double v);

std::string measure_csv(const FiniteChain &chain, const ProbabilityVector &mu);
std::string measure_json(const ProbabilityVector &mu);
std::string distance_profile_csv(const std::vector<double> &times, const std::vector<DistanceProfile> &profile);
/// Columns t, survival, exp_reference = e^{-t/T}, deviation = |survival - exp_reference|.
std::string survival_csv(const SurvivalCurve &curve, double T);
/// Columns start, t, survival, exp, weighted_deviation; one block per start.
std::string report_csv(const ExponentialityReport &report);
std::string samples_csv(const EmpiricalSurvival &samples);

std::string certificate_json(const HpGCertificate &cert);
HpGCertificate certificate_from_json(const std::string &text);

std::string read_file(const std::string &path);
void write_file(const std::string &path, const std::string &content);

}  // namespace metatrap

#endif
