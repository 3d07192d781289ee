#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sqz/bench.hpp"
#include "sqz/trace.hpp"

namespace sqz {

// Smaller root of eta 4x/(1+x)^2 = 1 - 10^(-|dB|/10), the low-frequency squeezing level.
double infer_pump_parameter(double squeezing_db, double total_efficiency);

// Names accepted as free parameters.
const std::vector<std::string>& fit_parameter_names();

double get_parameter(const BenchConfig& bench, const std::string& name);

// Sets the typed field and the matching document entry, so the result can be written back out.
void apply_parameter(BenchConfig& bench, const std::string& name, double value);

struct ParameterBound {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
};

// Physical bounds used when the caller gives none.
ParameterBound default_bound(const std::string& name);

// "name" or "name:lower:upper".
ParameterBound parse_parameter_bound(const std::string& spec);

struct FitProblem {
  std::vector<NoiseTrace> observed;
  std::vector<ParameterBound> free_parameters;
  BenchConfig fixed;
  std::vector<std::vector<double>> weights;  // per trace and sample; empty means uniform in log frequency
  std::uint64_t seed = 0;

  std::vector<std::string> violations() const;
};

struct FitResult {
  std::vector<std::pair<std::string, double>> best_values;
  double objective = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::size_t best_start = 0;
  std::vector<double> history;            // best objective after each simplex iteration of the winning start
  std::vector<NoiseTrace> residual_traces;  // model/observed, one per observed trace
  BenchConfig fitted;

  double value(const std::string& name) const;
};

// Weighted least squares on dB residuals; Nelder-Mead from several low-discrepancy starts.
FitResult fit_spectrum(const FitProblem& problem);

// Objective of the problem at the given parameter values (order of free_parameters).
double fit_objective(const FitProblem& problem, const std::vector<double>& values);

// Fit report in the config format family.
void write_fit_report(std::ostream& out, const FitProblem& problem, const FitResult& result);

struct LossBudgetRow {
  std::string stage;
  double efficiency = 1.0;
  double cumulative_efficiency = 1.0;
  double max_squeezing_db = 0.0;  // capped at max_squeezing_cap_db
  bool capped = false;
  std::optional<double> pump_parameter_for_target;
};

struct LossBudget {
  std::vector<LossBudgetRow> rows;
  double total_efficiency = 1.0;
  double target_db = 0.0;
};

inline constexpr double max_squeezing_cap_db = 100.0;

LossBudget loss_budget(const BenchConfig& bench, double target_db = 3.8);

}  // namespace sqz
