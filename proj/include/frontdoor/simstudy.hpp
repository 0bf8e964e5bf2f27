#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "frontdoor/dgp.hpp"
#include "frontdoor/nuisance.hpp"

namespace frontdoor {

// Named nuisance-model assignment used in the Monte Carlo study.
struct ScenarioSpec {
  std::string id;
  NuisanceSpec spec;
  std::string description;

  // Built-in scenarios a..e (two-period study, single mediator per period).
  static ScenarioSpec builtin(char id);
};

struct MonteCarloConfig {
  std::vector<std::size_t> n{500, 1000, 2000, 3000, 4000, 5000};
  std::size_t reps = 1000;
  std::vector<std::string> estimators;
  std::vector<RegimeSpec> regimes{RegimeSpec{{1, 1}}, RegimeSpec{{0, 0}}};
  std::uint64_t seed = 1;
  double alpha = 0.05;
  // keyed by the regime's compact digit string ("11", "00"); empty = compute
  std::map<std::string, double> truth;
  std::size_t truth_draws = 1000000;
  int jobs = 1;

  void validate() const;
};

struct StudyRow {
  std::string scenario;
  std::string estimator;
  std::string regime;  // compact digits, e.g. "11"
  std::size_t n = 0;
  std::size_t reps = 0;  // completed replications
  double mean_psi = 0.0;
  double scaled_abs_bias = 0.0;
  double scaled_sd = 0.0;
  std::optional<double> coverage;
  std::optional<double> mean_se;
  std::size_t failures = 0;
};

struct StudyReport {
  std::vector<StudyRow> rows;
  std::map<std::string, double> truth;  // regime digits -> value
  bool truth_supplied = false;
};

StudyReport run_study(const MonteCarloConfig& config, const std::vector<ScenarioSpec>& scenarios,
                      const DiscreteDgp& dgp);

// Writes metrics.csv (and, when plots is set, bias.svg / sd.svg /
// coverage.svg) into out_dir.
void emit_report(const StudyReport& report, const std::string& out_dir, bool plots);

void write_metrics_csv(const StudyReport& report, std::ostream& os);
StudyReport parse_metrics_csv(std::istream& is);

// One self-contained line-chart SVG: a panel per scenario, a series per
// estimator, x = n, y = the chosen metric. metric: 0 bias, 1 sd, 2 coverage.
std::string render_metric_svg(const StudyReport& report, int metric);

// Full study config as accepted by the CLI.
struct StudyConfig {
  DiscreteDgp dgp;
  std::vector<ScenarioSpec> scenarios;
  MonteCarloConfig mc;
};

StudyConfig parse_study_config(const std::string& json_text);

}  // namespace frontdoor
