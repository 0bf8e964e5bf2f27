#pragma once

#include <optional>
#include <string>
#include <vector>

#include "frontdoor/dataset.hpp"
#include "frontdoor/inference.hpp"
#include "frontdoor/nuisance.hpp"

namespace frontdoor {

struct EstimateResult {
  std::string estimator;
  double psi_hat = 0.0;
  std::optional<double> se;
  std::optional<std::pair<double, double>> ci;
  double alpha = 0.05;
  std::vector<double> eif_values;  // centered, per row (empty when unavailable)
  std::optional<double> eif_mean;
  std::vector<std::string> diagnostics;
  RegimeSpec regime;
  std::size_t n = 0;

  std::string to_json() const;
};

enum class Ipw2Mode { Direct, Gamma };

EstimateResult estimate_ipw1(const LongitudinalDataset& data, const NuisanceSpec& spec,
                             const RegimeSpec& regime);

EstimateResult estimate_ipw2(const LongitudinalDataset& data, const NuisanceSpec& spec,
                             const RegimeSpec& regime, Ipw2Mode mode);

EstimateResult estimate_sr1(const LongitudinalDataset& data, const NuisanceSpec& spec,
                            const RegimeSpec& regime);

EstimateResult estimate_sr2(const LongitudinalDataset& data, const NuisanceSpec& spec,
                            const RegimeSpec& regime);

EstimateResult estimate_onestep(const LongitudinalDataset& data, const NuisanceSpec& spec,
                                const RegimeSpec& regime, double alpha = 0.05);

EstimateResult estimate_tmle(const LongitudinalDataset& data, const NuisanceSpec& spec,
                             const RegimeSpec& regime, double alpha = 0.05);

EstimateResult estimate_tmle_mediator(const LongitudinalDataset& data, const NuisanceSpec& spec,
                                      const RegimeSpec& regime, double alpha = 0.05,
                                      int max_iters = 20, double tol = 1e-4);

// Dispatch by id: ipw1, ipw2a, ipw2b, sr1, sr2, onestep, tmle, tmle_med.
EstimateResult run_estimator(const std::string& id, const LongitudinalDataset& data,
                             const NuisanceSpec& spec, const RegimeSpec& regime,
                             double alpha = 0.05);

}  // namespace frontdoor
