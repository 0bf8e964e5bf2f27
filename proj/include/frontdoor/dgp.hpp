#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "frontdoor/dataset.hpp"

namespace frontdoor {

enum class VarRole { Latent, Baseline, Treatment, Mediator, Outcome };

// One structural equation: Bernoulli with a logit linear in products of
// parent values, or a standard normal (baseline covariates only).
struct DgpVariable {
  std::string name;
  bool standard_normal = false;
  bool latent = false;
  double intercept = 0.0;
  // each coefficient multiplies the product of the named parents' values
  std::vector<std::pair<std::vector<std::string>, double>> coefficients;

  VarRole role() const;
  int time_index() const;  // for Treatment/Mediator roles
};

// Structural model in topological order. All-Bernoulli instances are the
// "discrete" DGPs accepted by the enumeration oracle; the built-in paper
// DGP additionally has one standard-normal baseline covariate.
struct DiscreteDgp {
  std::vector<DgpVariable> variables;

  std::size_t horizon() const;
  bool all_binary() const;
  void validate() const;  // ordering + front-door parent-set shape

  std::string to_json() const;
  static DiscreteDgp from_json(const std::string& text);

  static DiscreteDgp paper(std::size_t horizon = 1);
  static DiscreteDgp toy_v1();
  // "builtin:paper", "builtin:toy-v1", or a JSON file path
  static DiscreteDgp resolve(const std::string& ref);
};

// Draw n iid rows; latent variables are drawn but not emitted.
LongitudinalDataset simulate_paper_dgp(std::size_t n, std::uint64_t seed,
                                       const std::optional<DiscreteDgp>& override_dgp = std::nullopt);

LongitudinalDataset simulate_dgp(const DiscreteDgp& dgp, std::size_t n, std::uint64_t seed);

// Monte Carlo counterfactual mean: draws with A_t clamped to the regime.
double simulate_ground_truth(std::size_t n, std::uint64_t seed,
                             const RegimeSpec& regime, const DiscreteDgp& dgp);

}  // namespace frontdoor
