#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "frontdoor/dataset.hpp"
#include "frontdoor/dgp.hpp"

namespace frontdoor {

// Exact joint law of an all-binary DGP: one probability per configuration
// of all variables, plus the observed-law view with latents summed out.
class ExactJoint {
 public:
  ExactJoint(const DiscreteDgp& dgp, std::size_t config_cap = (1u << 22));

  const DiscreteDgp& dgp() const { return dgp_; }
  std::size_t n_vars() const { return dgp_.variables.size(); }

  // full-joint probability of the configuration encoded bitwise
  double joint_prob(std::uint64_t config) const { return probs_[config]; }

  const std::vector<std::string>& observed_names() const { return observed_names_; }
  std::size_t n_observed() const { return observed_names_.size(); }
  double observed_prob(std::uint64_t observed_config) const {
    return observed_probs_[observed_config];
  }

  // P(targets | conditions) from the observed law; assignments are
  // (observed-variable index, value) pairs.
  double conditional(const std::vector<std::pair<std::size_t, int>>& targets,
                     const std::vector<std::pair<std::size_t, int>>& conditions) const;

  // E[Y | conditions] from the observed law.
  double outcome_mean(const std::vector<std::pair<std::size_t, int>>& conditions) const;

  std::size_t observed_index(const std::string& name) const;

  // dataset with one row per observed configuration, weighted by its
  // exact probability; the substrate for population-level estimator tests
  LongitudinalDataset population_dataset() const;

 private:
  DiscreteDgp dgp_;
  std::vector<double> probs_;
  std::vector<std::string> observed_names_;
  std::vector<double> observed_probs_;
};

// Brute-force evaluation of the identifying functional over the observed law.
double exact_f_functional(const ExactJoint& joint, const RegimeSpec& regime);

// Exact counterfactual mean E[Y(a)] by enumerating the structural model
// with treatments clamped (latents retained).
double exact_counterfactual_mean(const DiscreteDgp& dgp, const RegimeSpec& regime);

ExactJoint enumerate_joint(const DiscreteDgp& dgp, std::size_t config_cap = (1u << 22));

}  // namespace frontdoor
