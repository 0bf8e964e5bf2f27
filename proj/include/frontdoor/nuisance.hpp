#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "frontdoor/dataset.hpp"
#include "frontdoor/formula.hpp"
#include "frontdoor/glm.hpp"

namespace frontdoor {

enum class HMode { Direct, Gamma };

// Model assignments for every nuisance component at one horizon.
struct NuisanceSpec {
  std::vector<Formula> pi;                   // A_t ~ ..., t = 0..T
  std::vector<Formula> g;                    // M_t ~ ..., optional (binary M)
  std::vector<std::vector<Formula>> gamma1;  // [t][j], j = 0..t: A_j ~ (.., M-bar_t)
  std::vector<std::vector<Formula>> gamma2;  // [t][j], j = 0..t: A_j ~ (.., M-bar_{t-1})
  Formula qy;                                // Y ~ ...
  std::vector<Formula> qm;                   // Q_{M_t} ~ ..., t = 0..T
  std::vector<Formula> r;                    // kappa_t ~ ..., t = 0..T
  HMode h_mode = HMode::Direct;
  std::optional<double> truncate;
  bool sequential_logistic = false;  // sequential fits default to OLS

  std::size_t horizon() const { return pi.size() - 1; }
  void validate(std::size_t data_horizon) const;

  std::string to_json() const;
  static NuisanceSpec from_json(const std::string& text);
};

// All fitted nuisance models for one (dataset, spec, regime), with
// evaluation helpers. Immutable after construction; rows of every
// returned vector align with the dataset.
class FittedNuisanceSet {
 public:
  FittedNuisanceSet(const LongitudinalDataset& data, NuisanceSpec spec, RegimeSpec regime);

  const LongitudinalDataset& data() const { return *data_; }
  const NuisanceSpec& spec() const { return spec_; }
  const RegimeSpec& regime() const { return regime_; }
  std::size_t horizon() const { return regime_.values.size() - 1; }
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

  const FittedGlm& pi_fit(std::size_t t) const { return pi_fits_[t]; }
  const FittedGlm& qy_fit() const { return qy_fit_; }
  const FittedGlm& g_fit(std::size_t t) const { return g_fits_[t]; }
  bool has_g() const { return !g_fits_.empty(); }
  bool has_gamma() const { return !gamma1_fits_.empty(); }

  // P(A_t = 1 | L0, M-bar_{t-1}, A-bar_{t-1} = bits of a_hist) per row
  Eigen::VectorXd predict_pi(std::size_t t, std::uint64_t a_hist) const;
  Eigen::VectorXd predict_pi_obs(std::size_t t) const;

  // E[Y | L0, A-bar_T = bits of a_hist, M-bar_T observed] per row
  Eigen::VectorXd predict_qy(std::uint64_t a_hist) const;
  Eigen::VectorXd predict_qy_obs() const;

  // P(M_t = 1 | L0, A-bar_t, M-bar_{t-1}); treatments at the regime when
  // regime_treatments, otherwise observed
  Eigen::VectorXd predict_g(std::size_t t, bool regime_treatments) const;

  // density of A_j under the gamma classifiers; a_hist supplies A-bar_{j-1}
  // and the evaluation value a_j; mediators M-bar_t (gamma1) or M-bar_{t-1}
  // (gamma2) are observed
  Eigen::VectorXd gamma1_density(std::size_t t, std::size_t j, std::uint64_t a_hist) const;
  Eigen::VectorXd gamma2_density(std::size_t t, std::size_t j, std::uint64_t a_hist) const;
  Eigen::VectorXd gamma1_density_obs(std::size_t t, std::size_t j) const;
  Eigen::VectorXd gamma2_density_obs(std::size_t t, std::size_t j) const;

  // observed treatment history of row i through time t, packed bitwise
  std::uint64_t observed_history(std::size_t row, std::size_t t) const;
  bool matches_regime(std::size_t row, std::size_t t) const;

  const ColumnBindings& bindings() const { return bindings_; }

 private:
  Eigen::VectorXd predict_binary_model(const FittedGlm& fit, const Formula& f,
                                       std::uint64_t a_hist, std::size_t n_a_override) const;

  const LongitudinalDataset* data_;
  NuisanceSpec spec_;
  RegimeSpec regime_;
  ColumnBindings bindings_;
  std::vector<FittedGlm> pi_fits_;
  std::vector<FittedGlm> g_fits_;
  std::vector<std::vector<FittedGlm>> gamma1_fits_, gamma2_fits_;
  FittedGlm qy_fit_;
  std::vector<std::string> diagnostics_;
  std::vector<std::vector<std::uint64_t>> obs_hist_;  // [t][row]
};

FittedNuisanceSet fit_nuisance_set(const LongitudinalDataset& data, const NuisanceSpec& spec,
                                   const RegimeSpec& regime);

// Mediator density-ratio weight H_t per row; t = -1 gives all ones.
// truncation_hits (optional) counts rows clipped by the spec bound.
Eigen::VectorXd compute_H(const FittedNuisanceSet& set, int t,
                          std::size_t* truncation_hits = nullptr);

// Inverse-propensity weight W_t per row (zero off the regime's support).
Eigen::VectorXd compute_W(const FittedNuisanceSet& set, int t,
                          std::size_t* truncation_hits = nullptr);

// Pooled regression of a per-row pseudo-outcome on the given formula,
// predicted with A_0..A_t overridden to the regime. Logistic fits clamp the
// pseudo-outcome into (0,1) first.
Eigen::VectorXd sequential_fit_predict(const FittedNuisanceSet& set, const Formula& f,
                                       const Eigen::VectorXd& pseudo, std::size_t t,
                                       bool logistic);

// Sum over all treatment histories a' of Q_Y(L0, a', M-bar_T) times the
// product of propensity densities along a' (the terminal pseudo-outcome).
Eigen::VectorXd compute_terminal_pseudo(const FittedNuisanceSet& set);

// Q-sequence: element t holds Q_{M_t} per row for t = 0..T, element T+1 the
// terminal pseudo-outcome.
std::vector<Eigen::VectorXd> sequential_Q(const FittedNuisanceSet& set);

// R-sequence products of the kappa recursions.
struct SequentialR {
  // kappa[t][h]: per-row kappa_t(L0, h, M-bar_{t-1}) for every treatment
  // history h of length t+1 (bit k = a_k)
  std::vector<std::vector<Eigen::VectorXd>> kappa;
  // r_a[t][h']: per-row R_{A_t}(L0, h', M-bar_{t-1}) for histories of length t
  std::vector<std::vector<Eigen::VectorXd>> r_a;

  // observed-row selections
  Eigen::VectorXd r_m_obs(const FittedNuisanceSet& set, std::size_t t) const;
  Eigen::VectorXd r_m_at(const FittedNuisanceSet& set, std::size_t t, int a_value) const;
  Eigen::VectorXd r_a_obs(const FittedNuisanceSet& set, std::size_t t) const;
  const Eigen::VectorXd& r_a0() const { return r_a[0][0]; }
};

SequentialR sequential_R(const FittedNuisanceSet& set);

}  // namespace frontdoor
