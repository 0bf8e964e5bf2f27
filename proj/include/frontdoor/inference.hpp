#pragma once

#include <Eigen/Dense>
#include <vector>

#include "frontdoor/nuisance.hpp"

namespace frontdoor {

// Per-row components of the influence function at a set of fitted (or
// targeted) nuisance values. All vectors align with dataset rows.
struct EifInputs {
  Eigen::VectorXd y;       // outcome
  Eigen::VectorXd qy_obs;  // Q_Y at the observed history
  Eigen::VectorXd h_top;   // H_T
  std::vector<Eigen::VectorXd> w;       // W_t, t = 0..T
  std::vector<Eigen::VectorXd> h_prev;  // H_{t-1}, t = 0..T (h_prev[0] all ones)
  std::vector<Eigen::VectorXd> q;       // Q_{M_0}..Q_{M_{T+1}} (size T+2)
  std::vector<Eigen::VectorXd> r_m_obs;  // R_{M_t} at the observed history
  std::vector<Eigen::VectorXd> r_a_obs;  // R_{A_t} at the observed history
  std::vector<Eigen::VectorXd> r_m1, r_m0;  // R_{M_t} with A_t set to 1 / 0
  std::vector<Eigen::VectorXd> a_obs;       // observed A_t
  std::vector<Eigen::VectorXd> pi1_obs;     // pi_t(1 | observed history)
  double psi_reference = 0.0;
};

struct EifBreakdown {
  Eigen::VectorXd d_y;
  std::vector<Eigen::VectorXd> d_m;
  std::vector<Eigen::VectorXd> d_a;
  Eigen::VectorXd plug_in;  // Q_{M_0}
  double psi_reference = 0.0;
  Eigen::VectorXd centered_total;       // d_y + sum d_m + sum d_a + plug_in - psi
  double max_form_discrepancy = 0.0;    // between the two D_A representations
};

// Assemble the influence-function breakdown; checks that the direct and
// clever-covariate forms of the treatment terms agree row-wise.
EifBreakdown assemble_eif(const EifInputs& inputs);

// Convenience path from a plain fitted nuisance set (refits the sequential
// regressions internally).
EifBreakdown compute_eif(const FittedNuisanceSet& set, double psi_reference);

// Inverse standard normal CDF, refined to near machine precision.
double normal_quantile(double p);

struct WaldInterval {
  double se = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool degenerate = false;  // zero variance
};

// se = sigma-hat / sqrt(n) with sigma^2 the empirical variance (divisor n-1)
// of the centered EIF values; weights allow probability-weighted rows.
WaldInterval wald_interval(const Eigen::VectorXd& eif_values, const Eigen::VectorXd& weights,
                           double psi_hat, double alpha);

}  // namespace frontdoor
